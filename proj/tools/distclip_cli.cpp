// Copyright 2026 The distclip Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// distclip command-line tool.
//
// Exit codes: 0 success, 2 validation error, 3 numeric abort, 4 I/O error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "distclip/distclip.hpp"

namespace fs = std::filesystem;
using namespace distclip;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string manifest;
  std::string checkpoint;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config, bool checkpoint) {
  if (config) cmd->add_option("--config", o.config, "JSON training config");
  cmd->add_option("--seed", o.seed, "Seed override");
  cmd->add_option("--manifest", o.manifest, "JSON-lines image-caption manifest");
  if (checkpoint) cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  cmd->add_option("--out", o.out, "Output path");
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ValidationError(flag + " is required");
}

fs::path manifest_dir(const std::string& manifest) {
  return fs::absolute(fs::path(manifest)).parent_path();
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Split split_option(const std::string& s) {
  try {
    return parse_split(s);
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
}

std::vector<const ImageCaptionRecord*> records_of(const std::vector<ImageCaptionRecord>& records,
                                                  const std::string& split) {
  if (split == "all") {
    std::vector<const ImageCaptionRecord*> out;
    for (const auto& r : records) out.push_back(&r);
    return out;
  }
  return select_split(records, split_option(split));
}

// --- train -------------------------------------------------------------------

struct TrainOptions {
  CommonOptions common;
  bool exclude_english = false;
  bool freeze_temperature = false;
  std::optional<std::string> sampling;
  std::optional<std::string> loss_mode;
  std::optional<std::size_t> epochs;
  std::size_t checkpoint_every = 1;
};

int run_train(const TrainOptions& o) {
  require(o.common.manifest, "--manifest");
  require(o.common.out, "--out");
  if (o.common.config.empty() && o.common.checkpoint.empty()) {
    throw ValidationError("--config is required unless resuming from --checkpoint");
  }
  // A resumed run starts from the stored configuration. Flags still override it.
  TrainState<float> state;
  TrainConfig cfg;
  if (!o.common.checkpoint.empty()) {
    state = load_checkpoint(o.common.checkpoint);
    cfg = state.config;
    if (!o.common.config.empty() &&
        nlohmann::json(load_train_config(o.common.config)) != nlohmann::json(cfg)) {
      std::cerr << "note: --config ignored, using the configuration stored in the checkpoint\n";
    }
  } else {
    cfg = load_train_config(o.common.config);
  }
  if (o.common.seed) cfg.seed = *o.common.seed;
  if (o.exclude_english) cfg.sampling.exclude_english = true;
  if (o.freeze_temperature) cfg.freeze_temperature = true;
  if (o.sampling) cfg.sampling.mode = nlohmann::json(*o.sampling).get<SamplingMode>();
  if (o.loss_mode) cfg.loss_mode = nlohmann::json(*o.loss_mode).get<LossMode>();
  if (o.epochs) cfg.epochs = *o.epochs;
  cfg.validate();
  if (o.common.checkpoint.empty()) {
    state = initial_state<float>(cfg);
  } else {
    state.config = cfg;
  }

  const auto records = load_manifest(o.common.manifest);
  const fs::path out_dir = o.common.out;
  fs::create_directories(out_dir);
  const Trainer<float> trainer(cfg, records, manifest_dir(o.common.manifest));

  std::ofstream metrics(out_dir / "metrics.jsonl",
                        state.step == 0 ? std::ios::trunc : std::ios::app);
  if (!metrics) throw IoError("cannot write '" + (out_dir / "metrics.jsonl").string() + "'");
  const fs::path ckpt = out_dir / "checkpoint.bin";
  const std::uint64_t per_epoch = trainer.steps_per_epoch();
  std::cerr << "training " << trainer.records().size() << " records, batch "
            << trainer.batch_size() << ", " << trainer.total_steps() << " steps\n";
  trainer.run(state, std::nullopt, [&](const StepMetrics& m, const TrainState<float>& s) {
    metrics << nlohmann::json(m).dump() << "\n";
    if (s.step % per_epoch == 0) {
      metrics.flush();
      const std::uint64_t epoch = s.step / per_epoch;
      if (o.checkpoint_every > 0 && epoch % o.checkpoint_every == 0) save_checkpoint(s, ckpt);
      std::cerr << "epoch " << epoch << "/" << cfg.epochs << " loss " << m.combined << "\n";
    }
  });
  save_checkpoint(state, ckpt);
  std::cout << ckpt.string() << "\n";
  return 0;
}

// --- eval-retrieval ----------------------------------------------------------

struct EvalOptions {
  CommonOptions common;
  std::string language = "en";
  std::string split = "test";
  bool dedupe = false;
};

int run_eval(const EvalOptions& o) {
  require(o.common.checkpoint, "--checkpoint");
  require(o.common.manifest, "--manifest");
  const TrainState<float> state = load_checkpoint(o.common.checkpoint);
  const auto records = load_manifest(o.common.manifest);
  const auto selected = records_of(records, o.split);
  const RetrievalReport r = evaluate_model(state.student, selected, o.language, o.dedupe,
                                           manifest_dir(o.common.manifest));
  nlohmann::json j = report_to_json(r);
  j["language"] = resolve_language(o.language);
  j["split"] = o.split;
  j["images"] = selected.size();
  std::cout << report_csv_header() << "\n" << report_csv_row(r) << "\n";
  if (!o.common.out.empty()) write_json(o.common.out, j);
  return 0;
}

// --- zero-shot ---------------------------------------------------------------

struct ZeroShotOptions {
  CommonOptions common;
  std::string split = "test";
  std::string prompt = std::string(ZeroShotTemplate().text());
  std::vector<std::string> classes;
};

int run_zero_shot(const ZeroShotOptions& o) {
  require(o.common.checkpoint, "--checkpoint");
  require(o.common.manifest, "--manifest");
  const TrainState<float> state = load_checkpoint(o.common.checkpoint);
  const auto records = load_manifest(o.common.manifest);
  const auto selected = records_of(records, o.split);
  std::vector<std::string> classes = o.classes;
  if (classes.empty()) {
    std::set<std::string> names;
    for (const auto& r : records)
      if (r.label) names.insert(*r.label);
    classes.assign(names.begin(), names.end());
  }
  std::vector<Tensor<float>> images;
  for (const auto* r : selected) {
    if (!r->label) throw ValidationError("record '" + r->id + "' has no label");
    images.push_back(load_image(r->image, manifest_dir(o.common.manifest)));
  }
  const ZeroShotTemplate prompt(o.prompt);
  const std::function<Tensor<float>(const std::string&)> encoder = [&](const std::string& text) {
    const Tensor<float> e = embed_texts(state.student, {text});
    return e.reshaped(Shape{e.size()});
  };
  const auto predicted =
      zero_shot_classify(embed_images(state.student, images), classes, prompt, encoder);
  std::size_t correct = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const bool ok = classes[predicted[i]] == *selected[i]->label;
    correct += ok;
    rows.push_back({{"id", selected[i]->id},
                    {"label", *selected[i]->label},
                    {"predicted", classes[predicted[i]]}});
  }
  const double accuracy =
      selected.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(selected.size());
  std::printf("accuracy %.2f (%zu/%zu)\n", accuracy, correct, selected.size());
  if (!o.common.out.empty()) {
    write_json(o.common.out, {{"template", prompt.text()},
                              {"classes", classes},
                              {"accuracy", round2(accuracy)},
                              {"predictions", rows}});
  }
  return 0;
}

// --- export-embeddings -------------------------------------------------------

struct ExportOptions {
  CommonOptions common;
  std::string kind = "image";
  std::string language = "en";
  std::string split = "all";
};

int run_export(const ExportOptions& o) {
  require(o.common.checkpoint, "--checkpoint");
  require(o.common.manifest, "--manifest");
  require(o.common.out, "--out");
  if (o.kind != "image" && o.kind != "text") throw ValidationError("--kind must be image or text");
  const TrainState<float> state = load_checkpoint(o.common.checkpoint);
  const auto records = load_manifest(o.common.manifest);
  const auto selected = records_of(records, o.split);

  Tensor<float> rows;
  std::vector<std::string> ids;
  if (o.kind == "image") {
    std::vector<Tensor<float>> images;
    for (const auto* r : selected) {
      images.push_back(load_image(r->image, manifest_dir(o.common.manifest)));
      ids.push_back(r->id);
    }
    rows = embed_images(state.student, images);
  } else {
    const CaptionCorpus corpus = collect_captions(selected, o.language);
    std::vector<std::size_t> seen(selected.size(), 0);
    for (std::size_t c = 0; c < corpus.owner.size(); ++c)
      ids.push_back(selected[corpus.owner[c]]->id + "#" + std::to_string(seen[corpus.owner[c]]++));
    rows = embed_texts(state.student, corpus.texts);
  }

  const fs::path bin = o.common.out;
  {
    auto out = open_output(bin);
    for (float v : rows.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      const unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16),
                                   static_cast<unsigned char>(bits >> 24)};
      out.write(reinterpret_cast<const char*>(le), 4);
    }
    if (!out) throw IoError("failed writing '" + bin.string() + "'");
  }
  fs::path sidecar = bin;
  sidecar += ".json";
  write_json(sidecar, {{"count", ids.size()},
                       {"dim", state.student.config.embed_dim()},
                       {"dtype", "float32-le"},
                       {"kind", o.kind},
                       {"ids", ids}});
  std::cout << bin.string() << "\n";
  return 0;
}

// --- translation prompts -----------------------------------------------------

struct TranslationOptions {
  CommonOptions common;
  std::string language;
  std::string translations;
};

int run_build_translation_prompts(const TranslationOptions& o) {
  require(o.common.manifest, "--manifest");
  require(o.common.out, "--out");
  require(o.language, "--language");
  const auto records = load_manifest(o.common.manifest);
  const auto code = resolve_language(o.language);
  write_record_file(build_translation_prompts(records, std::string(*language_name(code))),
                    o.common.out);
  return 0;
}

int run_ingest_translations(const TranslationOptions& o) {
  require(o.common.manifest, "--manifest");
  require(o.common.out, "--out");
  require(o.language, "--language");
  require(o.translations, "--translations");
  const auto records = load_manifest(o.common.manifest);
  const auto responses = read_record_file(o.translations);
  save_manifest(ingest_translations(records, responses, o.language), o.common.out);
  return 0;
}

// --- LMCap prompts -----------------------------------------------------------

struct LmcapOptions {
  CommonOptions common;
  std::string language = "en";
  std::string split = "test";
  std::string fewshot;
  std::size_t k = kLmcapRetrieved;
};

int run_build_lmcap_prompts(const LmcapOptions& o) {
  require(o.common.checkpoint, "--checkpoint");
  require(o.common.manifest, "--manifest");
  require(o.common.out, "--out");
  const TrainState<float> state = load_checkpoint(o.common.checkpoint);
  const auto records = load_manifest(o.common.manifest);
  const fs::path base = manifest_dir(o.common.manifest);
  const std::string code = resolve_language(o.language);
  const std::string name(*language_name(code));

  // Retrieval gallery: captions of the train split in the target language.
  const auto gallery_records = select_split(records, Split::kTrain);
  const CaptionCorpus gallery = collect_captions(gallery_records, code);
  if (gallery.texts.empty()) throw ValidationError("train split has no captions to retrieve");
  const Tensor<float> gallery_emb = embed_texts(state.student, gallery.texts);
  const std::size_t k = std::min(o.k, gallery.texts.size());

  auto retrieve = [&](const ImageCaptionRecord& r, bool exclude_self) {
    const Tensor<float> e = embed_images(state.student, {load_image(r.image, base)});
    const auto ranked = retrieve_top_k(e.reshaped(Shape{e.size()}), gallery_emb, gallery.texts.size());
    std::vector<std::string> out;
    for (std::size_t idx : ranked) {
      if (out.size() == k) break;
      if (exclude_self && gallery_records[gallery.owner[idx]]->id == r.id) continue;
      out.push_back(gallery.texts[idx]);
    }
    return out;
  };

  std::vector<std::string> blocks;
  if (!o.fewshot.empty()) {
    blocks = read_record_file(o.fewshot);
  } else {
    for (std::string_view cls : kLmcapShotClasses) {
      auto it = std::find_if(gallery_records.begin(), gallery_records.end(), [&](const auto* r) {
        return r->label && *r->label == cls;
      });
      if (it == gallery_records.end()) {
        throw ValidationError("no train record labelled '" + std::string(cls) +
                              "' for the few-shot examples; pass --fewshot");
      }
      blocks.push_back(build_lmcap_example_block(retrieve(**it, true), name,
                                                 (*it)->captions.at(code).front()));
    }
  }

  std::vector<std::string> prompts;
  nlohmann::json ids = nlohmann::json::array();
  for (const auto* r : records_of(records, o.split)) {
    prompts.push_back(build_lmcap_prompt(retrieve(*r, false), name, blocks));
    ids.push_back(r->id);
  }
  write_record_file(prompts, o.common.out);
  fs::path sidecar = o.common.out;
  sidecar += ".json";
  write_json(sidecar, {{"language", code}, {"k", k}, {"shots", blocks.size()}, {"ids", ids}});
  return 0;
}

// --- make-splits -------------------------------------------------------------

struct SplitOptions {
  CommonOptions common;
  std::string image_root;
  std::string classes;
};

ClassFiles list_class_directories(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: '" + root.string() + "'");
  ClassFiles out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    auto& files = out[entry.path().filename().string()];
    for (const auto& f : fs::directory_iterator(entry.path()))
      if (f.is_regular_file()) files.push_back(f.path().filename().string());
    std::sort(files.begin(), files.end());
  }
  return out;
}

int run_make_splits(const SplitOptions& o) {
  require(o.common.out, "--out");
  const std::uint64_t seed = o.common.seed.value_or(42);
  const int sources = !o.common.manifest.empty() + !o.image_root.empty() + !o.classes.empty();
  if (sources != 1) throw ValidationError("give exactly one of --manifest, --image-root, --classes");

  if (!o.common.manifest.empty()) {
    auto records = load_manifest(o.common.manifest);
    ClassFiles by_class;
    for (const auto& r : records) {
      if (!r.label) throw ValidationError("record '" + r.id + "' has no label");
      by_class[*r.label].push_back(r.id);
    }
    const SplitResult s = split_80_20(by_class, seed);
    std::set<std::string> test_ids;
    for (const auto& [_, ids] : s.test) test_ids.insert(ids.begin(), ids.end());
    for (auto& r : records) r.split = test_ids.count(r.id) ? Split::kTest : Split::kTrain;
    save_manifest(records, o.common.out);
    return 0;
  }

  ClassFiles classes;
  if (!o.image_root.empty()) {
    classes = list_class_directories(o.image_root);
  } else {
    std::ifstream in(o.classes);
    if (!in) throw IoError("cannot open '" + o.classes + "'");
    classes = nlohmann::json::parse(in).get<ClassFiles>();
  }
  const SplitResult s = split_80_20(classes, seed);
  write_json(o.common.out, {{"seed", seed}, {"train", s.train}, {"test", s.test}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distclip: multilingual image-text training and evaluation"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train a model on a manifest");
  add_common(c_train, train.common, true, true);
  c_train->add_flag("--exclude-english-from-sampling", train.exclude_english,
                    "In one_translation mode, sample only translated captions");
  c_train->add_flag("--freeze-temperature", train.freeze_temperature,
                    "Keep the contrastive temperature fixed");
  c_train->add_option("--sampling", train.sampling, "english_only or one_translation");
  c_train->add_option("--loss-mode", train.loss_mode, "combined or infonce_only");
  c_train->add_option("--epochs", train.epochs, "Override the configured epoch count");
  c_train->add_option("--checkpoint-every", train.checkpoint_every,
                      "Save every N epochs (0: only at the end)");

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval-retrieval", "Image-text retrieval recall");
  add_common(c_eval, eval.common, false, true);
  c_eval->add_option("--language", eval.language, "Caption language for queries");
  c_eval->add_option("--split", eval.split, "train, val, test or all");
  c_eval->add_flag("--dedupe-captions", eval.dedupe, "Drop repeated captions within a record");

  ZeroShotOptions zs;
  auto* c_zs = app.add_subcommand("zero-shot", "Zero-shot scene classification");
  add_common(c_zs, zs.common, false, true);
  c_zs->add_option("--split", zs.split, "train, val, test or all");
  c_zs->add_option("--template", zs.prompt, "Prompt with one {class name} slot");
  c_zs->add_option("--classes", zs.classes, "Class names (default: labels in the manifest)");

  ExportOptions ex;
  auto* c_ex = app.add_subcommand("export-embeddings", "Write embeddings as float32 rows");
  add_common(c_ex, ex.common, false, true);
  c_ex->add_option("--kind", ex.kind, "image or text");
  c_ex->add_option("--language", ex.language, "Caption language for text embeddings");
  c_ex->add_option("--split", ex.split, "train, val, test or all");

  TranslationOptions tp;
  auto* c_tp = app.add_subcommand("build-translation-prompts",
                                  "One translation prompt per English caption");
  add_common(c_tp, tp.common, false, false);
  c_tp->add_option("--language", tp.language, "Target language")->required();

  TranslationOptions ti;
  auto* c_ti = app.add_subcommand("ingest-translations", "Attach translated captions");
  add_common(c_ti, ti.common, false, false);
  c_ti->add_option("--language", ti.language, "Language of the translations")->required();
  c_ti->add_option("--translations", ti.translations, "Response file")->required();

  LmcapOptions lm;
  auto* c_lm = app.add_subcommand("build-lmcap-prompts", "Retrieval-conditioned captioning prompts");
  add_common(c_lm, lm.common, false, true);
  c_lm->add_option("--language", lm.language, "Target caption language");
  c_lm->add_option("--split", lm.split, "Split of the query images");
  c_lm->add_option("--fewshot", lm.fewshot, "File of preformatted few-shot blocks");
  c_lm->add_option("-k,--retrieved", lm.k, "Captions retrieved per image");

  SplitOptions sp;
  auto* c_sp = app.add_subcommand("make-splits", "Seeded 80/20 split per class");
  add_common(c_sp, sp.common, false, false);
  c_sp->add_option("--image-root", sp.image_root, "Directory with one subdirectory per class");
  c_sp->add_option("--classes", sp.classes, "JSON object mapping class to file names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kValidation);
  }

  try {
    if (c_train->parsed()) return run_train(train);
    if (c_eval->parsed()) return run_eval(eval);
    if (c_zs->parsed()) return run_zero_shot(zs);
    if (c_ex->parsed()) return run_export(ex);
    if (c_tp->parsed()) return run_build_translation_prompts(tp);
    if (c_ti->parsed()) return run_ingest_translations(ti);
    if (c_lm->parsed()) return run_build_lmcap_prompts(lm);
    if (c_sp->parsed()) return run_make_splits(sp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  }
  return static_cast<int>(ExitCode::kValidation);
}
