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

#include <filesystem>
#include <map>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "distclip/core/random.hpp"
#include "distclip/data/augment.hpp"
#include "distclip/data/image.hpp"
#include "distclip/data/manifest.hpp"
#include "distclip/data/prompts.hpp"
#include "distclip/data/sampling.hpp"
#include "distclip/data/tokenizer.hpp"

namespace distclip {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("distclip_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ImageCaptionRecord all_language_record(std::size_t captions) {
  ImageCaptionRecord r;
  r.id = "multi";
  r.image = SyntheticImage{1, 8};
  for (const auto& lang : kSupportedLanguages) {
    std::vector<std::string> list;
    for (std::size_t i = 0; i < captions; ++i)
      list.push_back(std::string(lang.code) + "-" + std::to_string(i));
    r.captions[std::string(lang.code)] = list;
  }
  return r;
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_p_value(double statistic, double dof) {
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

// --- counter-based generators ------------------------------------------------

TEST(Philox4x32, PublishedKnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}),
            (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(SplitMix64, ReferenceSequence) {
  SplitMix64 a(0);
  EXPECT_EQ(a.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(a.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(a.next(), 0x06c45d188009454fULL);
  SplitMix64 b(1234567);
  EXPECT_EQ(b.next(), 6457827717110365317ULL);
  EXPECT_EQ(b.next(), 3203168211198807973ULL);
  EXPECT_EQ(b.next(), 9817491932198370423ULL);
}

TEST(StableHash, Fnv1aReferenceValues) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(stable_hash("foobar"), 0x85944171f73967e8ULL);
}

TEST(KeyedStream, AddressedDrawsAreReproducibleAndIndependent) {
  KeyedStream a(5, RngDomain::kAugmentation, 1, 2, 3);
  KeyedStream b(5, RngDomain::kAugmentation, 1, 2, 3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(a.next_u32(), b.next_u32());
  KeyedStream c(5, RngDomain::kAugmentation, 1, 2, 4);
  KeyedStream d(5, RngDomain::kShuffle, 1, 2, 3);
  KeyedStream e(5, RngDomain::kAugmentation, 1, 2, 3);
  const auto first = e.next_u64();
  EXPECT_NE(c.next_u64(), first);
  EXPECT_NE(d.next_u64(), first);
  KeyedStream f = KeyedStream(5, RngDomain::kAugmentation, 1, 2, 9).with_last(3);
  EXPECT_EQ(f.next_u64(), first);
}

TEST(KeyedStream, UniformBelowIsUnbiased) {
  KeyedStream rng(11, RngDomain::kTest);
  std::vector<double> counts(7, 0.0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[rng.below(7)] += 1;
  double stat = 0;
  for (double c : counts) stat += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_GT(chi_square_p_value(stat, 6), 0.001);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double t = rng.truncated_normal(0.5);
    EXPECT_LE(std::abs(t), 1.0);
  }
}

// --- manifests ---------------------------------------------------------------

TEST(Manifest, EmptyInputGivesEmptyList) {
  std::istringstream in("");
  EXPECT_TRUE(parse_manifest(in).empty());
  std::istringstream blank("\n  \n");
  EXPECT_TRUE(parse_manifest(blank).empty());
}

TEST(Manifest, EnglishOnlyRecordIsValid) {
  std::istringstream in(
      R"({"image": {"synthetic": {"seed": 3, "size": 16}}, "captions": {"en": ["a lake", "water"]}, "split": "test"})");
  const auto records = parse_manifest(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].id, "0");
  EXPECT_EQ(records[0].split, Split::kTest);
  EXPECT_EQ(std::get<SyntheticImage>(records[0].image), (SyntheticImage{3, 16}));
  EXPECT_EQ(records[0].english().size(), 2u);
}

TEST(Manifest, ShorterTranslationListIsValidationError) {
  std::istringstream in(
      R"({"id": "r7", "image": "a.ppm", "captions": {"en": ["one", "two"], "de": ["eins"]}})");
  try {
    parse_manifest(in);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("r7"), std::string::npos);
  }
}

TEST(Manifest, RejectsUnknownLanguageAndMissingEnglish) {
  std::istringstream unknown(R"({"image": "a.ppm", "captions": {"en": ["x"], "xx": ["y"]}})");
  EXPECT_THROW(parse_manifest(unknown), ValidationError);
  std::istringstream no_english(R"({"image": "a.ppm", "captions": {"de": ["x"]}})");
  EXPECT_THROW(parse_manifest(no_english), ValidationError);
  std::istringstream empty_caption(R"({"image": "a.ppm", "captions": {"en": [""]}})");
  EXPECT_THROW(parse_manifest(empty_caption), ValidationError);
}

TEST(Manifest, MalformedLineIsParseErrorWithLineNumber) {
  std::istringstream in(
      "{\"image\": \"a.ppm\", \"captions\": {\"en\": [\"x\"]}}\n\n{not json\n");
  try {
    parse_manifest(in, "m.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("m.jsonl:3"), std::string::npos) << e.what();
  }
  std::istringstream bad_split(R"({"image": "a.ppm", "captions": {"en": ["x"]}, "split": "dev"})");
  EXPECT_THROW(parse_manifest(bad_split), ParseError);
}

TEST(Manifest, FileRoundTripAndMissingFile) {
  const fs::path dir = temp_dir("manifest");
  std::vector<ImageCaptionRecord> records{all_language_record(2)};
  records[0].label = "lake";
  records.push_back(records[0]);
  records[1].id = "second";
  records[1].image = std::string("img/b.ppm");
  records[1].split = Split::kVal;
  save_manifest(records, dir / "m.jsonl");
  EXPECT_EQ(load_manifest(dir / "m.jsonl"), records);
  EXPECT_THROW(load_manifest(dir / "missing.jsonl"), IoError);
}

TEST(Manifest, SelectSplit) {
  std::vector<ImageCaptionRecord> records(3, all_language_record(1));
  records[1].split = Split::kTest;
  EXPECT_EQ(select_split(records, Split::kTrain).size(), 2u);
  EXPECT_EQ(select_split(records, Split::kTest).size(), 1u);
  EXPECT_EQ(select_split(records, Split::kVal).size(), 0u);
}

// --- caption sampling --------------------------------------------------------

TEST(SampleCaption, EnglishOnlySingletonIsAlwaysChosen) {
  ImageCaptionRecord r;
  r.captions["en"] = {"only caption"};
  r.captions["de"] = {"einzige"};
  const EpochSamplingPolicy policy{SamplingMode::kEnglishOnly, 9, false};
  for (std::size_t epoch = 0; epoch < 50; ++epoch) {
    EXPECT_EQ(sample_caption(r, 0, epoch, policy), (CaptionRecord{"only caption", "en"}));
  }
}

TEST(SampleCaption, DeterministicForSameAddress) {
  const auto r = all_language_record(5);
  const EpochSamplingPolicy policy{SamplingMode::kOneTranslation, 3, false};
  for (std::size_t epoch = 0; epoch < 20; ++epoch)
    EXPECT_EQ(sample_caption(r, 4, epoch, policy), sample_caption(r, 4, epoch, policy));
  int differs = 0;
  for (std::size_t epoch = 0; epoch < 20; ++epoch)
    differs += !(sample_caption(r, 4, epoch, policy) == sample_caption(r, 5, epoch, policy));
  EXPECT_GT(differs, 10);
}

TEST(SampleCaption, LanguageFrequenciesAreUniform) {
  const auto r = all_language_record(1);
  const EpochSamplingPolicy policy{SamplingMode::kOneTranslation, 17, false};
  std::map<std::string, int> counts;
  const int epochs = 10000;
  for (int e = 0; e < epochs; ++e) counts[sample_caption(r, 0, e, policy).language]++;
  ASSERT_EQ(counts.size(), 10u);
  for (const auto& [lang, c] : counts) EXPECT_NEAR(c / double(epochs), 0.1, 0.01) << lang;
}

TEST(SampleCaption, JointIndexLanguageChoiceIsUniformChiSquare) {
  const auto r = all_language_record(5);
  const EpochSamplingPolicy policy{SamplingMode::kOneTranslation, 23, false};
  std::map<std::string, int> counts;
  const int draws = 20000;
  for (int e = 0; e < draws; ++e) {
    const auto c = sample_caption(r, 7, e, policy);
    counts[c.text]++;
    EXPECT_EQ(c.text.substr(0, 2), c.language);
  }
  ASSERT_EQ(counts.size(), 50u);
  const double expected = draws / 50.0;
  double stat = 0;
  for (const auto& [_, c] : counts) stat += (c - expected) * (c - expected) / expected;
  EXPECT_GT(chi_square_p_value(stat, 49), 0.001) << "chi2 = " << stat;
}

TEST(SampleCaption, EnglishOnlyIndexIsUniform) {
  const auto r = all_language_record(4);
  const EpochSamplingPolicy policy{SamplingMode::kEnglishOnly, 1, false};
  std::map<std::string, int> counts;
  for (int e = 0; e < 8000; ++e) {
    const auto c = sample_caption(r, 0, e, policy);
    EXPECT_EQ(c.language, "en");
    counts[c.text]++;
  }
  ASSERT_EQ(counts.size(), 4u);
  double stat = 0;
  for (const auto& [_, c] : counts) stat += (c - 2000.0) * (c - 2000.0) / 2000.0;
  EXPECT_GT(chi_square_p_value(stat, 3), 0.001);
}

TEST(SampleCaption, ExcludeEnglishFlag) {
  auto r = all_language_record(2);
  const EpochSamplingPolicy policy{SamplingMode::kOneTranslation, 2, true};
  for (int e = 0; e < 500; ++e) EXPECT_NE(sample_caption(r, 0, e, policy).language, "en");
  ImageCaptionRecord only_en;
  only_en.captions["en"] = {"x"};
  EXPECT_EQ(sample_caption(only_en, 0, 0, policy).language, "en");
}

TEST(SampleCaption, PolicyJson) {
  const EpochSamplingPolicy p{SamplingMode::kOneTranslation, 12, true};
  const nlohmann::json j = p;
  EXPECT_EQ(j.at("mode"), "one_translation");
  const auto back = j.get<EpochSamplingPolicy>();
  EXPECT_EQ(back.mode, p.mode);
  EXPECT_EQ(back.seed, 12u);
  EXPECT_TRUE(back.exclude_english);
}

// --- multi-crop views --------------------------------------------------------

TEST(MakeViews, DefaultBundleHasTenViewsAtInputSize) {
  const auto img = synthesize_image(4, 48);
  const AugmentationConfig cfg;
  const ViewBundle b = make_views(img, cfg, KeyedStream(1, RngDomain::kAugmentation));
  EXPECT_EQ(b.global_views.size(), 2u);
  EXPECT_EQ(b.local_views.size(), 8u);
  EXPECT_EQ(b.size(), 10u);
  for (std::size_t v = 0; v < b.size(); ++v) EXPECT_EQ(b.view(v).shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(&b.first_global(), &b.global_views[0]);
}

TEST(MakeViews, DisabledAugmentationReturnsResizedInput) {
  const auto img = synthesize_image(4, 32);
  const ViewBundle same = make_views(img, AugmentationConfig::disabled(32, 16, 2),
                                     KeyedStream(1, RngDomain::kAugmentation));
  for (const auto& g : same.global_views)
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(g[i], img[i], 1e-6);

  const auto big = synthesize_image(4, 40);
  Tensor<float> expected = resize_bicubic(big, 32);
  augment::clamp_unit(expected);
  const ViewBundle resized = make_views(big, AugmentationConfig::disabled(32, 16, 0),
                                        KeyedStream(1, RngDomain::kAugmentation));
  EXPECT_EQ(resized.global_views[0], expected);
  EXPECT_EQ(resized.global_views[1], expected);
}

TEST(MakeViews, SameStreamIsBitIdenticalAndViewsDependOnlyOnTheirIndex) {
  const auto img = synthesize_image(6, 40);
  AugmentationConfig cfg;
  const KeyedStream stream(8, RngDomain::kAugmentation, 2, 5);
  const ViewBundle a = make_views(img, cfg, stream);
  const ViewBundle b = make_views(img, cfg, stream);
  for (std::size_t v = 0; v < a.size(); ++v) EXPECT_EQ(a.view(v), b.view(v));

  cfg.n_local = 3;
  const ViewBundle fewer = make_views(img, cfg, stream);
  for (std::size_t v = 0; v < fewer.size(); ++v) EXPECT_EQ(fewer.view(v), a.view(v));

  const ViewBundle other = make_views(img, cfg, KeyedStream(8, RngDomain::kAugmentation, 2, 6));
  EXPECT_FALSE(other.view(0) == a.view(0));
}

TEST(MakeViews, OutputsStayInUnitRange) {
  AugmentationConfig cfg;
  cfg.jitter_strength = 2.0;
  cfg.solarize_prob = 1.0;
  for (std::uint32_t s = 0; s < 20; ++s) {
    const auto img = synthesize_image(s, 36);
    const ViewBundle b = make_views(img, cfg, KeyedStream(s, RngDomain::kAugmentation, s));
    for (std::size_t v = 0; v < b.size(); ++v)
      for (float x : b.view(v).data()) {
        EXPECT_GE(x, 0.0f);
        EXPECT_LE(x, 1.0f);
      }
  }
}

TEST(MakeViews, ImageSmallerThanLocalCropIsSizeError) {
  const AugmentationConfig cfg;
  EXPECT_THROW(make_views(synthesize_image(1, 12), cfg, KeyedStream(0, RngDomain::kAugmentation)),
               DimensionError);
  EXPECT_THROW(make_views(Tensor<float>(Shape{1, 32, 32}), cfg,
                          KeyedStream(0, RngDomain::kAugmentation)),
               DimensionError);
}

TEST(AugmentationConfig, ValidationAndJson) {
  AugmentationConfig c;
  EXPECT_NO_THROW(c.validate());
  c.flip_prob = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AugmentationConfig{};
  c.n_global = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AugmentationConfig{};
  c.local_scale = {0.5, 0.2};
  EXPECT_THROW(c.validate(), ValidationError);
  c = AugmentationConfig{};
  c.local_crop_size = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  const auto back = nlohmann::json(AugmentationConfig::disabled(8, 4, 1)).get<AugmentationConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(AugmentationConfig::disabled(8, 4, 1)));
}

TEST(Augment, PrimitiveProperties) {
  const auto img = synthesize_image(2, 10);
  Tensor<float> f = img;
  augment::hflip(f);
  EXPECT_EQ(f[0], img[9]);
  augment::hflip(f);
  EXPECT_EQ(f, img);

  Tensor<float> g = img;
  augment::grayscale(g);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(g[i], g[100 + i]);
    EXPECT_EQ(g[i], g[200 + i]);
  }

  Tensor<float> flat(Shape{3, 6, 6}, 0.3f);
  augment::gaussian_blur(flat, 1.3);
  for (float v : flat.data()) EXPECT_NEAR(v, 0.3f, 1e-6);

  Tensor<float> s = Tensor<float>::vector({0.2f, 0.5f, 0.9f}).reshaped(Shape{3, 1, 1});
  augment::solarize(s, 0.5);
  EXPECT_FLOAT_EQ(s[0], 0.2f);
  EXPECT_FLOAT_EQ(s[1], 0.5f);
  EXPECT_FLOAT_EQ(s[2], 0.1f);
}

TEST(Augment, RandomResizedBoxStaysInsideImage) {
  KeyedStream rng(3, RngDomain::kTest);
  for (int i = 0; i < 2000; ++i) {
    const auto box = augment::random_resized_box(20, 30, {0.05, 1.0}, {0.75, 4.0 / 3.0}, rng);
    EXPECT_GE(box.height, 1u);
    EXPECT_GE(box.width, 1u);
    EXPECT_LE(box.top + box.height, 20u);
    EXPECT_LE(box.left + box.width, 30u);
  }
  const auto full = augment::random_resized_box(16, 16, {1.0, 1.0}, {1.0, 1.0}, rng);
  EXPECT_EQ(full.height, 16u);
  EXPECT_EQ(full.width, 16u);
}

// --- tokenizer ---------------------------------------------------------------

TEST(Tokenize, FramingAndByteIds) {
  EXPECT_EQ(tokenize("", 16), (std::vector<std::int32_t>{kSentinelToken, kEndToken}));
  EXPECT_EQ(tokenize("a", 16),
            (std::vector<std::int32_t>{kSentinelToken, kByteOffset + 'a', kEndToken}));
  const auto t = tokenize("abcdef", 5);
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(detokenize(t), "abc");
  EXPECT_EQ(t.back(), kEndToken);
  EXPECT_THROW(tokenize("a", 1), DomainError);
}

TEST(Tokenize, AllLanguagesRoundTripBytes) {
  const std::vector<std::string> samples{
      "a large airport",          "ein grosser Flughafen",   "un grand aéroport",
      "un gran aeropuerto",       "一个大型机场",             "um grande aeroporto",
      "un grande aeroporto",      "большой аэропорт",        "큰 공항",
      "een groot vliegveld"};
  for (const auto& s : samples) {
    const auto ids = tokenize(s, 256);
    EXPECT_EQ(ids.size(), s.size() + 2);
    EXPECT_EQ(detokenize(ids), s);
    for (auto id : ids) EXPECT_LT(id, static_cast<std::int32_t>(kByteVocabularySize));
  }
}

// --- translation prompts -----------------------------------------------------

TEST(TranslationPrompt, ExactTemplate) {
  EXPECT_EQ(build_translation_prompt("a large airport", "German"),
            "Translate the following text from English into German.\nEnglish: a large "
            "airport\nGerman:");
  EXPECT_EQ(build_translation_prompt("two\nlines", "French"),
            "Translate the following text from English into French.\nEnglish: two\nlines\nFrench:");
  EXPECT_EQ(build_translation_prompt("", "Korean"),
            "Translate the following text from English into Korean.\nEnglish: \nKorean:");
  EXPECT_THROW(build_translation_prompt("x", "Klingon"), DomainError);
  EXPECT_THROW(build_translation_prompt("x", "de"), DomainError);
}

TEST(TranslationPrompt, OnePromptPerEnglishCaptionInOrder) {
  std::vector<ImageCaptionRecord> records(2);
  records[0].captions["en"] = {"a", "b"};
  records[1].captions["en"] = {"c"};
  const auto prompts = build_translation_prompts(records, "Dutch");
  ASSERT_EQ(prompts.size(), 3u);
  EXPECT_EQ(prompts[2], build_translation_prompt("c", "Dutch"));
}

TEST(RecordFile, FormatParseRoundTrip) {
  const std::vector<std::string> records{"first\nwith two lines", "", "third"};
  const std::string text = format_record_file(records);
  EXPECT_EQ(text, "first\nwith two lines\n\x1e\n\n\x1e\nthird\n");
  EXPECT_EQ(parse_record_file(text), records);
  EXPECT_TRUE(parse_record_file("").empty());
  EXPECT_EQ(parse_record_file("a\r\n\x1e\r\nb\r\n"), (std::vector<std::string>{"a", "b"}));
  const fs::path dir = temp_dir("records");
  write_record_file(records, dir / "r.txt");
  EXPECT_EQ(read_record_file(dir / "r.txt"), records);
  EXPECT_THROW(read_record_file(dir / "none.txt"), IoError);
}

TEST(IngestTranslations, EmptyManifestAndEmptyFile) {
  EXPECT_TRUE(ingest_translations({}, {}, "German").empty());
}

TEST(IngestTranslations, AttachesOneToOne) {
  std::vector<ImageCaptionRecord> records(2);
  records[0].id = "a";
  records[0].captions["en"] = {"x", "y"};
  records[1].id = "b";
  records[1].captions["en"] = {"z"};
  const auto out = ingest_translations(records, {" X ", "Y", "Z\n"}, "German");
  EXPECT_EQ(out[0].captions.at("de"), (std::vector<std::string>{"X", "Y"}));
  EXPECT_EQ(out[1].captions.at("de"), (std::vector<std::string>{"Z"}));
  EXPECT_EQ(ingest_translations(records, {"1", "2", "3"}, "fr")[1].captions.at("fr")[0], "3");
}

TEST(IngestTranslations, CountMismatchIsAlignmentError) {
  std::vector<ImageCaptionRecord> records(1);
  records[0].captions["en"] = {"x", "y"};
  try {
    ingest_translations(records, {"only one"}, "German");
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("expected 2"), std::string::npos) << what;
    EXPECT_NE(what.find("got 1"), std::string::npos) << what;
  }
  EXPECT_THROW(ingest_translations(records, {"a", ""}, "German"), ValidationError);
}

// --- images ------------------------------------------------------------------

TEST(Images, SyntheticImagesAreDeterministicAndDistinct) {
  const auto a = synthesize_image(7, 16);
  EXPECT_EQ(a, synthesize_image(7, 16));
  EXPECT_FALSE(a == synthesize_image(8, 16));
  EXPECT_EQ(a.shape(), (Shape{3, 16, 16}));
  for (float v : a.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Images, PpmRoundTripAndErrors) {
  const fs::path dir = temp_dir("ppm");
  const auto img = synthesize_image(3, 9);
  save_ppm(img, dir / "a.ppm");
  const auto back = load_image(std::string("a.ppm"), dir);
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], 0.5 / 255.0 + 1e-6);
  EXPECT_THROW(load_ppm(dir / "missing.ppm"), IoError);
  {
    std::ofstream out(dir / "bad.ppm");
    out << "P3\n1 1\n255\n0 0 0\n";
  }
  EXPECT_THROW(load_ppm(dir / "bad.ppm"), ParseError);
  {
    std::ofstream out(dir / "short.ppm", std::ios::binary);
    out << "P6\n# comment\n4 4\n255\nabc";
  }
  EXPECT_THROW(load_ppm(dir / "short.ppm"), IoError);
}

}  // namespace
}  // namespace distclip
