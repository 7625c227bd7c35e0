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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "distclip/data/augment.hpp"
#include "distclip/data/manifest.hpp"
#include "distclip/data/sampling.hpp"
#include "distclip/data/tokenizer.hpp"
#include "distclip/model/embed.hpp"
#include "distclip/model/encoders.hpp"
#include "distclip/objectives/losses.hpp"
#include "distclip/objectives/teacher.hpp"
#include "distclip/train/config.hpp"
#include "distclip/train/optim.hpp"

namespace distclip {

/// Everything needed to continue training: the step counter addresses every
/// random draw, so no generator state is stored separately.
template <typename T>
struct TrainState {
  TrainConfig config;
  ModelParams<T> student;
  TeacherState<T> teacher;
  AdamMoments<T> moments;
  std::uint64_t step = 0;

  friend bool operator==(const TrainState& a, const TrainState& b) {
    return nlohmann::json(a.config) == nlohmann::json(b.config) && a.student == b.student &&
           a.teacher == b.teacher && a.moments == b.moments && a.step == b.step;
  }
};

template <typename T = float>
TrainState<T> initial_state(const TrainConfig& config) {
  config.validate();
  ModelParams<T> student = init_model<T>(config.model, config.seed);
  TeacherState<T> teacher = TeacherState<T>::from_student(student, config.ema_momentum,
                                                          config.tau_t, config.center_momentum);
  AdamMoments<T> moments = AdamMoments<T>::zeros_like(student.tensors);
  return {config, std::move(student), std::move(teacher), std::move(moments), 0};
}

/// One training example after caption sampling and view generation.
struct TrainingSample {
  std::vector<std::int32_t> tokens;
  ViewBundle views;
};

/// Loss components of one step. Teacher outputs are plain tensors: the
/// teacher never enters the student's tape.
template <typename T>
struct StepLoss {
  Var<T> total;
  Var<T> contrastive;
  std::optional<Var<T>> distillation;
  std::vector<Tensor<T>> teacher_logits;  // B * n_global rows of K
  std::vector<Tensor<T>> teacher_dists;
};

/// Records the student's loss for one batch on `bind`'s tape.
///
/// Contrastive: captions against the first global view. Combined mode adds
/// self-distillation: the teacher sees the global views, the student sees
/// every view, and the per-image losses are averaged over the batch.
template <typename T>
StepLoss<T> build_step_loss(ParamBinder<T>& bind, const TeacherState<T>& teacher,
                            const TrainConfig& cfg, const std::vector<TrainingSample>& batch) {
  if (batch.empty()) throw ContractError("build_step_loss: empty batch");
  bind.bind_all();
  const bool combined = cfg.loss_mode == LossMode::kCombined;
  std::vector<Var<T>> captions, images, per_sample;
  StepLoss<T> out{};

  Tape<T> teacher_tape;
  ParamBinder<T> teacher_bind(teacher_tape, teacher.params, false);

  for (const auto& sample : batch) {
    captions.push_back(encode_text(bind, sample.tokens));
    const Var<T> first = encode_image(bind, sample.views.first_global());
    images.push_back(first);
    if (!combined) continue;

    DistributionSet<T> dists;
    for (std::size_t g = 0; g < sample.views.global_views.size(); ++g) {
      const Tensor<T> logits =
          project_dino(teacher_bind, encode_image(teacher_bind, sample.views.global_views[g]))
              .value();
      dists.teacher.push_back(teacher_distribution(logits, teacher));
      out.teacher_dists.push_back(dists.teacher.back());
      out.teacher_logits.push_back(logits);
    }
    for (std::size_t v = 0; v < sample.views.size(); ++v) {
      const Var<T> embedding = v == 0 ? first : encode_image(bind, sample.views.view(v));
      dists.student.push_back(
          student_distribution(project_dino(bind, embedding), static_cast<T>(cfg.tau_s)));
    }
    per_sample.push_back(self_distillation_loss(
        dists, cfg.distill_raw_sum ? PairReduction::kSum : PairReduction::kMean));
  }

  const Var<T> tau = exp(bind(param_names::kLogTemperature));
  out.contrastive = info_nce_loss(ContrastiveBatch<T>{concat_rows(captions), concat_rows(images), tau});
  if (!combined) {
    out.total = out.contrastive;
    return out;
  }
  out.distillation = mean_n(per_sample);
  out.total = combined_loss(out.contrastive, *out.distillation);
  return out;
}

struct StepMetrics {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  double infonce = 0.0;
  double selfsuper = 0.0;
  double combined = 0.0;
  double lr = 0.0;
  double teacher_entropy = 0.0;
  double temperature = 0.0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StepMetrics, step, epoch, infonce, selfsuper, combined, lr,
                                   teacher_entropy, temperature)

/// Epoch-level permutation of record indices, keyed on (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  KeyedStream rng(seed, RngDomain::kShuffle, static_cast<std::uint32_t>(epoch),
                  static_cast<std::uint32_t>(epoch >> 32));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

/// Drives optimization over the train split of a manifest.
template <typename T = float>
class Trainer {
 public:
  Trainer(TrainConfig config, const std::vector<ImageCaptionRecord>& records,
          const std::filesystem::path& base_dir = {})
      : config_(std::move(config)) {
    config_.validate();
    for (const auto* r : select_split(records, Split::kTrain)) {
      records_.push_back(*r);
      images_.push_back(load_image(r->image, base_dir));
    }
    if (records_.empty()) throw ContractError("training needs at least one train record");
    batch_size_ = std::min(config_.batch_size, records_.size());
    policy_ = config_.sampling;
    policy_.seed = config_.seed;
  }

  const TrainConfig& config() const { return config_; }
  const std::vector<ImageCaptionRecord>& records() const { return records_; }
  const std::vector<Tensor<float>>& images() const { return images_; }
  std::size_t batch_size() const { return batch_size_; }
  std::size_t steps_per_epoch() const { return records_.size() / batch_size_; }
  std::uint64_t total_steps() const { return steps_per_epoch() * config_.epochs; }
  std::uint64_t warmup_steps() const { return steps_per_epoch() * config_.warmup_epochs; }

  /// Caption sampling and view generation for the records of one step.
  std::vector<TrainingSample> make_batch(std::uint64_t step) const {
    const std::uint64_t epoch = step / steps_per_epoch();
    const std::size_t offset = (step % steps_per_epoch()) * batch_size_;
    const auto order = epoch_order(records_.size(), config_.seed, epoch);
    std::vector<TrainingSample> batch;
    for (std::size_t i = offset; i < offset + batch_size_; ++i) {
      const std::size_t idx = order[i];
      const CaptionRecord caption = sample_caption(records_[idx], idx, epoch, policy_);
      KeyedStream stream(config_.seed, RngDomain::kAugmentation, static_cast<std::uint32_t>(epoch),
                         static_cast<std::uint32_t>(idx));
      batch.push_back({tokenize(caption.text, config_.model.text.max_length),
                       make_views(images_[idx], config_.augmentation, stream)});
    }
    return batch;
  }

  /// One optimization step: forward, backward, AdamW, temperature clamp,
  /// then the teacher EMA and center updates.
  StepMetrics step(TrainState<T>& state) const {
    const std::uint64_t step = state.step;
    const std::vector<TrainingSample> batch = make_batch(step);
    Tape<T> tape;
    ParamBinder<T> bind(tape, state.student);
    const std::uint64_t epoch = step / steps_per_epoch();
    StepLoss<T> loss;
    try {
      loss = build_step_loss(bind, state.teacher, config_, batch);
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(step) + " (epoch " + std::to_string(epoch) +
                         "): " + e.what());
    }

    StepMetrics m;
    m.step = step;
    m.epoch = epoch;
    m.infonce = static_cast<double>(loss.contrastive.value().item());
    m.selfsuper = loss.distillation ? static_cast<double>(loss.distillation->value().item()) : 0.0;
    m.combined = static_cast<double>(loss.total.value().item());
    m.lr = lr_schedule(step, total_steps(), warmup_steps(), config_.learning_rate);
    m.teacher_entropy = mean_distribution_entropy(loss.teacher_dists);
    m.temperature = static_cast<double>(state.student.temperature());

    auto diagnose = [&](const std::string& what) {
      return NumericError("non-finite " + what + " at step " + std::to_string(step) + " (epoch " +
                          std::to_string(m.epoch) + "): infonce=" + std::to_string(m.infonce) +
                          " selfsuper=" + std::to_string(m.selfsuper) +
                          " tau=" + std::to_string(m.temperature));
    };
    if (!std::isfinite(m.combined)) throw diagnose("loss");
    const GradientMap<T> grads = tape.backward(loss.total);
    for (const auto& [name, g] : grads)
      if (!g.all_finite()) throw diagnose("gradient for '" + name + "'");

    const bool freeze_tau = config_.freeze_temperature;
    const bool freeze_scale = config_.freeze_projector_scale;
    adamw_step<T>(
        state.student.tensors, grads, state.moments, m.lr, config_.adamw(),
        decay_matrices_only<T>,
        [freeze_tau, freeze_scale](const std::string& name, const Tensor<T>&) {
          return (freeze_tau && name == param_names::kLogTemperature) ||
                 (freeze_scale && name == param_names::kProjectorScale);
        });
    Tensor<T>& log_tau = state.student.tensors.at(param_names::kLogTemperature);
    log_tau[0] = std::clamp(log_tau[0], static_cast<T>(std::log(config_.min_temperature)),
                            static_cast<T>(std::log(config_.max_temperature)));
    if (!state.student.all_finite()) throw diagnose("parameters");

    if (config_.loss_mode == LossMode::kCombined) {
      ema_update(state.teacher, state.student);
      if (config_.centering) {
        const std::size_t k = state.teacher.center.size();
        Tensor<T> stacked(Shape{loss.teacher_logits.size(), k});
        for (std::size_t r = 0; r < loss.teacher_logits.size(); ++r)
          std::copy(loss.teacher_logits[r].data().begin(), loss.teacher_logits[r].data().end(),
                    stacked.data().begin() + r * k);
        update_center(state.teacher, stacked);
      }
    }
    state.step += 1;
    return m;
  }

  /// Steps until `stop_at_step` (default: the end of training), reporting
  /// each step to `on_step`.
  void run(TrainState<T>& state, std::optional<std::uint64_t> stop_at_step = std::nullopt,
           const std::function<void(const StepMetrics&, const TrainState<T>&)>& on_step = {}) const {
    const std::uint64_t end = std::min(stop_at_step.value_or(total_steps()), total_steps());
    while (state.step < end) {
      const StepMetrics m = step(state);
      if (on_step) on_step(m, state);
    }
  }

 private:
  TrainConfig config_;
  std::vector<ImageCaptionRecord> records_;
  std::vector<Tensor<float>> images_;
  std::size_t batch_size_ = 1;
  EpochSamplingPolicy policy_;
};

}  // namespace distclip
