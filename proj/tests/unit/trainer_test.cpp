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
#include <fstream>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "../common/fixture.hpp"
#include "distclip/train/checkpoint.hpp"
#include "distclip/train/optim.hpp"
#include "distclip/train/trainer.hpp"

namespace distclip {
namespace {

namespace fs = std::filesystem;

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.vision = {8, 4, 8, 1, 2, 4};
  c.model.text = {259, 12, 8, 1, 2, 4};
  c.model.dino = {6, 5, 7};
  c.model.init_std = 0.2;
  c.augmentation.global_crop_size = 8;
  c.augmentation.local_crop_size = 4;
  c.augmentation.n_local = 2;
  c.batch_size = 3;
  c.epochs = 4;
  c.warmup_epochs = 1;
  c.learning_rate = 1e-2;
  c.seed = 3;
  return c;
}

std::vector<ImageCaptionRecord> tiny_records(std::size_t n = 6) {
  auto records = fixture::overfit_records(12);
  records.resize(n);
  return records;
}

// --- AdamW -------------------------------------------------------------------

ParamTree<double> scalar_tree(double p) { return {{"p", Tensor<double>::vector({p})}}; }

TEST(AdamW, ZeroGradientWithoutDecayIsFixedPoint) {
  ParamTree<double> params{{"w", Tensor<double>::matrix(2, 2, {1, -2, 3, 0.5})},
                           {"b", Tensor<double>::vector({0.25})}};
  const ParamTree<double> before = params;
  auto moments = AdamMoments<double>::zeros_like(params);
  GradientMap<double> grads{{"w", Tensor<double>(Shape{2, 2})}, {"b", Tensor<double>(Shape{1})}};
  for (int i = 0; i < 5; ++i) adamw_step(params, grads, moments, 0.1, {0.9, 0.98, 1e-6, 0.0});
  EXPECT_EQ(params, before);
  EXPECT_EQ(moments.step, 5u);
}

TEST(AdamW, SingleStepMatchesHandComputation) {
  // m = 0.1 g, v = 0.001 g^2; bias correction restores g and g^2.
  const double p0 = 0.5, g = 0.2, lr = 0.1, eps = 1e-8;
  auto params = scalar_tree(p0);
  auto moments = AdamMoments<double>::zeros_like(params);
  adamw_step(params, {{"p", Tensor<double>::vector({g})}}, moments, lr, {0.9, 0.999, eps, 0.0});
  const double m = 0.1 * g, v = 0.001 * g * g;
  const double m_hat = m / (1 - 0.9), v_hat = v / (1 - 0.999);
  EXPECT_NEAR(params.at("p")[0], p0 - lr * m_hat / (std::sqrt(v_hat) + eps), 1e-15);
  EXPECT_NEAR(params.at("p")[0], p0 - lr * g / (std::abs(g) + eps), 1e-12);
  EXPECT_NEAR(moments.m.at("p")[0], m, 1e-17);
  EXPECT_NEAR(moments.v.at("p")[0], v, 1e-19);
}

TEST(AdamW, SecondStepUsesAccumulatedMoments) {
  auto params = scalar_tree(1.0);
  auto moments = AdamMoments<double>::zeros_like(params);
  const AdamWOptions opt{0.9, 0.98, 1e-6, 0.0};
  adamw_step(params, {{"p", Tensor<double>::vector({1.0})}}, moments, 0.01, opt);
  adamw_step(params, {{"p", Tensor<double>::vector({-3.0})}}, moments, 0.01, opt);
  const double m = 0.9 * 0.1 + 0.1 * -3.0;
  const double v = 0.98 * 0.02 + 0.02 * 9.0;
  const double step2 = 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.98 * 0.98)) + 1e-6);
  const double step1 = 0.01 * 1.0 / (1.0 + 1e-6);
  EXPECT_NEAR(params.at("p")[0], 1.0 - step1 - step2, 1e-14);
}

TEST(AdamW, DecoupledWeightDecayOnly) {
  auto params = scalar_tree(2.0);
  auto moments = AdamMoments<double>::zeros_like(params);
  adamw_step(params, {{"p", Tensor<double>::vector({0.0})}}, moments, 1.0, {0.9, 0.98, 1e-6, 0.1});
  EXPECT_DOUBLE_EQ(params.at("p")[0], 2.0 - 0.1 * 2.0);
}

TEST(AdamW, StructuralMismatchIsContractError) {
  auto params = scalar_tree(1.0);
  auto moments = AdamMoments<double>::zeros_like(params);
  EXPECT_THROW(adamw_step(params, {}, moments, 0.1, {}), ContractError);
  EXPECT_THROW(adamw_step(params, {{"q", Tensor<double>::vector({1.0})}}, moments, 0.1, {}),
               ContractError);
  EXPECT_THROW(adamw_step(params, {{"p", Tensor<double>::vector({1.0, 2.0})}}, moments, 0.1, {}),
               ContractError);
  auto other = AdamMoments<double>::zeros_like({{"p", Tensor<double>(Shape{3})}});
  EXPECT_THROW(adamw_step(params, {{"p", Tensor<double>::vector({1.0})}}, other, 0.1, {}),
               ContractError);
}

TEST(AdamW, FrozenAndDecayPredicates) {
  ParamTree<double> params{{"w", Tensor<double>::matrix(1, 2, {1, 1})},
                           {"b", Tensor<double>::vector({1})}};
  auto moments = AdamMoments<double>::zeros_like(params);
  GradientMap<double> grads{{"w", Tensor<double>(Shape{1, 2})}, {"b", Tensor<double>(Shape{1})}};
  adamw_step<double>(params, grads, moments, 1.0, {0.9, 0.98, 1e-6, 0.5},
                     decay_matrices_only<double>);
  EXPECT_DOUBLE_EQ(params.at("w")[0], 0.5);
  EXPECT_DOUBLE_EQ(params.at("b")[0], 1.0);
  adamw_step<double>(params, grads, moments, 1.0, {0.9, 0.98, 1e-6, 0.5}, {},
                     [](const std::string& name, const Tensor<double>&) { return name == "w"; });
  EXPECT_DOUBLE_EQ(params.at("w")[0], 0.5);
  EXPECT_DOUBLE_EQ(params.at("b")[0], 0.5);
}

TEST(LrSchedule, WarmupApexAndCosineEnd) {
  EXPECT_EQ(lr_schedule(0, 100, 10, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(5, 100, 10, 0.1), 0.05);
  EXPECT_DOUBLE_EQ(lr_schedule(10, 100, 10, 0.1), 0.1);
  EXPECT_NEAR(lr_schedule(55, 100, 10, 0.1), 0.05, 1e-12);
  EXPECT_NEAR(lr_schedule(100, 100, 10, 0.1), 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(lr_schedule(0, 100, 0, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(lr_schedule(3, 5, 5, 0.1), 0.06);
  double prev = 1.0;
  for (std::uint64_t s = 10; s <= 100; ++s) {
    const double lr = lr_schedule(s, 100, 10, 0.1);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

// --- configuration -----------------------------------------------------------

TEST(TrainConfig, DefaultsValidateAndRoundTrip) {
  const TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 2.5e-4);
  EXPECT_EQ(c.warmup_epochs, 10u);
  EXPECT_DOUBLE_EQ(c.ema_momentum, 0.996);
  const nlohmann::json j = tiny_config();
  EXPECT_EQ(nlohmann::json(j.get<TrainConfig>()), j);
  EXPECT_EQ(j.at("loss_mode"), "combined");
}

TEST(TrainConfig, RejectsInvalidValues) {
  auto expect_invalid = [](auto mutate) {
    TrainConfig c = tiny_config();
    mutate(c);
    EXPECT_THROW(c.validate(), ValidationError);
  };
  expect_invalid([](TrainConfig& c) { c.batch_size = 0; });
  expect_invalid([](TrainConfig& c) { c.learning_rate = 0; });
  expect_invalid([](TrainConfig& c) { c.warmup_epochs = c.epochs + 1; });
  expect_invalid([](TrainConfig& c) { c.betas = {1.0, 0.9}; });
  expect_invalid([](TrainConfig& c) { c.ema_momentum = 1.5; });
  expect_invalid([](TrainConfig& c) { c.tau_t = 0; });
  expect_invalid([](TrainConfig& c) { c.min_temperature = 10; });
  expect_invalid([](TrainConfig& c) { c.augmentation.global_crop_size = 16; });
}

TEST(TrainConfig, LoadFromFile) {
  const fs::path dir = fs::temp_directory_path() / "distclip_trainer_config";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "partial.json");
    out << R"({"seed": 9, "loss_mode": "infonce_only", "model": )"
        << nlohmann::json(tiny_config().model).dump() << R"(, "augmentation": )"
        << nlohmann::json(tiny_config().augmentation).dump() << "}";
  }
  const TrainConfig c = load_train_config(dir / "partial.json");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.loss_mode, LossMode::kInfoNceOnly);
  EXPECT_EQ(c.batch_size, 128u);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"seed\": ";
  }
  EXPECT_THROW(load_train_config(dir / "broken.json"), ValidationError);
  {
    std::ofstream out(dir / "wrongtype.json");
    out << R"({"loss_mode": "both"})";
  }
  EXPECT_THROW(load_train_config(dir / "wrongtype.json"), ValidationError);
  EXPECT_THROW(load_train_config(dir / "missing.json"), IoError);
}

// --- checkpoints -------------------------------------------------------------

TrainState<float> trained_state(std::uint64_t steps) {
  const Trainer<float> trainer(tiny_config(), tiny_records());
  TrainState<float> state = initial_state<float>(tiny_config());
  trainer.run(state, steps);
  return state;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const TrainState<float> state = trained_state(3);
  const std::string bytes = serialize_checkpoint(state);
  EXPECT_EQ(bytes.substr(0, 8), "DCLPCKPT");
  const TrainState<float> back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back, state);
  EXPECT_EQ(serialize_checkpoint(back), bytes);

  const fs::path dir = fs::temp_directory_path() / "distclip_trainer_ckpt";
  fs::create_directories(dir);
  save_checkpoint(state, dir / "a.ckpt");
  EXPECT_EQ(load_checkpoint(dir / "a.ckpt"), state);
  EXPECT_FALSE(fs::exists(dir / "a.ckpt.tmp"));
  EXPECT_THROW(load_checkpoint(dir / "none.ckpt"), IoError);
}

TEST(Checkpoint, EveryTruncationIsDetected) {
  const std::string bytes = serialize_checkpoint(trained_state(1));
  for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 16) {
    EXPECT_THROW(deserialize_checkpoint(std::string_view(bytes).substr(0, len)),
                 CheckpointTruncatedError)
        << "length " << len;
  }
  EXPECT_THROW(deserialize_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 1)),
               CheckpointTruncatedError);
}

TEST(Checkpoint, VersionMagicAndShapeErrors) {
  const TrainState<float> state = trained_state(1);
  std::string bytes = serialize_checkpoint(state);
  std::string wrong_version = bytes;
  wrong_version[8] = 2;
  EXPECT_THROW(deserialize_checkpoint(wrong_version), CheckpointVersionError);
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  try {
    deserialize_checkpoint(wrong_magic);
    FAIL() << "expected IoError";
  } catch (const CheckpointTruncatedError&) {
    FAIL() << "bad magic is not truncation";
  } catch (const IoError&) {
  }

  // A config that implies different tensor shapes than those stored.
  TrainState<float> mismatched = state;
  mismatched.config.model.dino.hidden_dim = 9;
  EXPECT_THROW(deserialize_checkpoint(serialize_checkpoint(mismatched)), CheckpointShapeError);
  TrainState<float> missing = state;
  missing.moments.v.erase(missing.moments.v.begin());
  EXPECT_THROW(deserialize_checkpoint(serialize_checkpoint(missing)), CheckpointShapeError);
}

// --- trainer -----------------------------------------------------------------

TEST(Trainer, NeedsTrainRecords) {
  auto records = tiny_records();
  for (auto& r : records) r.split = Split::kTest;
  EXPECT_THROW(Trainer<float>(tiny_config(), records), ContractError);
  EXPECT_THROW(Trainer<float>(tiny_config(), {}), ContractError);
}

TEST(Trainer, StepCountsDropIncompleteBatches) {
  const Trainer<float> trainer(tiny_config(), tiny_records(7));
  EXPECT_EQ(trainer.batch_size(), 3u);
  EXPECT_EQ(trainer.steps_per_epoch(), 2u);
  EXPECT_EQ(trainer.total_steps(), 8u);
  EXPECT_EQ(trainer.warmup_steps(), 2u);
  TrainConfig big = tiny_config();
  big.batch_size = 100;
  EXPECT_EQ(Trainer<float>(big, tiny_records(5)).batch_size(), 5u);
}

TEST(Trainer, EpochOrderIsSeededPermutation) {
  for (std::uint64_t e = 0; e < 5; ++e) {
    auto order = epoch_order(20, 11, e);
    EXPECT_EQ(order, epoch_order(20, 11, e));
    std::set<std::size_t> seen(order.begin(), order.end());
    EXPECT_EQ(seen.size(), 20u);
    EXPECT_EQ(*seen.rbegin(), 19u);
  }
  EXPECT_NE(epoch_order(20, 11, 0), epoch_order(20, 11, 1));
}

TEST(Trainer, BatchesKeepPairCountInBothSamplingModes) {
  TrainConfig c = tiny_config();
  for (auto mode : {SamplingMode::kEnglishOnly, SamplingMode::kOneTranslation}) {
    c.sampling.mode = mode;
    const Trainer<float> trainer(c, tiny_records());
    for (std::uint64_t s = 0; s < trainer.total_steps(); ++s) {
      const auto batch = trainer.make_batch(s);
      EXPECT_EQ(batch.size(), 3u);
      for (const auto& sample : batch) EXPECT_EQ(sample.views.size(), 4u);
    }
  }
}

TEST(Trainer, SameSeedRunsAreBitIdenticalAndMetricsOrdered) {
  const Trainer<float> trainer(tiny_config(), tiny_records());
  TrainState<float> a = initial_state<float>(tiny_config());
  TrainState<float> b = initial_state<float>(tiny_config());
  std::vector<std::uint64_t> steps;
  trainer.run(a, std::nullopt, [&](const StepMetrics& m, const TrainState<float>&) {
    steps.push_back(m.step);
    EXPECT_TRUE(std::isfinite(m.combined));
    EXPECT_NEAR(m.combined, 0.5 * (m.infonce + m.selfsuper), 1e-5);
  });
  trainer.run(b);
  EXPECT_EQ(serialize_checkpoint(a), serialize_checkpoint(b));
  ASSERT_EQ(steps.size(), trainer.total_steps());
  for (std::size_t i = 0; i < steps.size(); ++i) EXPECT_EQ(steps[i], i);

  TrainConfig other = tiny_config();
  other.seed = 4;
  TrainState<float> c = initial_state<float>(other);
  Trainer<float>(other, tiny_records()).run(c);
  EXPECT_FALSE(c.student == a.student);
}

TEST(Trainer, ResumeFromCheckpointMatchesUninterruptedRun) {
  const Trainer<float> trainer(tiny_config(), tiny_records());
  TrainState<float> full = initial_state<float>(tiny_config());
  std::vector<nlohmann::json> full_metrics, resumed_metrics;
  trainer.run(full, std::nullopt, [&](const StepMetrics& m, const TrainState<float>&) {
    full_metrics.push_back(m);
  });

  TrainState<float> first = initial_state<float>(tiny_config());
  trainer.run(first, 3, [&](const StepMetrics& m, const TrainState<float>&) {
    resumed_metrics.push_back(m);
  });
  TrainState<float> resumed = deserialize_checkpoint(serialize_checkpoint(first));
  const Trainer<float> again(resumed.config, tiny_records());
  again.run(resumed, std::nullopt, [&](const StepMetrics& m, const TrainState<float>&) {
    resumed_metrics.push_back(m);
  });
  EXPECT_EQ(resumed, full);
  EXPECT_EQ(resumed_metrics, full_metrics);
}

TEST(Trainer, UnitMomentaKeepTeacherConstant) {
  TrainConfig c = tiny_config();
  c.ema_momentum = 1.0;
  c.center_momentum = 1.0;
  const Trainer<float> trainer(c, tiny_records());
  TrainState<float> state = initial_state<float>(c);
  const TeacherState<float> before = state.teacher;
  trainer.run(state);
  EXPECT_EQ(state.teacher, before);
  EXPECT_FALSE(state.student == before.params);
}

TEST(Trainer, InfoNceOnlyNeverTouchesTeacher) {
  TrainConfig c = tiny_config();
  c.loss_mode = LossMode::kInfoNceOnly;
  const Trainer<float> trainer(c, tiny_records());
  TrainState<float> a = initial_state<float>(c);
  TrainState<float> b = initial_state<float>(c);
  // Poison b's teacher: if anything read it, losses would go non-finite.
  for (auto& [_, t] : b.teacher.params.tensors)
    for (auto& x : t.data()) x = std::numeric_limits<float>::quiet_NaN();
  const TeacherState<float> poisoned = b.teacher;
  const TeacherState<float> original = a.teacher;
  std::vector<nlohmann::json> ma, mb;
  trainer.run(a, std::nullopt, [&](const StepMetrics& m, const TrainState<float>&) {
    ma.push_back(m);
    EXPECT_EQ(m.selfsuper, 0.0);
  });
  trainer.run(b, std::nullopt,
              [&](const StepMetrics& m, const TrainState<float>&) { mb.push_back(m); });
  EXPECT_EQ(ma, mb);
  EXPECT_EQ(a.student, b.student);
  EXPECT_EQ(a.teacher, original);
  EXPECT_EQ(b.teacher.center, poisoned.center);
}

TEST(Trainer, FrozenTemperatureStaysPut) {
  TrainConfig c = tiny_config();
  c.freeze_temperature = true;
  TrainState<float> state = initial_state<float>(c);
  const float tau = state.student.temperature();
  Trainer<float>(c, tiny_records()).run(state);
  EXPECT_EQ(state.student.temperature(), tau);
}

TEST(Trainer, NonFiniteParametersAbortWithNumericError) {
  const Trainer<float> trainer(tiny_config(), tiny_records());
  TrainState<float> state = initial_state<float>(tiny_config());
  state.student.tensors.begin()->second[0] = std::numeric_limits<float>::infinity();
  try {
    trainer.step(state);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace distclip
