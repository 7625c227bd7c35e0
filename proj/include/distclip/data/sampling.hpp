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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "distclip/core/random.hpp"
#include "distclip/data/manifest.hpp"

namespace distclip {

enum class SamplingMode { kEnglishOnly, kOneTranslation };

inline void to_json(nlohmann::json& j, SamplingMode m) {
  j = m == SamplingMode::kOneTranslation ? "one_translation" : "english_only";
}

inline void from_json(const nlohmann::json& j, SamplingMode& m) {
  const std::string s = j.get<std::string>();
  if (s == "english_only") {
    m = SamplingMode::kEnglishOnly;
  } else if (s == "one_translation") {
    m = SamplingMode::kOneTranslation;
  } else {
    throw ValidationError("unknown sampling mode '" + s +
                          "' (expected english_only or one_translation)");
  }
}

/// How a caption is chosen for each image at each epoch.
struct EpochSamplingPolicy {
  SamplingMode mode = SamplingMode::kEnglishOnly;
  std::uint64_t seed = 0;
  // Drop English from the candidate languages in one_translation mode
  // (falls back to English when no translation exists).
  bool exclude_english = false;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EpochSamplingPolicy, mode, seed, exclude_english)

/// Picks one caption for `record` at `epoch`.
///
/// english_only draws a caption index among the English captions;
/// one_translation draws the index first and then a language uniformly
/// among those present. The draw is a pure function of (seed, epoch,
/// record_index).
inline CaptionRecord sample_caption(const ImageCaptionRecord& record, std::size_t record_index,
                                    std::size_t epoch, const EpochSamplingPolicy& policy) {
  KeyedStream rng(policy.seed, RngDomain::kCaptionSampling, static_cast<std::uint32_t>(epoch),
                  static_cast<std::uint32_t>(record_index));
  const auto& english = record.english();
  const std::size_t index = rng.below(english.size());
  if (policy.mode == SamplingMode::kEnglishOnly) {
    return {english[index], std::string(kEnglish)};
  }
  std::vector<const std::string*> languages;
  for (const auto& [lang, _] : record.captions) {
    if (policy.exclude_english && lang == kEnglish) continue;
    languages.push_back(&lang);
  }
  if (languages.empty()) return {english[index], std::string(kEnglish)};
  const std::string& lang = *languages[rng.below(languages.size())];
  return {record.captions.at(lang)[index], lang};
}

}  // namespace distclip
