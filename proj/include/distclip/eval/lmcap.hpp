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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "distclip/core/error.hpp"
#include "distclip/data/languages.hpp"

namespace distclip {

inline constexpr std::size_t kLmcapShots = 6;
inline constexpr std::size_t kLmcapRetrieved = 4;
inline constexpr std::array<std::string_view, kLmcapShots> kLmcapShotClasses{
    "airport", "denseresidential", "baseballfield", "parking", "stadium", "playground"};

/// Separator between consecutive few-shot blocks and the query block.
inline constexpr std::string_view kLmcapBlockSeparator = "\n\n";

/// Retrieval-conditioned captioning instruction for one image. Captions are
/// double-quoted and joined with ", ".
inline std::string build_lmcap_query(const std::vector<std::string>& captions,
                                     std::string_view language_name) {
  if (captions.empty()) throw ValidationError("captioning prompt needs at least one caption");
  if (!language_code(language_name)) {
    throw DomainError("unsupported language '" + std::string(language_name) + "'");
  }
  std::string out =
      "You are an intelligent image captioning bot tasked with describing remote sensing "
      "images. Similar images have the following captions: ";
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (captions[i].empty()) {
      throw ValidationError("captioning prompt: caption " + std::to_string(i) + " is empty");
    }
    if (i) out += ", ";
    out += '"';
    out += captions[i];
    out += '"';
  }
  out += ". A creative short caption that can describe this image in ";
  out += language_name;
  out += " is:";
  return out;
}

/// A solved example: the query followed by its answer caption.
inline std::string build_lmcap_example_block(const std::vector<std::string>& captions,
                                             std::string_view language_name,
                                             std::string_view answer) {
  if (answer.empty()) throw ValidationError("few-shot example has an empty answer");
  return build_lmcap_query(captions, language_name) + " " + std::string(answer);
}

/// Few-shot blocks in the given order, then the query block.
inline std::string build_lmcap_prompt(const std::vector<std::string>& retrieved_captions,
                                      std::string_view language_name,
                                      const std::vector<std::string>& fewshot_blocks = {}) {
  std::string out;
  for (const auto& block : fewshot_blocks) {
    out += block;
    out += kLmcapBlockSeparator;
  }
  return out + build_lmcap_query(retrieved_captions, language_name);
}

}  // namespace distclip
