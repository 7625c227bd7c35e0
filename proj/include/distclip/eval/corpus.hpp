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

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "distclip/data/manifest.hpp"
#include "distclip/eval/retrieval.hpp"
#include "distclip/model/embed.hpp"

namespace distclip {

/// Flattened caption gallery with the owning record of each caption.
struct CaptionCorpus {
  std::vector<std::string> texts;
  std::vector<std::size_t> owner;
};

/// Captions of `language` for each record, in record order. With `dedupe`,
/// repeated strings within one record are kept once.
inline CaptionCorpus collect_captions(const std::vector<const ImageCaptionRecord*>& records,
                                      const std::string& language, bool dedupe = false) {
  const std::string code = resolve_language(language);
  CaptionCorpus corpus;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = records[i]->captions.find(code);
    if (it == records[i]->captions.end()) {
      throw ValidationError("record '" + records[i]->id + "' has no captions in '" + code + "'");
    }
    std::set<std::string> seen;
    for (const auto& text : it->second) {
      if (dedupe && !seen.insert(text).second) continue;
      corpus.texts.push_back(text);
      corpus.owner.push_back(i);
    }
  }
  return corpus;
}

/// Embeds a split and scores retrieval in both directions.
template <typename T>
RetrievalReport evaluate_model(const ModelParams<T>& params,
                               const std::vector<const ImageCaptionRecord*>& records,
                               const std::string& language, bool dedupe = false,
                               const std::filesystem::path& base_dir = {}) {
  if (records.empty()) throw ContractError("retrieval evaluation needs at least one record");
  std::vector<Tensor<float>> images;
  for (const auto* r : records) images.push_back(load_image(r->image, base_dir));
  const CaptionCorpus corpus = collect_captions(records, language, dedupe);
  return evaluate_retrieval(embed_images(params, images), embed_texts(params, corpus.texts),
                            corpus.owner);
}

}  // namespace distclip
