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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "distclip/core/random.hpp"

namespace distclip {

using ClassFiles = std::map<std::string, std::vector<std::string>>;

struct SplitResult {
  ClassFiles train;
  ClassFiles test;
};

/// Fisher-Yates shuffle with j = next() % (i + 1), walking i downward.
template <typename Item>
void fisher_yates(std::vector<Item>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(items[i - 1], items[j]);
  }
}

/// Per-class shuffle seeded with seed ^ stable_hash(class name); the first
/// floor(0.8 n) items train, the rest test. Input order matters, so callers
/// listing directories should sort first.
inline SplitResult split_80_20(const ClassFiles& classes, std::uint64_t seed = 42) {
  SplitResult out;
  for (const auto& [name, files] : classes) {
    std::vector<std::string> items = files;
    SplitMix64 rng(seed ^ stable_hash(name));
    fisher_yates(items, rng);
    const std::size_t n_train = items.size() * 8 / 10;
    out.train[name].assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test[name].assign(items.begin() + static_cast<std::ptrdiff_t>(n_train), items.end());
  }
  return out;
}

}  // namespace distclip
