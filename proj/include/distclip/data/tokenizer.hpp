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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "distclip/core/error.hpp"

namespace distclip {

// Byte-level vocabulary: three specials, then one id per byte value.
inline constexpr std::int32_t kPadToken = 0;
inline constexpr std::int32_t kSentinelToken = 1;
inline constexpr std::int32_t kEndToken = 2;
inline constexpr std::int32_t kByteOffset = 3;
inline constexpr std::size_t kByteVocabularySize = 256 + kByteOffset;

inline std::int32_t byte_token(unsigned char b) { return kByteOffset + b; }

/// [sentinel] + byte ids (truncated to max_length - 2 bytes) + [end].
inline std::vector<std::int32_t> tokenize(std::string_view text, std::size_t max_length) {
  if (max_length < 2) throw DomainError("tokenize: max_length must be >= 2");
  const std::size_t n = std::min(text.size(), max_length - 2);
  std::vector<std::int32_t> ids;
  ids.reserve(n + 2);
  ids.push_back(kSentinelToken);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(byte_token(static_cast<unsigned char>(text[i])));
  ids.push_back(kEndToken);
  return ids;
}

/// Recovers the byte string from ids, skipping specials.
inline std::string detokenize(const std::vector<std::int32_t>& ids) {
  std::string out;
  for (auto id : ids)
    if (id >= kByteOffset) out.push_back(static_cast<char>(id - kByteOffset));
  return out;
}

}  // namespace distclip
