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
#include <optional>
#include <string>
#include <string_view>

#include "distclip/core/error.hpp"

namespace distclip {

struct Language {
  std::string_view code;
  std::string_view name;
};

/// English plus the nine translation targets.
inline constexpr std::array<Language, 10> kSupportedLanguages{{
    {"en", "English"},
    {"de", "German"},
    {"fr", "French"},
    {"es", "Spanish"},
    {"zh", "Chinese"},
    {"pt", "Portuguese"},
    {"it", "Italian"},
    {"ru", "Russian"},
    {"ko", "Korean"},
    {"nl", "Dutch"},
}};

inline constexpr std::string_view kEnglish = "en";

inline bool is_supported_language_code(std::string_view code) {
  for (const auto& l : kSupportedLanguages)
    if (l.code == code) return true;
  return false;
}

inline std::optional<std::string_view> language_name(std::string_view code) {
  for (const auto& l : kSupportedLanguages)
    if (l.code == code) return l.name;
  return std::nullopt;
}

inline std::optional<std::string_view> language_code(std::string_view name) {
  for (const auto& l : kSupportedLanguages)
    if (l.name == name) return l.code;
  return std::nullopt;
}

/// Accepts either a code ("de") or a name ("German"); returns the code.
inline std::string resolve_language(std::string_view code_or_name) {
  if (is_supported_language_code(code_or_name)) return std::string(code_or_name);
  if (auto code = language_code(code_or_name)) return std::string(*code);
  throw DomainError("unsupported language '" + std::string(code_or_name) + "'");
}

}  // namespace distclip
