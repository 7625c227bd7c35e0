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
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distclip/data/languages.hpp"
#include "distclip/data/manifest.hpp"

namespace distclip {

/// Separator line between records in prompt and response files.
inline constexpr std::string_view kRecordSeparator = "\x1e";

/// Zero-shot translation instruction for one English caption.
inline std::string build_translation_prompt(std::string_view caption,
                                            std::string_view target_language_name) {
  if (!language_code(target_language_name)) {
    throw DomainError("unsupported target language '" + std::string(target_language_name) + "'");
  }
  std::string out;
  out.reserve(caption.size() + 96);
  out += "Translate the following text from English into ";
  out += target_language_name;
  out += ".\nEnglish: ";
  out += caption;
  out += '\n';
  out += target_language_name;
  out += ':';
  return out;
}

/// One prompt per English caption, in manifest order.
inline std::vector<std::string> build_translation_prompts(
    const std::vector<ImageCaptionRecord>& records, std::string_view target_language_name) {
  std::vector<std::string> prompts;
  for (const auto& r : records)
    for (const auto& caption : r.english())
      prompts.push_back(build_translation_prompt(caption, target_language_name));
  return prompts;
}

/// Records joined by a line holding only "\x1e"; the file ends with '\n'.
inline std::string format_record_file(const std::vector<std::string>& records) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) {
      out += '\n';
      out += kRecordSeparator;
      out += '\n';
    }
    out += records[i];
  }
  if (!records.empty()) out += '\n';
  return out;
}

/// Inverse of format_record_file. Surrounding whitespace of each record is
/// kept as is, except CR characters from CRLF files.
inline std::vector<std::string> parse_record_file(std::string_view content) {
  std::string text;
  text.reserve(content.size());
  for (char c : content)
    if (c != '\r') text.push_back(c);
  if (text.empty()) return {};
  if (text.back() == '\n') text.pop_back();

  std::vector<std::string> records;
  std::string current;
  std::size_t pos = 0;
  bool first_line = true;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    const std::string_view line(text.data() + pos, nl - pos);
    if (line == kRecordSeparator) {
      records.push_back(std::move(current));
      current.clear();
      first_line = true;
    } else {
      if (!first_line) current += '\n';
      current += line;
      first_line = false;
    }
    pos = nl + 1;
  }
  records.push_back(std::move(current));
  return records;
}

inline std::vector<std::string> read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_record_file(content);
}

inline void write_record_file(const std::vector<std::string>& records,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_record_file(records);
}

}  // namespace distclip
