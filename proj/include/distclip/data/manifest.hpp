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
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "distclip/data/image.hpp"
#include "distclip/data/languages.hpp"

namespace distclip {

enum class Split { kTrain, kVal, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

/// One caption with its language code.
struct CaptionRecord {
  std::string text;
  std::string language;
  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

/// One image with its captions grouped by language. Non-English lists are
/// 1:1 translations of the English list.
struct ImageCaptionRecord {
  std::string id;
  ImageRef image;
  std::map<std::string, std::vector<std::string>> captions;
  Split split = Split::kTrain;
  std::optional<std::string> label;  // class name, for classification sets

  const std::vector<std::string>& english() const { return captions.at(std::string(kEnglish)); }
  friend bool operator==(const ImageCaptionRecord&, const ImageCaptionRecord&) = default;
};

inline std::string image_ref_string(const ImageRef& ref) {
  if (const auto* s = std::get_if<SyntheticImage>(&ref)) {
    return "synthetic:" + std::to_string(s->seed) + ":" + std::to_string(s->size);
  }
  return std::get<std::string>(ref);
}

inline void validate_record(const ImageCaptionRecord& r) {
  const std::string who = "record '" + r.id + "'";
  auto en = r.captions.find(std::string(kEnglish));
  if (en == r.captions.end() || en->second.empty()) {
    throw ValidationError(who + " has no English captions");
  }
  for (const auto& [lang, list] : r.captions) {
    if (!is_supported_language_code(lang)) {
      throw ValidationError(who + " uses unsupported language '" + lang + "'");
    }
    if (list.size() != en->second.size()) {
      throw ValidationError(who + ": language '" + lang + "' has " + std::to_string(list.size()) +
                            " captions, English has " + std::to_string(en->second.size()));
    }
    for (const auto& text : list) {
      if (text.empty()) throw ValidationError(who + ": empty caption in language '" + lang + "'");
    }
  }
  if (const auto* s = std::get_if<SyntheticImage>(&r.image); s && s->size < 2) {
    throw ValidationError(who + ": synthetic image size must be >= 2");
  }
}

inline nlohmann::json record_to_json(const ImageCaptionRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  if (const auto* s = std::get_if<SyntheticImage>(&r.image)) {
    j["image"] = {{"synthetic", {{"seed", s->seed}, {"size", s->size}}}};
  } else {
    j["image"] = std::get<std::string>(r.image);
  }
  j["captions"] = r.captions;
  j["split"] = split_name(r.split);
  if (r.label) j["label"] = *r.label;
  return j;
}

/// Parses one manifest line. Missing ids default to the 0-based index.
inline ImageCaptionRecord record_from_json(const nlohmann::json& j, std::size_t index) {
  ImageCaptionRecord r;
  r.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(index);
  const auto& img = j.at("image");
  if (img.is_string()) {
    r.image = img.get<std::string>();
  } else {
    const auto& s = img.at("synthetic");
    r.image = SyntheticImage{s.at("seed").get<std::uint64_t>(), s.at("size").get<std::size_t>()};
  }
  r.captions = j.at("captions").get<std::map<std::string, std::vector<std::string>>>();
  r.split = j.contains("split") ? parse_split(j.at("split").get<std::string>()) : Split::kTrain;
  if (j.contains("label")) r.label = j.at("label").get<std::string>();
  return r;
}

/// JSON-lines manifest. Blank lines are skipped.
inline std::vector<ImageCaptionRecord> parse_manifest(std::istream& in,
                                                      const std::string& source = "manifest") {
  std::vector<ImageCaptionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ImageCaptionRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line), out.size());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ImageCaptionRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.string());
}

inline void write_manifest(const std::vector<ImageCaptionRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline void save_manifest(const std::vector<ImageCaptionRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  write_manifest(records, out);
}

inline std::vector<const ImageCaptionRecord*> select_split(
    const std::vector<ImageCaptionRecord>& records, Split split) {
  std::vector<const ImageCaptionRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

inline std::string trim_whitespace(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

/// Attaches translated captions, one per English caption in manifest order.
/// Responses are trimmed of surrounding whitespace.
inline std::vector<ImageCaptionRecord> ingest_translations(
    std::vector<ImageCaptionRecord> records, const std::vector<std::string>& responses,
    const std::string& language) {
  const std::string code = resolve_language(language);
  std::size_t expected = 0;
  for (const auto& r : records) expected += r.english().size();
  if (responses.size() != expected) {
    throw AlignmentError("translation responses: expected " + std::to_string(expected) +
                         " lines, got " + std::to_string(responses.size()));
  }
  std::size_t next = 0;
  for (auto& r : records) {
    std::vector<std::string> translated;
    for (std::size_t i = 0; i < r.english().size(); ++i) translated.push_back(trim_whitespace(responses[next++]));
    r.captions[code] = std::move(translated);
    validate_record(r);
  }
  return records;
}

}  // namespace distclip
