// Copyright 2026 The lmlab Authors.
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

#include "lmlab/config_text.h"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "lmlab/error.h"

namespace lmlab {
namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

KeyValues KeyValues::Parse(std::string_view text) {
  KeyValues kv;
  std::size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string line = Trim(text.substr(start, end - start));
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = Trim(line.substr(0, hash));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfig, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) Fail(ErrorKind::kConfig, "config line " + std::to_string(line_no) + ": empty key");
    kv.values_[key] = Trim(line.substr(eq + 1));
    if (end == text.size()) break;
  }
  return kv;
}

std::string KeyValues::GetString(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::uint64_t KeyValues::GetUInt(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    Fail(ErrorKind::kConfig, "config key '" + key + "': expected a non-negative integer, got '" +
                                 s + "'");
  }
  return v;
}

double KeyValues::GetDouble(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& s = it->second;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    Fail(ErrorKind::kConfig, "config key '" + key + "': expected a number, got '" + s + "'");
  }
  return v;
}

bool KeyValues::GetBool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& s = it->second;
  if (s == "1" || s == "true" || s == "on") return true;
  if (s == "0" || s == "false" || s == "off") return false;
  Fail(ErrorKind::kConfig, "config key '" + key + "': expected a boolean, got '" + s + "'");
}

void KeyValues::RejectUnknown(const std::set<std::string>& allowed,
                              std::string_view context) const {
  for (const auto& [k, v] : values_) {
    if (!allowed.contains(k)) {
      Fail(ErrorKind::kConfig, std::string(context) + ": unknown key '" + k + "'");
    }
  }
}

void KeyValues::Overlay(const KeyValues& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string FormatDouble(double v) {
  // Shortest text that reads back to the same double.
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace lmlab
