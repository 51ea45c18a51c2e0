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

#ifndef LMLAB_CONFIG_TEXT_H_
#define LMLAB_CONFIG_TEXT_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace lmlab {

// Canonical key=value text: one pair per line, '#' starts a comment.
// Unknown keys are rejected by the typed readers below, never ignored.
class KeyValues {
 public:
  static KeyValues Parse(std::string_view text);

  void Set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool Has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  std::uint64_t GetUInt(const std::string& key, std::uint64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  // Fails with a config error naming the first key not in `allowed`.
  void RejectUnknown(const std::set<std::string>& allowed, std::string_view context) const;

  // Merges `other` on top of this (other wins).
  void Overlay(const KeyValues& other);

 private:
  std::map<std::string, std::string> values_;
};

std::string FormatDouble(double v);

}  // namespace lmlab

#endif  // LMLAB_CONFIG_TEXT_H_
