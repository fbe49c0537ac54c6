// Copyright 2026 The uqtsc Authors
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

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uqtsc {

/// Ordered `key = value` text used for model configs, run configs and spec files.
class KeyValues {
 public:
  using Entry = std::pair<std::string, std::string>;

  static KeyValues parse(std::string_view text);
  static KeyValues read_file(const std::string& path);

  std::string format() const;
  void write_file(const std::string& path) const;

  /// Replaces an existing key in place or appends a new one.
  void set(const std::string& key, std::string value);
  void set(const std::string& key, long value);
  void set(const std::string& key, double value);

  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  long get_int(std::string_view key) const;
  long get_int(std::string_view key, long fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;

  /// Throws InvalidArgument naming the first key outside `allowed`.
  void reject_unknown(const std::vector<std::string>& allowed) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
};

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double value);

/// Strict numeric parsing; the whole (trimmed) string must be consumed.
std::optional<double> parse_double(std::string_view text);
std::optional<long> parse_long(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace uqtsc
