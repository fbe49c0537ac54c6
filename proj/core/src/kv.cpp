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

#include "uqtsc/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "uqtsc/error.hpp"

namespace uqtsc {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text == "inf" || text == "+inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long> parse_long(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidArgument,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + ": empty key");
    }
    kv.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KeyValues::format() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void KeyValues::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << format();
}

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KeyValues::set(const std::string& key, long value) { set(key, std::to_string(value)); }
void KeyValues::set(const std::string& key, double value) { set(key, format_double(value)); }

bool KeyValues::contains(std::string_view key) const { return find(key).has_value(); }

std::optional<std::string> KeyValues::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KeyValues::get_string(std::string_view key) const {
  auto v = find(key);
  if (!v) throw Error(ErrorKind::InvalidArgument, "missing key '" + std::string(key) + "'");
  return *v;
}

std::string KeyValues::get_string(std::string_view key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

long KeyValues::get_int(std::string_view key) const {
  const auto text = get_string(key);
  const auto v = parse_long(text);
  if (!v) {
    throw Error(ErrorKind::InvalidArgument,
                "key '" + std::string(key) + "' expects an integer, got '" + text + "'");
  }
  return *v;
}

long KeyValues::get_int(std::string_view key, long fallback) const {
  return contains(key) ? get_int(key) : fallback;
}

double KeyValues::get_double(std::string_view key) const {
  const auto text = get_string(key);
  const auto v = parse_double(text);
  if (!v) {
    throw Error(ErrorKind::InvalidArgument,
                "key '" + std::string(key) + "' expects a number, got '" + text + "'");
  }
  return *v;
}

double KeyValues::get_double(std::string_view key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}

void KeyValues::reject_unknown(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : entries_) {
    bool known = false;
    for (const auto& a : allowed) known = known || a == k;
    if (!known) throw Error(ErrorKind::InvalidArgument, "unknown key '" + k + "'");
  }
}

}  // namespace uqtsc
