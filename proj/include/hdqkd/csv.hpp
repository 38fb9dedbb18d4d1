// Copyright 2026 The hdqkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal RFC-4180 style CSV output with round-trip number formatting.
#pragma once

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hdqkd::csv {

/// Shortest representation that parses back to the same double; NaN is
/// written as an empty field.
inline std::string format(double x) {
  if (std::isnan(x)) return {};
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> cols) {
    bool first = true;
    for (auto c : cols) {
      if (!first) os_ << ',';
      os_ << quote(c);
      first = false;
    }
    os_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(fields[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

}  // namespace hdqkd::csv
