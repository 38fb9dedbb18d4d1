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

#pragma once

#include <stdexcept>
#include <string>

namespace hdqkd {

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A value type was handed data that breaks its invariants.
class invariant_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Too few (or degenerate) events to form a statistic.
class statistics_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An objective evaluated to NaN or infinity.
class evaluation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw domain_error(what);
}

}  // namespace detail
}  // namespace hdqkd
