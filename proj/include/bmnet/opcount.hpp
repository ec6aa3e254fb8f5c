// Copyright 2026 The bmnet Authors.
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

#include <cstdint>
#include <ostream>

namespace bmnet {

/// Tally of arithmetic operations performed by a layer or network.
struct OpCount {
  std::uint64_t activation = 0;
  std::uint64_t exp = 0;
  std::uint64_t log = 0;
  std::uint64_t add = 0;
  std::uint64_t max = 0;
  std::uint64_t mul = 0;

  OpCount& operator+=(const OpCount& o) {
    activation += o.activation;
    exp += o.exp;
    log += o.log;
    add += o.add;
    max += o.max;
    mul += o.mul;
    return *this;
  }
  friend OpCount operator+(OpCount a, const OpCount& b) { return a += b; }
  friend bool operator==(const OpCount&, const OpCount&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const OpCount& c) {
  return os << "{act=" << c.activation << " exp=" << c.exp << " log=" << c.log
            << " add=" << c.add << " max=" << c.max << " mul=" << c.mul << "}";
}

}  // namespace bmnet
