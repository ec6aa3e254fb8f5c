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

#include "bmnet/approx_math.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "bmnet/error.hpp"

namespace bmnet::approx {

namespace {

// Gaussian elimination with partial pivoting on a dense 6x6 system.
std::array<double, 6> solve6(std::array<std::array<double, 7>, 6> m) {
  for (std::size_t col = 0; col < 6; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 6; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    for (std::size_t r = col + 1; r < 6; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < 7; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<double, 6> x{};
  for (std::size_t r = 6; r-- > 0;) {
    double acc = m[r][6];
    for (std::size_t c = r + 1; c < 6; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return x;
}

template <typename F, typename DF>
std::array<double, 6> hermite_fit(F f, DF df) {
  std::array<std::array<double, 7>, 6> m{};
  std::size_t row = 0;
  for (double y : {0.0, 0.5, 1.0}) {
    for (int i = 0; i < 6; ++i) m[row][i] = std::pow(y, i);
    m[row][6] = f(y);
    ++row;
    for (int i = 0; i < 6; ++i) m[row][i] = i == 0 ? 0.0 : i * std::pow(y, i - 1);
    m[row][6] = df(y);
    ++row;
  }
  return solve6(m);
}

// Float arithmetic that tallies every operation it performs.
struct Alu {
  ArithCount n;
  float mul(float a, float b) {
    ++n.mul;
    return a * b;
  }
  float add(float a, float b) {
    ++n.add;
    return a + b;
  }
  void report(ArithCount* out) const {
    if (!out) return;
    out->mul += n.mul;
    out->add += n.add;
  }
};

}  // namespace

float FloatParts::value() const { return std::bit_cast<float>(bits()); }

float FloatParts::fraction() const {
  return std::ldexp(static_cast<float>(mantissa), -23);
}

FloatParts split_float(float x) {
  if (!(x > 0.0f) || !std::isfinite(x) || !std::isnormal(x)) {
    throw DomainError("split_float requires a positive normal float, got " +
                      std::to_string(x));
  }
  const auto bits = std::bit_cast<std::uint32_t>(x);
  return FloatParts{bits >> 31, (bits >> 23) & 0xFFu, bits & 0x7FFFFFu};
}

float join_float(const FloatParts& parts) { return parts.value(); }

float log2_approx(float x, ArithCount* count) {
  const FloatParts parts = split_float(x);
  const float y = parts.fraction();
  const auto c = [](std::size_t i) { return static_cast<float>(kLog2Coeffs[i]); };
  Alu alu;
  float p = c(5);
  for (std::size_t i = 5; i-- > 0;) p = alu.add(alu.mul(p, y), c(i));
  // The unbiased exponent is read off the bit field; adding it is the sixth add.
  const float e = static_cast<float>(static_cast<int>(parts.exponent) - 127);
  const float result = alu.add(e, p);
  alu.report(count);
  return result;
}

float exp2_approx(float x, bool* saturated, ArithCount* count) {
  if (saturated) *saturated = false;
  if (std::isnan(x)) throw DomainError("exp2_approx of NaN");
  if (x > 126.0f) {
    if (saturated) *saturated = true;
    return std::numeric_limits<float>::max();
  }
  if (x < -126.0f) {
    if (saturated) *saturated = true;
    return 0.0f;
  }
  const float n = std::floor(x);
  Alu alu;
  const float f = alu.add(x, -n);
  const auto c = [](std::size_t i) { return static_cast<float>(kExp2Coeffs[i]); };
  float p = c(5);
  for (std::size_t i = 5; i-- > 0;) p = alu.add(alu.mul(p, f), c(i));
  // p is in [1, 2]; scale by 2^n through the exponent field.
  const auto pbits = std::bit_cast<std::uint32_t>(p);
  const auto shifted = static_cast<std::uint32_t>(
      static_cast<std::int32_t>(pbits) + (static_cast<std::int32_t>(n) << 23));
  ++alu.n.add;  // the exponent-field addition
  alu.report(count);
  return std::bit_cast<float>(shifted);
}

float ln_approx(float x) { return log2_approx(x) * static_cast<float>(kLn2); }

float exp_approx(float x, bool* saturated) {
  return exp2_approx(x * static_cast<float>(kLog2e), saturated);
}

std::array<double, 6> derive_log2_coeffs() {
  return hermite_fit([](double y) { return std::log2(1.0 + y); },
                     [](double y) { return 1.0 / ((1.0 + y) * kLn2); });
}

std::array<double, 6> derive_exp2_coeffs() {
  return hermite_fit([](double y) { return std::exp2(y); },
                     [](double y) { return kLn2 * std::exp2(y); });
}

}  // namespace bmnet::approx
