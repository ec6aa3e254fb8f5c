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

#include <array>
#include <cstdint>

namespace bmnet::approx {

/// IEEE 754 single-precision fields: x = (-1)^sign * 2^(exponent-127) * 1.mantissa
struct FloatParts {
  std::uint32_t sign = 0;
  std::uint32_t exponent = 0;  // biased, 8 bits
  std::uint32_t mantissa = 0;  // b22..b0, 23 bits

  std::uint32_t bits() const { return (sign << 31) | (exponent << 23) | mantissa; }
  float value() const;
  /// Fractional mantissa 0.b22b21...b0 in [0, 1).
  float fraction() const;
};

/// Degree-5 coefficients of log2(1+y) on [0,1), matched in value and slope at
/// y = 0, 0.5, 1.
inline constexpr std::array<double, 6> kLog2Coeffs = {
    0.0, 1.44269504, -0.71249131, 0.42046732, -0.1955884, 0.04491735};

/// Degree-5 coefficients of 2^f on [0,1), fitted the same way (value and
/// slope matched at f = 0, 0.5, 1).
inline constexpr std::array<double, 6> kExp2Coeffs = {
    1.0, 0.69314718055994529, 0.24017440574158216,
    0.055811747933208311, 0.0089702035491650931, 0.0018964622160991228};

inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kLog2e = 1.44269504088896340736;

/// Arithmetic issued by the approximations, for the instrumented mode.
struct ArithCount {
  std::uint64_t mul = 0;
  std::uint64_t add = 0;
};

/// Throws DomainError unless x is positive, finite and normal.
FloatParts split_float(float x);
float join_float(const FloatParts& parts);

/// (e - 127) + Horner(kLog2Coeffs, y). Exactly 5 multiplications and 6
/// additions, the exponent unbias included.
float log2_approx(float x, ArithCount* count = nullptr);

/// 2^x from exponent-field assembly of floor(x) and a degree-5 polynomial on
/// the fraction. For |x| > 126 the result saturates (FLT_MAX above, 0 below)
/// and `saturated` is set when provided.
float exp2_approx(float x, bool* saturated = nullptr, ArithCount* count = nullptr);

float ln_approx(float x);
float exp_approx(float x, bool* saturated = nullptr);

/// Solve the 6x6 value/derivative interpolation system at {0, 0.5, 1} for
/// log2(1+y). Used to re-derive kLog2Coeffs.
std::array<double, 6> derive_log2_coeffs();
std::array<double, 6> derive_exp2_coeffs();

}  // namespace bmnet::approx
