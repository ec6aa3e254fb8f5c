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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmnet/netspec.hpp"
#include "bmnet/opcount.hpp"

namespace bmnet::cost {

/// Gate count and latency (clock cycles) of one single-precision unit.
struct UnitCost {
  double gates = 0.0;
  double latency = 0.0;
  friend bool operator==(const UnitCost&, const UnitCost&) = default;
};

/// Per-operation hardware costs. Defaults are 65 nm synthesis estimates.
struct GateConstants {
  UnitCost add{16048, 3};
  UnitCost max{1464, 2};
  UnitCost mul{35345, 4};
  UnitCost log{154179, 35};
  UnitCost exp{256965, 21};

  /// Defaults overridden by any of {"add": {"gates": g, "latency": l}, ...}.
  static GateConstants from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  friend bool operator==(const GateConstants&, const GateConstants&) = default;
};

enum class Model { standard, bm };

/// Conv layer dimensions: F filters, C input channels, K x K kernel, L x M
/// output positions.
struct ConvShape {
  std::size_t F = 1, C = 1, K = 1, L = 1, M = 1;
};

/// Closed-form operation counts for one sample.
OpCount opcount_conv(const ConvShape& shape, Model model);
OpCount opcount_fc(std::size_t P, std::size_t Q, Model model);

/// Cost of producing one output value of one filter. The BM datapath runs
/// its four terms on parallel paths: per path (N+2) adds and (N-1) max for
/// N = K*K*C inputs, one exp, and the input logs shared by all F filters
/// (C/F per output). Activations cost the same in both models and are left out.
UnitCost per_output_cost(std::size_t F, std::size_t C, std::size_t K, Model model,
                         const GateConstants& g);

struct Ratio {
  double gate_ratio = 0.0;     // standard / BM
  double latency_ratio = 0.0;  // standard / BM
};

Ratio ratio_conv(std::size_t F, std::size_t C, std::size_t K, const GateConstants& g = {});
/// The fc analogue: K*K*C -> P and C/F -> P/Q.
Ratio ratio_fc(std::size_t P, std::size_t Q, const GateConstants& g = {});

struct LayerCost {
  std::string id;
  LayerKind kind = LayerKind::conv;
  std::size_t F = 0, C = 0, K = 0, L = 1, M = 1;
  OpCount ops_std, ops_bm;
  double gates_std = 0.0, gates_bm = 0.0, gate_ratio = 0.0;
  double latency_std = 0.0, latency_bm = 0.0, latency_ratio = 0.0;
  bool converted = false;
  double gates = 0.0;    // gates_bm if converted else gates_std
  double latency = 0.0;  // latency_bm if converted else latency_std
};

/// Per-layer costs for every conv/fc layer of a network with its first
/// `converted_conv_prefix` conv layers in BM form (fc layers stay standard).
/// Layer gates are per-output gates times the output volume F*L*M; latencies
/// are per output value.
struct CostReport {
  std::vector<LayerCost> layers;
  std::size_t converted_prefix = 0;
  double total_gates = 0.0;      // sum of LayerCost::gates
  double total_latency = 0.0;    // sum of LayerCost::latency
  double total_gates_std = 0.0;  // every layer standard
  double total_gates_bm = 0.0;   // every conv layer BM
};

/// Throws ConfigError when k exceeds the number of conv layers.
CostReport network_gate_report(const NetworkSpec& spec, std::size_t k,
                               const GateConstants& g = {});
/// Costs for a bare list of layer shapes (no chaining), all reported as conv.
CostReport shapes_report(const std::vector<ConvShape>& shapes, const GateConstants& g = {});

struct SweepPoint {
  std::size_t k = 0;
  double total_gates = 0.0;
  double total_latency = 0.0;
};
/// total gates for k = 0 .. number of conv layers.
std::vector<SweepPoint> gate_sweep(const NetworkSpec& spec, const GateConstants& g = {});

inline constexpr const char* kShapesFormat = "bmnet-shapes-v1";

/// One entry of a shape-list file, optionally with reference ratios to
/// compare against.
struct ShapeRow {
  ConvShape shape;
  std::optional<Ratio> expected;
};

/// {"format": "bmnet-shapes-v1", "rows": [{"F", "C", "K", "L"?, "M"?,
/// "gate_ratio"?, "latency_ratio"?}]}. L and M default to 1.
std::vector<ShapeRow> parse_shapes(const nlohmann::json& j);
std::vector<ShapeRow> load_shapes(const std::string& path);

/// Column order of cost-report CSV output.
inline constexpr const char* kReportColumns =
    "layer_id,kind,F,C,K,L,M,gates_std,gates_bm,gate_ratio,latency_std,latency_bm,latency_ratio";

std::string report_csv(const CostReport& report);
nlohmann::json report_json(const CostReport& report);
std::string sweep_csv(const std::vector<SweepPoint>& sweep);

}  // namespace bmnet::cost
