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

#include "bmnet/cost_model.hpp"

#include <fstream>
#include <sstream>

#include "bmnet/error.hpp"

namespace bmnet::cost {

using nlohmann::json;

namespace {

struct NamedUnit {
  const char* name;
  UnitCost GateConstants::*field;
};

constexpr NamedUnit kUnits[] = {
    {"add", &GateConstants::add}, {"max", &GateConstants::max}, {"mul", &GateConstants::mul},
    {"log", &GateConstants::log}, {"exp", &GateConstants::exp},
};

UnitCost cost_for_inputs(double n, double log_share, Model model, const GateConstants& g) {
  if (model == Model::standard) {
    return {n * (g.mul.gates + g.add.gates), n * (g.mul.latency + g.add.latency)};
  }
  return {(n + 2) * g.add.gates + (n - 1) * g.max.gates + g.exp.gates + log_share * g.log.gates,
          (n + 2) * g.add.latency + (n - 1) * g.max.latency + g.exp.latency +
              log_share * g.log.latency};
}

Ratio ratio_of(double n, double log_share, const GateConstants& g) {
  const UnitCost s = cost_for_inputs(n, log_share, Model::standard, g);
  const UnitCost b = cost_for_inputs(n, log_share, Model::bm, g);
  return {s.gates / b.gates, s.latency / b.latency};
}

LayerCost layer_cost(const std::string& id, LayerKind kind, const ConvShape& s,
                     const GateConstants& g) {
  LayerCost c;
  c.id = id;
  c.kind = kind;
  c.F = s.F;
  c.C = s.C;
  c.K = s.K;
  c.L = s.L;
  c.M = s.M;
  if (kind == LayerKind::fc) {
    c.ops_std = opcount_fc(s.C, s.F, Model::standard);
    c.ops_bm = opcount_fc(s.C, s.F, Model::bm);
  } else {
    c.ops_std = opcount_conv(s, Model::standard);
    c.ops_bm = opcount_conv(s, Model::bm);
  }
  const UnitCost us = per_output_cost(s.F, s.C, s.K, Model::standard, g);
  const UnitCost ub = per_output_cost(s.F, s.C, s.K, Model::bm, g);
  const double volume = static_cast<double>(s.F * s.L * s.M);
  c.gates_std = us.gates * volume;
  c.gates_bm = ub.gates * volume;
  c.latency_std = us.latency;
  c.latency_bm = ub.latency;
  c.gate_ratio = us.gates / ub.gates;
  c.latency_ratio = us.latency / ub.latency;
  c.gates = c.gates_std;
  c.latency = c.latency_std;
  return c;
}

void finish(CostReport& r) {
  for (const auto& l : r.layers) {
    r.total_gates += l.gates;
    r.total_latency += l.latency;
    r.total_gates_std += l.gates_std;
    r.total_gates_bm += l.kind == LayerKind::conv ? l.gates_bm : l.gates_std;
  }
}

}  // namespace

GateConstants GateConstants::from_json(const json& j) {
  GateConstants g;
  if (j.is_null()) return g;
  if (!j.is_object()) throw ConfigError("gate constants must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& u : kUnits) {
      if (key != u.name) continue;
      known = true;
      UnitCost& dst = g.*(u.field);
      dst.gates = value.value("gates", dst.gates);
      dst.latency = value.value("latency", dst.latency);
      if (dst.gates < 0 || dst.latency < 0) {
        throw ConfigError("gate constants for '" + key + "' must be non-negative");
      }
    }
    if (!known) throw ConfigError("unknown operation '" + key + "' in gate constants");
  }
  return g;
}

json GateConstants::to_json() const {
  json j = json::object();
  for (const auto& u : kUnits) {
    const UnitCost& c = this->*(u.field);
    j[u.name] = {{"gates", c.gates}, {"latency", c.latency}};
  }
  return j;
}

OpCount opcount_conv(const ConvShape& s, Model model) {
  const std::uint64_t F = s.F, C = s.C, K = s.K, LM = std::uint64_t{s.L} * s.M;
  OpCount c;
  c.activation = F * LM;
  if (model == Model::standard) {
    c.add = F * K * K * C * LM;
    c.mul = F * K * K * C * LM;
  } else {
    c.exp = 4 * F * LM;
    c.log = C * LM;
    c.add = 2 * F * (K * K * C + 2) * LM;
    c.max = 2 * F * (K * K * C - 1) * LM;
  }
  return c;
}

OpCount opcount_fc(std::size_t P, std::size_t Q, Model model) {
  OpCount c;
  c.activation = Q;
  if (model == Model::standard) {
    c.add = std::uint64_t{Q} * P;
    c.mul = std::uint64_t{Q} * P;
  } else {
    c.exp = 4 * std::uint64_t{Q};
    c.log = P;
    c.add = 2 * std::uint64_t{Q} * (P + 2);
    c.max = 2 * std::uint64_t{Q} * (P - 1);
  }
  return c;
}

UnitCost per_output_cost(std::size_t F, std::size_t C, std::size_t K, Model model,
                         const GateConstants& g) {
  const double n = static_cast<double>(K * K * C);
  return cost_for_inputs(n, static_cast<double>(C) / static_cast<double>(F), model, g);
}

Ratio ratio_conv(std::size_t F, std::size_t C, std::size_t K, const GateConstants& g) {
  return ratio_of(static_cast<double>(K * K * C),
                  static_cast<double>(C) / static_cast<double>(F), g);
}

Ratio ratio_fc(std::size_t P, std::size_t Q, const GateConstants& g) {
  return ratio_of(static_cast<double>(P), static_cast<double>(P) / static_cast<double>(Q), g);
}

CostReport network_gate_report(const NetworkSpec& spec, std::size_t k, const GateConstants& g) {
  const auto layers = weighted_layers(spec);
  std::size_t convs = 0;
  for (const auto& l : layers) convs += l.kind == LayerKind::conv;
  if (k > convs) {
    throw ConfigError("converted prefix " + std::to_string(k) + " exceeds the " +
                      std::to_string(convs) + " conv layers");
  }
  CostReport r;
  r.converted_prefix = k;
  std::size_t seen = 0;
  for (const auto& l : layers) {
    ConvShape s{l.filters, l.channels, l.kernel, l.out_h, l.out_w};
    LayerCost c = layer_cost(l.id, l.kind, s, g);
    if (l.kind == LayerKind::conv && seen++ < k) {
      c.converted = true;
      c.gates = c.gates_bm;
      c.latency = c.latency_bm;
    }
    r.layers.push_back(c);
  }
  finish(r);
  return r;
}

CostReport shapes_report(const std::vector<ConvShape>& shapes, const GateConstants& g) {
  CostReport r;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    if (s.F == 0 || s.C == 0 || s.K == 0 || s.L == 0 || s.M == 0) {
      throw ShapeError("shape row " + std::to_string(i) + " has a zero extent");
    }
    r.layers.push_back(layer_cost("row" + std::to_string(i), LayerKind::conv, s, g));
  }
  finish(r);
  return r;
}

std::vector<SweepPoint> gate_sweep(const NetworkSpec& spec, const GateConstants& g) {
  const std::size_t convs = conv_layer_count(spec);
  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k <= convs; ++k) {
    const auto r = network_gate_report(spec, k, g);
    out.push_back({k, r.total_gates, r.total_latency});
  }
  return out;
}

std::vector<ShapeRow> parse_shapes(const json& j) {
  if (!j.is_object() || j.value("format", "") != kShapesFormat) {
    throw ConfigError(std::string("shape list must declare format \"") + kShapesFormat + "\"");
  }
  if (!j.contains("rows") || !j["rows"].is_array()) throw ConfigError("shape list needs \"rows\"");
  std::vector<ShapeRow> rows;
  for (const auto& r : j["rows"]) {
    ShapeRow row;
    try {
      row.shape = {r.at("F").get<std::size_t>(), r.at("C").get<std::size_t>(),
                   r.at("K").get<std::size_t>(), r.value("L", std::size_t{1}),
                   r.value("M", std::size_t{1})};
    } catch (const json::exception& e) {
      throw ConfigError("shape row " + std::to_string(rows.size()) + ": " + e.what());
    }
    if (r.contains("gate_ratio") && r.contains("latency_ratio")) {
      row.expected = Ratio{r["gate_ratio"].get<double>(), r["latency_ratio"].get<double>()};
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ShapeRow> load_shapes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open shape list " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("shape list " + path + ": " + e.what());
  }
  return parse_shapes(j);
}

std::string report_csv(const CostReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << kReportColumns << '\n';
  for (const auto& l : report.layers) {
    os << l.id << ',' << to_string(l.kind) << ',' << l.F << ',' << l.C << ',' << l.K << ','
       << l.L << ',' << l.M << ',' << l.gates_std << ',' << l.gates_bm << ',' << l.gate_ratio
       << ',' << l.latency_std << ',' << l.latency_bm << ',' << l.latency_ratio << '\n';
  }
  return os.str();
}

json report_json(const CostReport& report) {
  json layers = json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"layer_id", l.id},
                      {"kind", to_string(l.kind)},
                      {"F", l.F},
                      {"C", l.C},
                      {"K", l.K},
                      {"L", l.L},
                      {"M", l.M},
                      {"gates_std", l.gates_std},
                      {"gates_bm", l.gates_bm},
                      {"gate_ratio", l.gate_ratio},
                      {"latency_std", l.latency_std},
                      {"latency_bm", l.latency_bm},
                      {"latency_ratio", l.latency_ratio},
                      {"converted", l.converted}});
  }
  return {{"layers", layers},
          {"converted_prefix", report.converted_prefix},
          {"total_gates", report.total_gates},
          {"total_latency", report.total_latency},
          {"total_gates_std", report.total_gates_std},
          {"total_gates_bm", report.total_gates_bm}};
}

std::string sweep_csv(const std::vector<SweepPoint>& sweep) {
  std::ostringstream os;
  os.precision(17);
  os << "k,total_gates,total_latency\n";
  for (const auto& p : sweep) os << p.k << ',' << p.total_gates << ',' << p.total_latency << '\n';
  return os.str();
}

}  // namespace bmnet::cost
