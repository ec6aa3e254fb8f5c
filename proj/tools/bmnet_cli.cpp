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

// bmnet: train, convert, evaluate and cost-report from the command line.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bmnet/checkpoint.hpp"
#include "bmnet/conversion.hpp"
#include "bmnet/cost_model.hpp"
#include "bmnet/error.hpp"
#include "bmnet/experiment.hpp"
#include "bmnet/parallel.hpp"
#include "bmnet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bmnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string layers;
  bool approx = false;
  std::optional<std::size_t> threads;
  std::string out;
  std::string checkpoint;
  // cost-report
  std::string spec;
  bool sweep = false;
  std::string format = "csv";
  // spec
  std::string model;
  std::size_t classes = 10;
};

ExperimentConfig make_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (cfg.threads == 0) throw ConfigError("--threads must be >= 1");
  if (o.approx) cfg.approx_math = true;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  set_num_threads(cfg.threads);
  return cfg;
}

void require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
}

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  require_seed(cfg);
  const NetworkSpec spec = resolve_network(cfg);
  const DataSplits data = load_experiment_data(cfg);
  const fs::path dir = output_dir(cfg);

  Network net(spec, *cfg.seed);
  Trainer trainer(net, cfg.train, *cfg.seed);
  std::ofstream csv(dir / "train_metrics.csv");
  csv << kTrainMetricsColumns << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
    const EpochStats s = trainer.train_epoch(data.train);
    Metrics v;
    if (data.val.size() > 0) v = evaluate(net, data.val);
    csv << s.epoch << ',' << fmt(s.train_loss) << ',' << fmt(s.train_accuracy) << ','
        << fmt(v.accuracy) << ',' << fmt(v.macro_precision) << ',' << fmt(v.macro_recall) << '\n';
    csv.flush();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "epoch " << s.epoch << ": loss " << s.train_loss << ", train acc "
              << s.train_accuracy << ", val acc " << v.accuracy << " (" << secs << " s)\n";
  }
  save_checkpoint(net, (dir / "checkpoint.json").string(), data.mean_image);
  json summary = {{"epochs", cfg.train.epochs}, {"seed", *cfg.seed}};
  if (data.test.size() > 0) summary["test"] = metrics_json(evaluate(net, data.test));
  write_text(dir / "train_summary.json", summary.dump(2) + "\n");
  if (summary.contains("test")) {
    std::cout << "test accuracy " << summary["test"]["accuracy"].get<double>() << '\n';
  }
  return kOk;
}

std::size_t parse_layers(const std::string& text, std::size_t available) {
  if (text.empty() || text == "all") return available;
  std::size_t k = 0;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    k = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("--layers expects a non-negative count or \"all\", got \"" + text + "\"");
  }
  if (k > available) {
    throw ConfigError("--layers " + text + " exceeds the " + std::to_string(available) +
                      " layers in the conversion plan");
  }
  return k;
}

int cmd_convert(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  require_seed(cfg);
  const std::string ckpt_path =
      cfg.checkpoint ? *cfg.checkpoint : (fs::path(cfg.output_dir) / "checkpoint.json").string();
  if (!fs::exists(ckpt_path)) throw FormatError("classical checkpoint not found: " + ckpt_path);
  Checkpoint ck = load_checkpoint(ckpt_path);
  Network& net = *ck.network;
  DataSplits data = load_experiment_data(cfg);
  const fs::path dir = output_dir(cfg);

  ConversionPlan plan = cfg.conversion;
  if (plan.layer_order.empty()) plan.layer_order = default_layer_order(net);
  const std::size_t k = parse_layers(o.layers, plan.layer_order.size());

  std::ofstream csv(dir / "stage_log.csv");
  std::ofstream jsonl(dir / "stage_log.jsonl");
  csv << stage_log_csv_header() << '\n';
  std::string where = "before the first conversion";
  const auto on_record = [&](const StageRecord& r) {
    csv << stage_log_csv_row(r) << '\n';
    jsonl << stage_record_json(r).dump() << '\n';
    csv.flush();
    jsonl.flush();
    where = r.phase == "final" ? "after the final phase"
                               : "in stage " + std::to_string(r.stage) +
                                     (r.layer_id.empty() ? "" : " (layer " + r.layer_id + ")");
    std::cerr << "stage " << r.stage << ' ' << r.phase << ' ' << r.layer_id << ": accuracy "
              << r.accuracy << " (" << r.wall_time << " s)\n";
  };
  TrainConfig finetune = cfg.train;
  if (cfg.finetune_lr) finetune.adam.lr = *cfg.finetune_lr;
  std::vector<StageRecord> log;
  try {
    log = partial_conversion_accuracy_curve(net, data, plan, k, finetune, *cfg.seed, on_record);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + "; last completed record: " + where);
  }
  save_checkpoint(net, (dir / "converted.json").string(), ck.mean_image);
  json summary = {{"converted_layers", json(std::vector<std::string>(
                                           plan.layer_order.begin(), plan.layer_order.begin() + static_cast<std::ptrdiff_t>(k)))},
                  {"final", stage_record_json(log.back())}};
  write_text(dir / "convert_summary.json", summary.dump(2) + "\n");
  std::cout << "final accuracy " << log.back().accuracy << '\n';
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  const std::string ckpt_path =
      cfg.checkpoint ? *cfg.checkpoint : (fs::path(cfg.output_dir) / "converted.json").string();
  if (!fs::exists(ckpt_path)) throw FormatError("checkpoint not found: " + ckpt_path);
  Checkpoint ck = load_checkpoint(ckpt_path);
  ExperimentConfig data_cfg = cfg;
  if (!data_cfg.seed) data_cfg.seed = 0;  // the split seed only affects train/val
  const DataSplits data = load_experiment_data(data_cfg);
  const Dataset& test = data.test.size() > 0 ? data.test : data.val;
  if (test.size() == 0) throw ConfigError("dataset has no test samples");
  ck.network->set_math(cfg.approx_math ? MathMode::approx : MathMode::exact);
  const Metrics m = evaluate(*ck.network, test);
  json j = metrics_json(m);
  j["approx_math"] = cfg.approx_math;
  j["samples"] = test.size();
  j["checkpoint"] = ckpt_path;
  const fs::path dir = output_dir(cfg);
  write_text(dir / (cfg.approx_math ? "eval_approx.json" : "eval.json"), j.dump(2) + "\n");
  std::cout << "accuracy " << m.accuracy << "\nmacro_precision " << m.macro_precision
            << "\nmacro_recall " << m.macro_recall << '\n';
  return kOk;
}

int cmd_cost_report(const Options& o) {
  ExperimentConfig cfg = make_config(o);
  std::string spec_path = o.spec.empty() ? cfg.network : o.spec;
  if (o.format != "csv" && o.format != "json") throw ConfigError("--format must be csv or json");

  json j;
  {
    std::ifstream in(spec_path);
    if (!spec_path.starts_with("builtin:")) {
      if (!in) throw ConfigError("cannot open " + spec_path);
      try {
        in >> j;
      } catch (const json::parse_error& e) {
        throw FormatError(spec_path + ": " + e.what());
      }
    }
  }
  cost::CostReport report;
  std::string sweep_text;
  if (j.is_object() && j.value("format", "") == cost::kShapesFormat) {
    std::vector<cost::ConvShape> shapes;
    for (const auto& r : cost::parse_shapes(j)) shapes.push_back(r.shape);
    report = cost::shapes_report(shapes, cfg.gate_constants);
  } else {
    ExperimentConfig c = cfg;
    c.network = spec_path;
    const NetworkSpec spec = j.is_null() ? resolve_network(c) : parse_netspec(j);
    const std::size_t convs = conv_layer_count(spec);
    report = cost::network_gate_report(spec, parse_layers(o.layers, convs), cfg.gate_constants);
    if (o.sweep) sweep_text = cost::sweep_csv(cost::gate_sweep(spec, cfg.gate_constants));
  }
  const std::string text =
      o.format == "csv" ? cost::report_csv(report) : cost::report_json(report).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
    if (!sweep_text.empty()) std::cout << '\n' << sweep_text;
  } else {
    const fs::path dir = output_dir(cfg);
    write_text(dir / (o.format == "csv" ? "cost_report.csv" : "cost_report.json"), text);
    if (!sweep_text.empty()) write_text(dir / "cost_sweep.csv", sweep_text);
  }
  return kOk;
}

int cmd_spec(const Options& o) {
  NetworkSpec spec;
  if (o.model == "lenet_like") {
    spec = build_lenet_like(o.classes);
  } else if (o.model == "resnet22") {
    spec = build_resnet22(o.classes);
  } else {
    throw ConfigError("--model must be lenet_like or resnet22");
  }
  if (o.out.empty()) {
    std::cout << serialize_netspec(spec);
  } else {
    save_netspec(spec, o.out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bipolar morphological network toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--seed", o.seed, "random seed (overrides the config)");
    sub->add_option("--threads", o.threads, "worker threads for batch kernels");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* train = app.add_subcommand("train", "train the classical network");
  common(train);
  auto* convert = app.add_subcommand("convert", "convert layer by layer and fine-tune");
  common(convert);
  convert->add_option("--layers", o.layers, "number of planned layers to convert, or \"all\"");
  convert->add_option("--checkpoint", o.checkpoint, "classical checkpoint to start from");
  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint to evaluate");
  eval->add_flag("--approx-math", o.approx, "use the polynomial log/exp approximations");
  auto* cost = app.add_subcommand("cost-report", "gate and latency estimates");
  cost->add_option("--config", o.config, "config (for gate_constants)");
  cost->add_option("--spec", o.spec, "network spec or shape list");
  cost->add_option("--layers", o.layers, "number of leading conv layers in BM form (default all)");
  cost->add_flag("--sweep", o.sweep, "also emit totals for every converted prefix");
  cost->add_option("--format", o.format, "csv or json");
  cost->add_option("--out", o.out, "output directory (default: stdout)");
  auto* spec = app.add_subcommand("spec", "print a builtin network spec");
  spec->add_option("--model", o.model, "lenet_like or resnet22")->required();
  spec->add_option("--classes", o.classes, "number of classes");
  spec->add_option("--out", o.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(o);
    if (*convert) return cmd_convert(o);
    if (*eval) return cmd_evaluate(o);
    if (*cost) return cmd_cost_report(o);
    if (*spec) return cmd_spec(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
