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

#include "bmnet/experiment.hpp"

#include <fstream>

#include "bmnet/error.hpp"

namespace bmnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + "." + key + " has the wrong type");
  }
}

std::optional<std::size_t> get_limit(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto v = get_or<long long>(j, key, 0, ctx);
  if (v <= 0) throw ConfigError(ctx + "." + key + " must be positive");
  return static_cast<std::size_t>(v);
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || p.starts_with("builtin:")) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& ctx) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + ctx);
  }
}

void apply_dataset(const json& d, ExperimentConfig::DatasetRef& ds, const fs::path& base) {
  if (!d.is_object()) throw ConfigError("config.dataset must be an object");
  check_keys(d, {"name", "path", "val_fraction", "train_limit", "val_limit", "test_limit"},
             "config.dataset");
  ds.name = get_or<std::string>(d, "name", ds.name, "dataset");
  if (ds.name != "mnist" && ds.name != "cifar10") {
    throw ConfigError("dataset.name must be \"mnist\" or \"cifar10\", got \"" + ds.name + "\"");
  }
  ds.path = resolve(base, get_or<std::string>(d, "path", ds.path, "dataset"));
  ds.val_fraction = get_or<double>(d, "val_fraction", ds.val_fraction, "dataset");
  ds.train_limit = get_limit(d, "train_limit", "dataset");
  ds.val_limit = get_limit(d, "val_limit", "dataset");
  ds.test_limit = get_limit(d, "test_limit", "dataset");
}

void apply_train(const json& t, TrainConfig& train) {
  if (!t.is_object()) throw ConfigError("config.train must be an object");
  check_keys(t, {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "augment"}, "config.train");
  train.epochs = get_or<std::size_t>(t, "epochs", train.epochs, "train");
  train.batch_size = get_or<std::size_t>(t, "batch_size", train.batch_size, "train");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  train.adam.lr = get_or<double>(t, "lr", train.adam.lr, "train");
  train.adam.beta1 = get_or<double>(t, "beta1", train.adam.beta1, "train");
  train.adam.beta2 = get_or<double>(t, "beta2", train.adam.beta2, "train");
  train.adam.eps = get_or<double>(t, "eps", train.adam.eps, "train");
  if (t.contains("augment") && !t.at("augment").is_null()) {
    const auto& a = t.at("augment");
    check_keys(a, {"shift", "shift_h", "shift_w", "horizontal_flip"}, "config.train.augment");
    const auto shift = get_or<std::size_t>(a, "shift", 0, "train.augment");
    train.augment_config.shift_h = get_or<std::size_t>(a, "shift_h", shift, "train.augment");
    train.augment_config.shift_w = get_or<std::size_t>(a, "shift_w", shift, "train.augment");
    train.augment_config.horizontal_flip =
        get_or<bool>(a, "horizontal_flip", false, "train.augment");
    train.augment = train.augment_config.shift_h || train.augment_config.shift_w ||
                    train.augment_config.horizontal_flip;
  }
}

void apply_conversion(const json& c, ExperimentConfig& cfg) {
  if (!c.is_object()) throw ConfigError("config.conversion must be an object");
  check_keys(c, {"layers", "epochs_per_layer", "final_epochs", "patience", "max_final_epochs", "lr",
                 "final_lr"},
             "config.conversion");
  ConversionPlan& plan = cfg.conversion;
  if (c.contains("lr") && !c.at("lr").is_null()) {
    cfg.finetune_lr = get_or<double>(c, "lr", 0.0, "conversion");
    if (!(*cfg.finetune_lr > 0.0)) throw ConfigError("conversion.lr must be positive");
  }
  if (c.contains("layers")) {
    const auto& l = c.at("layers");
    if (l.is_string() && l.get<std::string>() == "all") {
      plan.layer_order.clear();
    } else if (l.is_array()) {
      plan.layer_order = l.get<std::vector<std::string>>();
    } else {
      throw ConfigError("conversion.layers must be \"all\" or a list of layer ids");
    }
  }
  plan.epochs_per_layer = get_or<std::size_t>(c, "epochs_per_layer", plan.epochs_per_layer,
                                              "conversion");
  if (c.contains("final_epochs")) {
    const auto& f = c.at("final_epochs");
    if (f.is_null() || (f.is_string() && f.get<std::string>() == "patience")) {
      plan.final_epochs.reset();
    } else {
      plan.final_epochs = get_or<std::size_t>(c, "final_epochs", 0, "conversion");
    }
  }
  if (c.contains("final_lr") && !c.at("final_lr").is_null()) {
    plan.final_lr = get_or<double>(c, "final_lr", 0.0, "conversion");
    if (!(*plan.final_lr > 0.0)) throw ConfigError("conversion.final_lr must be positive");
  }
  plan.patience = get_or<std::size_t>(c, "patience", plan.patience, "conversion");
  plan.max_final_epochs =
      get_or<std::size_t>(c, "max_final_epochs", plan.max_final_epochs, "conversion");
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j, {"dataset", "network", "seed", "output_dir", "train", "conversion", "approx_math",
                 "threads", "gate_constants", "checkpoint", "description"},
             "config");
  ExperimentConfig cfg;
  if (j.contains("dataset")) apply_dataset(j.at("dataset"), cfg.dataset, base);
  cfg.network = resolve(base, get_or<std::string>(j, "network", cfg.network, "config"));
  if (j.contains("seed") && !j.at("seed").is_null()) {
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
  }
  cfg.output_dir = resolve(base, get_or<std::string>(j, "output_dir", cfg.output_dir, "config"));
  if (j.contains("train")) apply_train(j.at("train"), cfg.train);
  if (j.contains("conversion")) apply_conversion(j.at("conversion"), cfg);
  cfg.approx_math = get_or<bool>(j, "approx_math", false, "config");
  cfg.threads = get_or<std::size_t>(j, "threads", 1, "config");
  if (cfg.threads == 0) throw ConfigError("threads must be >= 1");
  if (j.contains("gate_constants")) {
    cfg.gate_constants = cost::GateConstants::from_json(j.at("gate_constants"));
  }
  if (j.contains("checkpoint") && !j.at("checkpoint").is_null()) {
    cfg.checkpoint = resolve(base, j.at("checkpoint").get<std::string>());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_experiment_config(j, fs::path(path).parent_path());
}

NetworkSpec resolve_network(const ExperimentConfig& cfg) {
  if (cfg.network == "builtin:lenet_like") return build_lenet_like(10);
  if (cfg.network == "builtin:resnet22") return build_resnet22(10);
  if (cfg.network.starts_with("builtin:")) {
    throw ConfigError("unknown builtin network '" + cfg.network + "'");
  }
  return load_netspec(cfg.network);
}

DataSplits load_experiment_data(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset;
  if (ds.path.empty()) throw ConfigError("dataset.path is not set");
  if (!cfg.seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
  DataSplits s = ds.name == "mnist" ? load_mnist(ds.path, *cfg.seed, ds.val_fraction)
                                    : load_cifar10(ds.path, *cfg.seed, ds.val_fraction);
  if (ds.train_limit) s.train = s.train.head(*ds.train_limit);
  if (ds.val_limit) s.val = s.val.head(*ds.val_limit);
  if (ds.test_limit) s.test = s.test.head(*ds.test_limit);
  return s;
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"confusion", m.confusion}};
}

}  // namespace bmnet
