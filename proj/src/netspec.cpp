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

#include "bmnet/netspec.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bmnet/error.hpp"

namespace bmnet {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "bmnet-netspec-v1";

struct KindName {
  LayerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::conv, "conv"},
    {LayerKind::fc, "fc"},
    {LayerKind::relu, "relu"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::residual_block, "residual-block"},
    {LayerKind::global_avg_pool, "global-avg-pool"},
    {LayerKind::max_pool, "max-pool"},
    {LayerKind::softmax, "softmax"},
};

std::string where(const std::string& path, const LayerSpec& l) {
  return "layer " + path + " (" + l.id + ")";
}

// Walks the layer tree inferring per-sample shapes. `out` collects conv/fc
// layers in topological order when non-null.
class ShapeWalker {
 public:
  ShapeWalker(std::vector<ConvertibleLayer>* out, std::set<std::string>* ids)
      : out_(out), ids_(ids) {}

  Shape walk(const std::vector<LayerSpec>& layers, Shape in, const std::string& prefix,
             bool top_level) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto path = prefix + "[" + std::to_string(i) + "]";
      if (layers[i].kind == LayerKind::softmax && !(top_level && i + 1 == layers.size())) {
        throw ConfigError(where(path, layers[i]) + ": softmax must be the last layer");
      }
      in = layer(layers[i], std::move(in), path);
    }
    return in;
  }

 private:
  Shape layer(const LayerSpec& l, Shape in, const std::string& path) {
    if (l.id.empty()) throw ConfigError(where(path, l) + ": missing id");
    if (ids_ && !ids_->insert(l.id).second) {
      throw ConfigError(where(path, l) + ": duplicate id");
    }
    switch (l.kind) {
      case LayerKind::conv: {
        if (in.size() != 3) {
          throw ShapeError(where(path, l) + ": conv needs a [L,M,C] input, got " +
                           shape_to_string(in));
        }
        if (l.channels != in[2]) {
          throw ShapeError(where(path, l) + ": declares C=" + std::to_string(l.channels) +
                           " but its input has " + std::to_string(in[2]) + " channels");
        }
        if (l.filters == 0 || l.kernel == 0 || l.stride == 0) {
          throw ShapeError(where(path, l) + ": F, K and stride must be >= 1");
        }
        const auto g = conv_geometry({1, in[0], in[1], in[2]}, l.kernel, l.filters,
                                     {l.stride, l.padding});
        if (out_) {
          out_->push_back({l.id, l.kind, l.filters, l.channels, l.kernel, l.stride,
                           in[0], in[1], g.out_h, g.out_w, l.convertible});
        }
        return {g.out_h, g.out_w, l.filters};
      }
      case LayerKind::fc: {
        const std::size_t p = shape_volume(in);
        if (l.inputs != p) {
          throw ShapeError(where(path, l) + ": declares P=" + std::to_string(l.inputs) +
                           " but its input " + shape_to_string(in) + " has " +
                           std::to_string(p) + " values");
        }
        if (l.outputs == 0) throw ShapeError(where(path, l) + ": Q must be >= 1");
        if (out_) {
          out_->push_back({l.id, l.kind, l.outputs, l.inputs, 1, 1, 1, 1, 1, 1,
                           l.convertible});
        }
        return {l.outputs};
      }
      case LayerKind::relu:
        return in;
      case LayerKind::batchnorm:
        if (l.channels != in.back()) {
          throw ShapeError(where(path, l) + ": declares C=" + std::to_string(l.channels) +
                           " but its input has " + std::to_string(in.back()) + " channels");
        }
        return in;
      case LayerKind::max_pool:
        if (in.size() != 3 || l.pool == 0 || in[0] < l.pool || in[1] < l.pool) {
          throw ShapeError(where(path, l) + ": cannot pool " + shape_to_string(in));
        }
        return {in[0] / l.pool, in[1] / l.pool, in[2]};
      case LayerKind::global_avg_pool:
        if (in.size() != 3) {
          throw ShapeError(where(path, l) + ": needs a [L,M,C] input, got " +
                           shape_to_string(in));
        }
        return {in[2]};
      case LayerKind::softmax:
        if (in.size() != 1) {
          throw ShapeError(where(path, l) + ": softmax needs a flat input, got " +
                           shape_to_string(in));
        }
        return in;
      case LayerKind::residual_block: {
        const Shape a = walk(l.pre, in, path + ".pre", false);
        const Shape h = walk(l.body, a, path + ".body", false);
        Shape s = in;
        if (!l.projection.empty()) {
          if (l.projection.size() != 1 || l.projection[0].kind != LayerKind::conv) {
            throw ConfigError(where(path, l) + ": projection must be a single conv");
          }
          s = walk(l.projection, a, path + ".projection", false);
        }
        if (h != s) {
          throw ShapeError(where(path, l) + ": body output " + shape_to_string(h) +
                           " does not match shortcut " + shape_to_string(s));
        }
        return h;
      }
    }
    throw ConfigError("unreachable layer kind");
  }

  std::vector<ConvertibleLayer>* out_;
  std::set<std::string>* ids_;
};

std::size_t get_size(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(ctx + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

LayerSpec parse_layer(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("layer " + path + ": expected an object with a 'kind'");
  }
  LayerSpec l;
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  l.id = j.value("id", std::string{});
  const std::string ctx = "layer " + path + " (" + l.id + ")";
  switch (l.kind) {
    case LayerKind::conv: {
      l.filters = get_size(j, "F", ctx);
      l.channels = get_size(j, "C", ctx);
      l.kernel = get_size(j, "K", ctx);
      l.stride = j.value("stride", std::size_t{1});
      const auto pad = j.value("padding", std::string{"same"});
      if (pad == "same") {
        l.padding = Padding::same;
      } else if (pad == "valid") {
        l.padding = Padding::valid;
      } else {
        throw ConfigError(ctx + ": unknown padding '" + pad + "'");
      }
      l.convertible = j.value("convertible", true);
      break;
    }
    case LayerKind::fc:
      l.inputs = get_size(j, "P", ctx);
      l.outputs = get_size(j, "Q", ctx);
      l.convertible = j.value("convertible", true);
      break;
    case LayerKind::batchnorm:
      l.channels = get_size(j, "C", ctx);
      break;
    case LayerKind::max_pool:
      l.pool = j.value("size", std::size_t{2});
      break;
    case LayerKind::residual_block: {
      const auto list = [&](const char* key, std::vector<LayerSpec>& dst) {
        if (!j.contains(key)) return;
        const auto& arr = j.at(key);
        for (std::size_t i = 0; i < arr.size(); ++i) {
          dst.push_back(parse_layer(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
        }
      };
      list("pre", l.pre);
      list("body", l.body);
      if (j.contains("projection") && !j.at("projection").is_null()) {
        l.projection.push_back(parse_layer(j.at("projection"), path + ".projection"));
      }
      break;
    }
    default:
      break;
  }
  return l;
}

// Assign ids "<kind><n>" to anonymous layers, numbering per kind in
// document order.
void assign_ids(std::vector<LayerSpec>& layers, std::map<std::string, int>& counters,
                std::set<std::string>& taken) {
  for (auto& l : layers) {
    if (l.id.empty()) {
      const std::string base = to_string(l.kind);
      std::string id;
      do {
        id = base + std::to_string(++counters[base]);
      } while (taken.count(id));
      l.id = id;
    }
    taken.insert(l.id);
    assign_ids(l.pre, counters, taken);
    assign_ids(l.body, counters, taken);
    assign_ids(l.projection, counters, taken);
  }
}

void collect_ids(const std::vector<LayerSpec>& layers, std::set<std::string>& ids) {
  for (const auto& l : layers) {
    if (!l.id.empty()) ids.insert(l.id);
    collect_ids(l.pre, ids);
    collect_ids(l.body, ids);
    collect_ids(l.projection, ids);
  }
}

json layer_json(const LayerSpec& l) {
  json j = json::object();
  j["kind"] = to_string(l.kind);
  j["id"] = l.id;
  switch (l.kind) {
    case LayerKind::conv:
      j["F"] = l.filters;
      j["C"] = l.channels;
      j["K"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding == Padding::same ? "same" : "valid";
      j["convertible"] = l.convertible;
      break;
    case LayerKind::fc:
      j["P"] = l.inputs;
      j["Q"] = l.outputs;
      j["convertible"] = l.convertible;
      break;
    case LayerKind::batchnorm:
      j["C"] = l.channels;
      break;
    case LayerKind::max_pool:
      j["size"] = l.pool;
      break;
    case LayerKind::residual_block: {
      json pre = json::array(), body = json::array();
      for (const auto& p : l.pre) pre.push_back(layer_json(p));
      for (const auto& b : l.body) body.push_back(layer_json(b));
      j["pre"] = pre;
      j["body"] = body;
      j["projection"] = l.projection.empty() ? json(nullptr) : layer_json(l.projection[0]);
      break;
    }
    default:
      break;
  }
  return j;
}

std::size_t count_params(const std::vector<LayerSpec>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::conv:
        n += l.kernel * l.kernel * l.channels * l.filters + l.filters;
        break;
      case LayerKind::fc:
        n += l.inputs * l.outputs + l.outputs;
        break;
      case LayerKind::batchnorm:
        n += 2 * l.channels;
        break;
      case LayerKind::residual_block:
        n += count_params(l.pre) + count_params(l.body) + count_params(l.projection);
        break;
      default:
        break;
    }
  }
  return n;
}

LayerSpec conv(const std::string& id, std::size_t c, std::size_t f, std::size_t k,
               std::size_t stride = 1) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.id = id;
  l.channels = c;
  l.filters = f;
  l.kernel = k;
  l.stride = stride;
  return l;
}

LayerSpec fc(const std::string& id, std::size_t p, std::size_t q) {
  LayerSpec l;
  l.kind = LayerKind::fc;
  l.id = id;
  l.inputs = p;
  l.outputs = q;
  return l;
}

LayerSpec simple(LayerKind kind, const std::string& id) {
  LayerSpec l;
  l.kind = kind;
  l.id = id;
  return l;
}

LayerSpec bn(const std::string& id, std::size_t c) {
  LayerSpec l = simple(LayerKind::batchnorm, id);
  l.channels = c;
  return l;
}

}  // namespace

std::string to_string(LayerKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ConfigError("unknown layer kind '" + name + "'");
}

void validate(const NetworkSpec& spec) {
  if (spec.input.size() != 3 || shape_volume(spec.input) == 0) {
    throw ShapeError("network input must be [L,M,C] with positive extents, got " +
                     shape_to_string(spec.input));
  }
  if (spec.num_classes == 0) throw ConfigError("num_classes must be >= 1");
  std::set<std::string> ids;
  ShapeWalker walker(nullptr, &ids);
  const Shape out = walker.walk(spec.layers, spec.input, "layers", true);
  if (out != Shape{spec.num_classes}) {
    throw ShapeError("network output " + shape_to_string(out) + " does not match " +
                     std::to_string(spec.num_classes) + " classes");
  }
}

std::vector<ConvertibleLayer> weighted_layers(const NetworkSpec& spec) {
  validate(spec);
  std::vector<ConvertibleLayer> out;
  ShapeWalker walker(&out, nullptr);
  walker.walk(spec.layers, spec.input, "layers", true);
  return out;
}

Shape output_shape(const NetworkSpec& spec) {
  ShapeWalker walker(nullptr, nullptr);
  return walker.walk(spec.layers, spec.input, "layers", true);
}

std::size_t parameter_count(const NetworkSpec& spec) { return count_params(spec.layers); }

std::size_t conv_layer_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const auto& l : weighted_layers(spec)) n += l.kind == LayerKind::conv;
  return n;
}

NetworkSpec parse_netspec(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != kFormatTag) {
    throw FormatError(std::string("network spec must carry \"format\": \"") + kFormatTag +
                      "\"");
  }
  NetworkSpec spec;
  spec.name = j.value("name", std::string{});
  if (!j.contains("input") || !j.at("input").is_array()) {
    throw ConfigError("network spec needs an 'input' extent list [L,M,C]");
  }
  spec.input = j.at("input").get<Shape>();
  spec.num_classes = get_size(j, "num_classes", "network spec");
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ConfigError("network spec needs a 'layers' array");
  }
  const auto& arr = j.at("layers");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    spec.layers.push_back(parse_layer(arr[i], "layers[" + std::to_string(i) + "]"));
  }
  std::set<std::string> taken;
  collect_ids(spec.layers, taken);
  std::map<std::string, int> counters;
  assign_ids(spec.layers, counters, taken);
  validate(spec);
  return spec;
}

NetworkSpec load_netspec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network spec " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("network spec " + path + ": " + e.what());
  }
  return parse_netspec(j);
}

json to_json(const NetworkSpec& spec) {
  json j = json::object();
  j["format"] = kFormatTag;
  j["name"] = spec.name;
  j["input"] = spec.input;
  j["num_classes"] = spec.num_classes;
  json layers = json::array();
  for (const auto& l : spec.layers) layers.push_back(layer_json(l));
  j["layers"] = layers;
  return j;
}

std::string serialize_netspec(const NetworkSpec& spec) { return to_json(spec).dump(2) + "\n"; }

void save_netspec(const NetworkSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write network spec " + path);
  out << serialize_netspec(spec);
}

NetworkSpec build_lenet_like(std::size_t num_classes, Shape input) {
  NetworkSpec s;
  s.name = "lenet_like";
  s.input = input;
  s.num_classes = num_classes;
  const std::size_t L = input.at(0), M = input.at(1), C = input.at(2);
  s.layers.push_back(conv("conv1", C, 16, 3));
  s.layers.push_back(simple(LayerKind::relu, "relu1"));
  LayerSpec pool = simple(LayerKind::max_pool, "pool1");
  pool.pool = 2;
  s.layers.push_back(pool);
  s.layers.push_back(conv("conv2", 16, 32, 3, 2));
  s.layers.push_back(simple(LayerKind::relu, "relu2"));
  const std::size_t h = (L / 2 + 1) / 2, w = (M / 2 + 1) / 2;
  s.layers.push_back(fc("fc1", h * w * 32, 64));
  s.layers.push_back(simple(LayerKind::relu, "relu3"));
  s.layers.push_back(fc("fc2", 64, num_classes));
  s.layers.push_back(simple(LayerKind::softmax, "softmax"));
  validate(s);
  return s;
}

NetworkSpec build_resnet22(std::size_t num_classes, Shape input) {
  NetworkSpec s;
  s.name = "resnet22";
  s.input = input;
  s.num_classes = num_classes;
  s.layers.push_back(conv("conv1", input.at(2), 16, 3));
  std::size_t in_ch = 16;
  int conv_id = 2;
  const auto next = [&] { return "conv" + std::to_string(conv_id++); };
  const std::size_t widths[3] = {16, 32, 64};
  for (int stage = 0; stage < 3; ++stage) {
    const std::size_t f = widths[stage];
    for (int blk = 0; blk < 3; ++blk) {
      const std::string b = "s" + std::to_string(stage + 1) + "b" + std::to_string(blk + 1);
      const std::size_t stride = (blk == 0 && stage > 0) ? 2 : 1;
      LayerSpec r = simple(LayerKind::residual_block, b);
      r.pre.push_back(bn(b + "_bn1", in_ch));
      r.pre.push_back(simple(LayerKind::relu, b + "_relu1"));
      r.body.push_back(conv(next(), in_ch, f, 3, stride));
      r.body.push_back(bn(b + "_bn2", f));
      r.body.push_back(simple(LayerKind::relu, b + "_relu2"));
      r.body.push_back(conv(next(), f, f, 3));
      if (blk == 0) r.projection.push_back(conv(next(), in_ch, f, 1, stride));
      s.layers.push_back(r);
      in_ch = f;
    }
  }
  s.layers.push_back(bn("final_bn", in_ch));
  s.layers.push_back(simple(LayerKind::relu, "final_relu"));
  s.layers.push_back(simple(LayerKind::global_avg_pool, "gap"));
  s.layers.push_back(fc("fc", in_ch, num_classes));
  s.layers.push_back(simple(LayerKind::softmax, "softmax"));
  validate(s);
  return s;
}

}  // namespace bmnet
