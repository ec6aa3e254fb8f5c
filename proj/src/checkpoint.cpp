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

#include "bmnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "bmnet/error.hpp"

namespace bmnet {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) |
                            (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = std::uint32_t{bytes[i]} << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad) throw FormatError("base64 padding in the middle of a quantum");
      v[k] = decode_char(c);
      if (v[k] < 0) throw FormatError(std::string("invalid base64 character '") + c + "'");
    }
    const std::uint32_t n = (static_cast<std::uint32_t>(v[0]) << 18) |
                            (static_cast<std::uint32_t>(v[1]) << 12) |
                            (static_cast<std::uint32_t>(v[2]) << 6) |
                            static_cast<std::uint32_t>(v[3]);
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

json tensor_to_json(const Tensor& t) {
  std::vector<std::uint8_t> bytes(t.size() * sizeof(double));
  std::memcpy(bytes.data(), t.data().data(), bytes.size());
  return {{"shape", t.shape()}, {"data", base64_encode(bytes)}};
}

Tensor tensor_from_json(const json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw FormatError("tensor entry needs 'shape' and 'data'");
  }
  const auto shape = j.at("shape").get<Shape>();
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != shape_volume(shape) * sizeof(double)) {
    throw FormatError("tensor data length does not match shape " + shape_to_string(shape));
  }
  std::vector<double> values(shape_volume(shape));
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return Tensor(shape, std::move(values));
}

json checkpoint_to_json(Network& net, const std::optional<Tensor>& mean_image) {
  json layers = json::array();
  net.visit([&](Layer& l) {
    std::vector<NamedTensor> st;
    l.state(st);
    if (st.empty()) return;
    json entry = {{"id", l.id()}, {"kind", to_string(l.kind())}};
    if (l.kind() == LayerKind::conv || l.kind() == LayerKind::fc) {
      auto& wl = static_cast<WeightedLayer&>(l);
      entry["form"] = wl.form() == WeightedLayer::Form::bm ? "bm" : "classical";
      if (wl.form() == WeightedLayer::Form::bm) {
        entry["neg_sentinel"] = wl.bm_weights().neg_sentinel;
      }
    }
    json tensors = json::object();
    for (auto& [name, t] : st) tensors[name] = tensor_to_json(*t);
    entry["tensors"] = tensors;
    layers.push_back(entry);
  });
  return {{"format", kCheckpointFormat},
          {"spec", to_json(net.spec())},
          {"layers", layers},
          {"mean_image", mean_image ? tensor_to_json(*mean_image) : json(nullptr)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != kCheckpointFormat) {
    throw FormatError(std::string("checkpoint must carry \"format\": \"") + kCheckpointFormat +
                      "\"");
  }
  Checkpoint ck;
  ck.network = std::make_unique<Network>(parse_netspec(j.at("spec")), 0);
  std::map<std::string, const json*> entries;
  for (const auto& e : j.at("layers")) entries[e.at("id").get<std::string>()] = &e;

  std::size_t used = 0;
  ck.network->visit([&](Layer& l) {
    std::vector<NamedTensor> probe;
    l.state(probe);
    if (probe.empty()) return;
    const auto it = entries.find(l.id());
    if (it == entries.end()) throw FormatError("checkpoint has no entry for layer " + l.id());
    const json& e = *it->second;
    ++used;
    const json& tensors = e.at("tensors");
    const auto get = [&](const char* name) {
      if (!tensors.contains(name)) {
        throw FormatError("checkpoint layer " + l.id() + " lacks tensor '" + name + "'");
      }
      return tensor_from_json(tensors.at(name));
    };
    if (l.kind() == LayerKind::conv || l.kind() == LayerKind::fc) {
      auto& wl = static_cast<WeightedLayer&>(l);
      const auto form = e.at("form").get<std::string>();
      if (form == "classical") {
        wl.set_classical(get("w"), get("b"));
      } else if (form == "bm") {
        BMWeights bw{get("vplus"), get("vminus"), get("v"),
                     e.value("neg_sentinel", kNegSentinel)};
        wl.set_bm(std::move(bw));
      } else {
        throw FormatError("unknown layer form '" + form + "'");
      }
      return;
    }
    for (auto& [name, t] : probe) {
      Tensor v = get(name.c_str());
      if (v.shape() != t->shape()) {
        throw FormatError("checkpoint tensor " + l.id() + "." + name + " has shape " +
                          shape_to_string(v.shape()));
      }
      *t = std::move(v);
    }
  });
  if (used != entries.size()) throw FormatError("checkpoint has entries for unknown layers");
  if (j.contains("mean_image") && !j.at("mean_image").is_null()) {
    ck.mean_image = tensor_from_json(j.at("mean_image"));
  }
  return ck;
}

void save_checkpoint(Network& net, const std::string& path,
                     const std::optional<Tensor>& mean_image) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path);
  out << checkpoint_to_json(net, mean_image).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace bmnet
