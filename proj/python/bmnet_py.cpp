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

// Python bindings: math kernels, weight conversion, BM layers, cost model and
// checkpoint inference. Arrays cross the boundary as float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "bmnet/approx_math.hpp"
#include "bmnet/checkpoint.hpp"
#include "bmnet/conversion.hpp"
#include "bmnet/cost_model.hpp"
#include "bmnet/error.hpp"
#include "bmnet/layers.hpp"
#include "bmnet/netspec.hpp"
#include "bmnet/network.hpp"

namespace py = pybind11;
using namespace bmnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

MathMode math_mode(bool approx) { return approx ? MathMode::approx : MathMode::exact; }

Activation activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + name + "' (identity|relu)");
}

ConvParams conv_params(std::size_t stride, const std::string& padding) {
  if (padding != "same" && padding != "valid") {
    throw ConfigError("unknown padding '" + padding + "' (same|valid)");
  }
  return {stride, padding == "same" ? Padding::same : Padding::valid};
}

BMWeights bm_weights(const Array& vplus, const Array& vminus, const Array& v) {
  return {to_tensor(vplus), to_tensor(vminus), to_tensor(v)};
}

py::dict ops_dict(const OpCount& n) {
  py::dict d;
  d["activation"] = n.activation;
  d["exp"] = n.exp;
  d["log"] = n.log;
  d["add"] = n.add;
  d["max"] = n.max;
  d["mul"] = n.mul;
  return d;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

cost::GateConstants gate_constants(const py::object& o) {
  return o.is_none() ? cost::GateConstants{} : cost::GateConstants::from_json(from_python(o));
}

NetworkSpec spec_from(const py::object& o) {
  if (py::isinstance<py::str>(o)) {
    const auto name = o.cast<std::string>();
    if (name == "lenet_like") return build_lenet_like(10);
    if (name == "resnet22") return build_resnet22(10);
    return load_netspec(name);
  }
  return parse_netspec(from_python(o));
}

/// A checkpoint loaded for inference.
class Model {
 public:
  explicit Model(const std::string& path) : ck_(load_checkpoint(path)) {}

  Array forward(const Array& x, bool approx) {
    ck_.network->set_math(math_mode(approx));
    return to_array(ck_.network->forward(to_tensor(x), false));
  }
  py::object mean_image() const {
    return ck_.mean_image ? py::object(to_array(*ck_.mean_image)) : py::none();
  }
  py::object spec() const { return to_python(to_json(ck_.network->spec())); }
  std::vector<std::string> converted_layers() {
    std::vector<std::string> ids;
    for (auto* l : ck_.network->weighted_layers())
      if (l->form() == WeightedLayer::Form::bm) ids.push_back(l->id());
    return ids;
  }

 private:
  Checkpoint ck_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bipolar morphological neural network engine";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.attr("NEG_SENTINEL") = kNegSentinel;
  m.attr("LOG2_COEFFS") = approx::kLog2Coeffs;
  m.attr("EXP2_COEFFS") = approx::kExp2Coeffs;

  m.def(
      "log2_approx",
      [](float x) {
        approx::ArithCount n;
        const float y = approx::log2_approx(x, &n);
        return py::make_tuple(y, py::dict(py::arg("mul") = n.mul, py::arg("add") = n.add));
      },
      py::arg("x"), "Polynomial log2; returns (value, {'mul', 'add'}).");
  m.def(
      "exp2_approx",
      [](float x) {
        bool saturated = false;
        const float y = approx::exp2_approx(x, &saturated);
        return py::make_tuple(y, saturated);
      },
      py::arg("x"), "Polynomial 2^x; returns (value, saturated).");
  m.def("derive_log2_coeffs", &approx::derive_log2_coeffs);
  m.def("derive_exp2_coeffs", &approx::derive_exp2_coeffs);

  m.def(
      "convert_weights",
      [](const Array& w, const Array& b, double sentinel) {
        const BMWeights bm = convert_weights(to_tensor(w), to_tensor(b), sentinel);
        return py::make_tuple(to_array(bm.vplus), to_array(bm.vminus), to_array(bm.v));
      },
      py::arg("w"), py::arg("b"), py::arg("neg_sentinel") = kNegSentinel,
      "Classical (w, b) -> log-domain (vplus, vminus, v).");

  m.def(
      "dense_forward",
      [](const Array& x, const Array& w, const Array& b, const std::string& act) {
        OpCount n;
        const Tensor y = classical_dense_forward(to_tensor(x), {to_tensor(w), to_tensor(b)},
                                                 activation(act), &n);
        return py::make_tuple(to_array(y), ops_dict(n));
      },
      py::arg("x"), py::arg("w"), py::arg("b"), py::arg("activation") = "identity");
  m.def(
      "conv_forward",
      [](const Array& x, const Array& w, const Array& b, std::size_t stride,
         const std::string& padding, const std::string& act) {
        OpCount n;
        const Tensor y = classical_conv_forward(to_tensor(x), {to_tensor(w), to_tensor(b)},
                                                conv_params(stride, padding), activation(act), &n);
        return py::make_tuple(to_array(y), ops_dict(n));
      },
      py::arg("x"), py::arg("w"), py::arg("b"), py::arg("stride") = 1,
      py::arg("padding") = "same", py::arg("activation") = "identity");
  m.def(
      "bm_dense_forward",
      [](const Array& x, const Array& vplus, const Array& vminus, const Array& v,
         const std::string& act, bool approx) {
        OpCount n;
        const Tensor y = bm_dense_forward(to_tensor(x), bm_weights(vplus, vminus, v),
                                          activation(act), math_mode(approx), &n);
        return py::make_tuple(to_array(y), ops_dict(n));
      },
      py::arg("x"), py::arg("vplus"), py::arg("vminus"), py::arg("v"),
      py::arg("activation") = "identity", py::arg("approx_math") = false);
  m.def(
      "bm_conv_forward",
      [](const Array& x, const Array& vplus, const Array& vminus, const Array& v,
         std::size_t stride, const std::string& padding, const std::string& act, bool approx) {
        OpCount n;
        const Tensor y = bm_conv_forward(to_tensor(x), bm_weights(vplus, vminus, v),
                                         conv_params(stride, padding), activation(act),
                                         math_mode(approx), &n);
        return py::make_tuple(to_array(y), ops_dict(n));
      },
      py::arg("x"), py::arg("vplus"), py::arg("vminus"), py::arg("v"), py::arg("stride") = 1,
      py::arg("padding") = "same", py::arg("activation") = "identity",
      py::arg("approx_math") = false);

  m.def(
      "opcount_conv",
      [](std::size_t F, std::size_t C, std::size_t K, std::size_t L, std::size_t M, bool bm) {
        return ops_dict(cost::opcount_conv({F, C, K, L, M}, bm ? cost::Model::bm : cost::Model::standard));
      },
      py::arg("F"), py::arg("C"), py::arg("K"), py::arg("L") = 1, py::arg("M") = 1,
      py::arg("bm") = false);
  m.def(
      "opcount_fc",
      [](std::size_t P, std::size_t Q, bool bm) {
        return ops_dict(cost::opcount_fc(P, Q, bm ? cost::Model::bm : cost::Model::standard));
      },
      py::arg("P"), py::arg("Q"), py::arg("bm") = false);
  m.def(
      "ratio_conv",
      [](std::size_t F, std::size_t C, std::size_t K, const py::object& g) {
        const auto r = cost::ratio_conv(F, C, K, gate_constants(g));
        return py::make_tuple(r.gate_ratio, r.latency_ratio);
      },
      py::arg("F"), py::arg("C"), py::arg("K"), py::arg("gate_constants") = py::none(),
      "(gate ratio, latency ratio) of standard over BM for one conv layer.");
  m.def(
      "ratio_fc",
      [](std::size_t P, std::size_t Q, const py::object& g) {
        const auto r = cost::ratio_fc(P, Q, gate_constants(g));
        return py::make_tuple(r.gate_ratio, r.latency_ratio);
      },
      py::arg("P"), py::arg("Q"), py::arg("gate_constants") = py::none());
  m.def(
      "cost_report",
      [](const py::object& spec, std::size_t k, const py::object& g) {
        return to_python(cost::report_json(cost::network_gate_report(spec_from(spec), k, gate_constants(g))));
      },
      py::arg("spec"), py::arg("layers"), py::arg("gate_constants") = py::none(),
      "Per-layer gate/latency report with the first `layers` conv layers converted. `spec` is "
      "'lenet_like', 'resnet22', a spec file path or a spec dict.");
  m.def(
      "gate_sweep",
      [](const py::object& spec, const py::object& g) {
        std::vector<std::tuple<std::size_t, double, double>> out;
        for (const auto& p : cost::gate_sweep(spec_from(spec), gate_constants(g)))
          out.emplace_back(p.k, p.total_gates, p.total_latency);
        return out;
      },
      py::arg("spec"), py::arg("gate_constants") = py::none(),
      "[(k, total gates, total latency)] for k = 0 .. number of conv layers.");
  m.def(
      "network_spec", [](const std::string& name) { return to_python(to_json(spec_from(py::str(name)))); },
      py::arg("name"));

  py::class_<Model>(m, "Model", "A checkpoint loaded for inference.")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("forward", &Model::forward, py::arg("x"), py::arg("approx_math") = false,
           "Logits for preprocessed NHWC images.")
      .def_property_readonly("mean_image", &Model::mean_image)
      .def_property_readonly("spec", &Model::spec)
      .def("converted_layers", &Model::converted_layers);
}
