# Copyright 2026 The bmnet Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests of the Python bindings against numpy oracles."""

import math
import os
import pathlib

import numpy as np
import pytest

import bmnet

SOURCE = pathlib.Path(os.environ.get("BMNET_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


# --- oracles ----------------------------------------------------------------

def dense_oracle(x, w, b):
    return x @ w + b


def bm_dense_oracle(x, vplus, vminus, v):
    """Four max-plus terms per output, computed with plain numpy."""
    with np.errstate(divide="ignore"):
        lp = np.where(x > 0, np.log(np.abs(x)), -np.inf)
        ln = np.where(x < 0, np.log(np.abs(x)), -np.inf)

    def term(l, vv):
        return np.exp(np.max(l[:, :, None] + vv[None, :, :], axis=1))

    return term(lp, vplus) - term(lp, vminus) - term(ln, vplus) + term(ln, vminus) + v


# --- tests ------------------------------------------------------------------

def test_log2_approx_counts_and_accuracy():
    y, counts = bmnet.log2_approx(1.37)
    assert abs(y - math.log2(1.37)) < 1e-4
    assert counts == {"mul": 5, "add": 6}
    assert bmnet.log2_approx(8.0)[0] == 3.0


def test_exp2_approx():
    y, saturated = bmnet.exp2_approx(3.3)
    assert abs(y - 2 ** 3.3) / 2 ** 3.3 < 1e-4
    assert not saturated


def test_domain_error_maps_to_exception():
    with pytest.raises(bmnet.DomainError):
        bmnet.log2_approx(-1.0)
    assert issubclass(bmnet.DomainError, bmnet.Error)


def test_convert_weights_sign_split():
    w = np.array([[0.5, -2.0], [0.0, 1.0]])
    b = np.array([0.1, -0.3])
    vplus, vminus, v = bmnet.convert_weights(w, b)
    np.testing.assert_allclose(vplus, [[math.log(0.5), bmnet.NEG_SENTINEL], [bmnet.NEG_SENTINEL, 0.0]])
    np.testing.assert_allclose(vminus, [[bmnet.NEG_SENTINEL, math.log(2.0)], [bmnet.NEG_SENTINEL, bmnet.NEG_SENTINEL]])
    np.testing.assert_array_equal(v, b)


def test_bm_dense_matches_oracle():
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 2, size=(4, 6))
    vplus, vminus = rng.uniform(-2, 1, size=(2, 6, 3))
    v = rng.normal(size=3)
    y, ops = bmnet.bm_dense_forward(x, vplus, vminus, v)
    np.testing.assert_allclose(y, bm_dense_oracle(x, vplus, vminus, v), rtol=1e-12, atol=1e-12)
    assert ops["exp"] == 4 * 3 * 4


def test_single_term_conversion_is_exact():
    rng = np.random.default_rng(4)
    w = np.zeros((5, 3))
    w[rng.integers(0, 5, size=3), np.arange(3)] = rng.uniform(-3, 3, size=3)
    b = rng.normal(size=3)
    x = rng.uniform(-2, 2, size=(2, 5))
    y, _ = bmnet.bm_dense_forward(x, *bmnet.convert_weights(w, b))
    np.testing.assert_allclose(y, dense_oracle(x, w, b), rtol=1e-9)


def test_classical_dense_matches_oracle():
    rng = np.random.default_rng(5)
    x, w, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=2)
    y, ops = bmnet.dense_forward(x, w, b)
    np.testing.assert_allclose(y, dense_oracle(x, w, b), rtol=1e-12)
    per_sample = bmnet.opcount_fc(4, 2)
    assert ops == {k: 3 * n for k, n in per_sample.items()}


def test_conv_forward_shapes():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(1, 5, 5, 2))
    w, b = rng.normal(size=(3, 3, 2, 4)), rng.normal(size=4)
    y, _ = bmnet.conv_forward(x, w, b)
    assert y.shape == (1, 5, 5, 4)
    yb, _ = bmnet.bm_conv_forward(x, *bmnet.convert_weights(w, b), stride=2)
    assert yb.shape == (1, 3, 3, 4)


def test_ratio_conv_reference_value():
    gates, latency = bmnet.ratio_conv(64, 64, 3)
    assert gates == pytest.approx(2.81, abs=0.011)
    assert latency == pytest.approx(1.37, abs=0.011)


def test_gate_sweep_decreases():
    sweep = bmnet.gate_sweep("resnet22")
    assert [k for k, _, _ in sweep] == list(range(23))
    assert sweep[-1][1] < sweep[0][1]
    report = bmnet.cost_report(str(SOURCE / "specs" / "lenet_like.json"), 2)
    assert report["converted_prefix"] == 2


def test_unknown_gate_constant_is_config_error():
    with pytest.raises(bmnet.ConfigError):
        bmnet.ratio_conv(1, 1, 1, gate_constants={"div": {"gates": 1, "latency": 1}})


def test_missing_checkpoint_is_format_error(tmp_path):
    with pytest.raises(bmnet.FormatError):
        bmnet.Model(str(tmp_path / "missing.json"))


@pytest.mark.skipif("BMNET_CLI" not in os.environ, reason="needs the bmnet binary")
def test_model_from_cli_checkpoint(tmp_path):
    import subprocess

    subprocess.run([os.environ["BMNET_CLI"], "train", "--config", str(SOURCE / "configs" / "smoke.json"),
                    "--out", str(tmp_path)], check=True, capture_output=True)
    model = bmnet.Model(str(tmp_path / "checkpoint.json"))
    assert model.converted_layers() == []
    x = np.zeros((2, 28, 28, 1))
    exact = model.forward(x)
    assert exact.shape == (2, 10)
    np.testing.assert_allclose(model.forward(x, approx_math=True), exact)  # classical layers only
    assert model.spec["layers"][0]["kind"] == "conv"
