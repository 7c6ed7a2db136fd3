# Copyright 2026 The Attribench Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the Python bindings."""

import json
import math
import pathlib

import pytest

attribench = pytest.importorskip("attribench")

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"
MOVIES = DATA / "fixtures" / "movies_mini.jsonl"


def test_version_and_names():
    assert attribench.__version__.count(".") == 2
    assert "integrated_gradients" in attribench.method_names()
    assert len(attribench.metric_names()) == 9


def test_closed_form_metrics():
    assert math.isclose(attribench.complexity([1, 1, 1, 1]), math.log(4), abs_tol=1e-9)
    assert math.isclose(attribench.sparseness([0, 0, 1, 0]), 0.75, abs_tol=1e-9)
    assert attribench.auprc([0.9, 0.8, 0.1, 0.0], [1, 1, 0, 0]) == 1.0
    assert math.isclose(attribench.token_f1([0.1, 0.9, 0.8, 0.0], [1, 1, 0, 0]), 0.5)


def test_explain_reference_model():
    out = attribench.explain("a truly great movie", ["saliency", "deeplift"], fit_on=MOVIES)
    assert [a["method"] for a in out] == ["saliency", "deeplift"]
    for a in out:
        assert a["tokens"] == ["a", "truly", "great", "movie"]
        assert len(a["scores"]) == 4
        assert all(math.isfinite(s) for s in a["scores"])


def test_explain_is_deterministic_for_sampled_methods():
    first = attribench.explain("not a good film at all", "lime", seed=3)
    second = attribench.explain("not a good film at all", "lime", seed=3)
    assert first == second


def test_errors_carry_codes():
    with pytest.raises(attribench.AttribenchError) as info:
        attribench.explain("text", ["bogus"])
    assert info.value.code == "BAD_REQUEST"
    assert "valid methods" in info.value.message
    with pytest.raises(attribench.AttribenchError) as info:
        attribench.complexity([0.0, 0.0])
    assert info.value.code == "ALL_ZERO_SCORES"


def test_load_dataset():
    header, instances = attribench.load_dataset(MOVIES)
    assert header["labels"] == ["neg", "pos"]
    assert len(instances) == 8


def test_benchmark_round_trip(tmp_path):
    report = attribench.run_benchmark(DATA / "movies_mini.bench.json", output_dir=tmp_path, heatmaps=False)
    assert len(report["instances"]) == 8
    assert report["failures"] == []
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["table"] == report["table"]
    text = attribench.render_table(report["table"])
    assert "shap_interactions" in text
