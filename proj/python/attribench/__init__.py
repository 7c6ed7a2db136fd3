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

"""Feature attribution explainers and evaluation metrics for text classifiers."""

import json

from attribench import _core
from attribench._errors import AttribenchError

__all__ = [
    "AttribenchError",
    "auprc",
    "complexity",
    "explain",
    "iou_f1",
    "load_dataset",
    "method_names",
    "metric_names",
    "render_table",
    "run_benchmark",
    "sparseness",
    "token_f1",
    "__version__",
]

__version__ = _core.version()

method_names = _core.method_names
metric_names = _core.metric_names
complexity = _core.complexity
sparseness = _core.sparseness
auprc = _core.auprc
token_f1 = _core.token_f1
iou_f1 = _core.iou_f1


def explain(text, methods, *, target=None, seed=0, fit_on=None, model_seed=0,
            command=None, url=None):
    """Explains one text and returns one attribution dict per method.

    The model is the built-in reference classifier, trained on the canonical
    dataset `fit_on` when given, or a protocol server reached through
    `command` (spawned) or `url` (HTTP). `target` defaults to the predicted
    class.
    """
    if isinstance(methods, str):
        methods = [methods]
    return json.loads(_core.explain_json(
        text, list(methods), target=target, seed=seed,
        fit_on=None if fit_on is None else str(fit_on),
        model_seed=model_seed, command=command, url=url))


def run_benchmark(config_path, *, output_dir=None, workers=None, heatmaps=None):
    """Runs a benchmark config and returns the report dict.

    Artifacts are written only when `output_dir` is given.
    """
    return json.loads(_core.run_benchmark_json(
        str(config_path),
        output_dir=None if output_dir is None else str(output_dir),
        workers=workers, heatmaps=heatmaps))


def load_dataset(path):
    """Loads a canonical JSONL dataset as (header, instances)."""
    text = _core.load_dataset_jsonl(str(path))
    records = [json.loads(line) for line in text.splitlines() if line]
    return records[0], records[1:]


def render_table(table, fmt="text"):
    """Renders a report's "table" entry as text, csv or json."""
    return _core.render_table(json.dumps(table), fmt)
