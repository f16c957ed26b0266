"""Python bindings for the WBAN simulator core."""

import json
import os

from ._core import (
    CodecError,
    Predictor,
    ScenarioError,
    build_status_field,
    classify,
    crc16,
    decode_frame,
    dequantize,
    encode_frame,
    error_rate,
    escalation_timeline,
    quantize,
    selftest,
)
from . import _core

__all__ = [
    "CodecError",
    "Predictor",
    "ScenarioError",
    "build_status_field",
    "classify",
    "crc16",
    "decode_frame",
    "dequantize",
    "encode_frame",
    "error_rate",
    "escalation_timeline",
    "quantize",
    "run_scenario",
    "selftest",
    "validate_scenario",
]


def _document(scenario):
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    if isinstance(scenario, (str, os.PathLike)) and os.path.exists(scenario):
        with open(scenario, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(scenario, str):
        return scenario
    raise TypeError("scenario must be a dict, a JSON string or a path")


def validate_scenario(scenario):
    """Return the list of violations; empty when the scenario is valid."""
    return _core.validate_scenario(_document(scenario))


def run_scenario(scenario, seed=None):
    """Run a scenario. Returns (header, events, metrics) as plain Python data."""
    trace, metrics = _core.run_scenario(_document(scenario), seed)
    lines = [json.loads(line) for line in trace.splitlines() if line]
    return lines[0], lines[1:], json.loads(metrics)
