"""Transverse symbol calculus experiments on torus-bundle foliations."""

import json as _json
from pathlib import Path as _Path

from . import _core
from ._core import FoliantError

__all__ = ["FoliantError", "Geometry", "list_scenarios", "quantize", "run"]


def list_scenarios():
    return _json.loads(_core.scenario_catalog())


def run(config, seed=None, threads=0, out=""):
    """Run a scenario from a config dict or a path to a JSON file; returns the report dict."""
    if isinstance(config, (str, _Path)):
        config = _json.loads(_Path(config).read_text())
    return _json.loads(_core.run_config(_json.dumps(config), seed, threads, str(out)))


def quantize(symbol, leaf_cutoff, trans_cutoff):
    """Dense matrix of the quantized transverse symbol (leaf-major block order)."""
    return _core.quantize_dense(_json.dumps(symbol), leaf_cutoff, trans_cutoff)


class Geometry(_core.Geometry):
    def __init__(self, data):
        super().__init__(_json.dumps(data))
