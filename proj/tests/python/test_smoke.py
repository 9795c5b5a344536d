import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import foliant

CONFIGS = Path(os.environ.get("FOLIANT_CONFIGS", Path(__file__).resolve().parents[2] / "configs"))


def test_catalog_lists_nine_scenarios():
    names = [s["name"] for s in foliant.list_scenarios()]
    assert len(names) == 9
    assert "egorov-dirac" in names


def test_geometry_checks_pass():
    report = foliant.run(CONFIGS / "geometry-checks.json")
    assert report["pass"]
    assert report["metrics"]["tau_identity"] < 1e-10
    assert "tau.csv" in report["tables"]


def test_flat_egorov_meets_decay_and_oracle(tmp_path):
    report = foliant.run(CONFIGS / "egorov-scalar-flat.json", out=tmp_path)
    assert report["metrics"]["rho"] >= 0.7
    assert report["metrics"]["oracle_difference"] < 1e-10
    assert json.loads((tmp_path / "report.json").read_text())["pass"]


def test_dirac_scenario_rejects_codimension_one():
    cfg = {"scenario": "dirac-adjoint", "geometry": {"p": 1, "q": 1}}
    with pytest.raises(foliant.FoliantError, match="q = 2"):
        foliant.run(cfg)


def test_dual_norm_on_conormal():
    g = foliant.Geometry({"p": 1, "q": 2, "g_B": [[1.0, 0.0], [0.0, 4.0]]})
    assert g.dual_norm([0.3, 0.1], np.zeros(1), np.array([0.0, 1.0])) == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(g.tau([0.2, 0.4]), 0.0)


def test_constant_symbol_quantizes_to_scaled_identity():
    k = {"p": 1, "q": 1, "rank": 1, "order": 0, "entries": [{"a": [0], "b": [0], "c": [0], "value": 1.0}]}
    T = foliant.quantize(k, 0, 4)
    d = np.diag(T)
    # (2 pi)^p on every nonzero transverse frequency, zero at n = 0
    assert np.count_nonzero(np.abs(d) > 0) == T.shape[0] - 1
    assert np.allclose(d[np.abs(d) > 0], 2 * math.pi)
    assert np.allclose(T - np.diag(d), 0)
