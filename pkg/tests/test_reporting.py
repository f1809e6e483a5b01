import csv
import json
import math

import numpy as np
import pytest

from podkit import __version__
from podkit.models import TimeGrid, Trajectory
from podkit.pod_core import mode_norms, pod_from_trajectory, sigma_tail
from podkit.reporting import (
    PlotKind,
    clean,
    dumps_report,
    make_report,
    validate_report,
    write_csv,
    write_plot_series,
    write_report,
)
from podkit.storage import ContainerError


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_report_envelope():
    report = make_report("podkit-test-v1", {"value": 1.5}, seed=4, input_digests={"a": "00"})
    assert report["tool_version"] == __version__
    assert report["seed"] == 4 and report["input_digests"] == {"a": "00"}
    validate_report(report)


@pytest.mark.parametrize("key", ["schema", "seed", "tool_version", "input_digests"])
def test_missing_key_rejected(key):
    report = make_report("podkit-test-v1", {}, seed=0)
    del report[key]
    with pytest.raises(ContainerError):
        dumps_report(report)


def test_non_finite_values_become_null():
    report = make_report("podkit-test-v1", {"a": math.inf, "b": [np.nan, np.float64(2.0)], "c": np.int64(3)}, 0)
    data = json.loads(dumps_report(report))
    assert data["a"] is None
    assert data["b"] == [None, 2.0]
    assert data["c"] == 3


def test_report_text_is_deterministic(tmp_path):
    body = {"z": 1, "a": {"y": np.arange(3.0), "b": True}}
    first = write_report(str(tmp_path / "a.json"), make_report("podkit-test-v1", body, 1))
    second = write_report(str(tmp_path / "b.json"), make_report("podkit-test-v1", dict(reversed(body.items())), 1))
    assert first == second
    text = (tmp_path / "a.json").read_text(encoding="utf-8")
    assert text.endswith("}\n")
    assert text.index('"a"') < text.index('"z"')


def test_clean_keeps_bools():
    assert clean({"flag": np.bool_(True)}) == {"flag": True}


def test_csv_floats_round_trip(tmp_path):
    path = str(tmp_path / "t.csv")
    value = 0.1 + 0.2
    write_csv(path, [{"x": 1, "y": value, "extra": "dropped"}], ["x", "y"])
    rows = read_rows(path)
    assert rows == [{"x": "1", "y": format(value, ".17g")}]
    assert float(rows[0]["y"]) == value


def test_mode_norms_series_for_identity_gram(tmp_path):
    grid = TimeGrid(1.0, 6)
    traj = Trajectory(grid, np.random.default_rng(0).standard_normal((7, 4)))
    basis = pod_from_trajectory(traj)
    path = str(tmp_path / "mode_norms.csv")
    write_plot_series(path, PlotKind.MODE_NORMS, range(1, basis.J + 1), mode_norms(basis, basis.space))
    rows = read_rows(path)
    assert list(rows[0]) == ["k", "norm"]
    assert [int(r["k"]) for r in rows] == list(range(1, basis.J + 1))
    np.testing.assert_allclose([float(r["norm"]) for r in rows], 1.0, rtol=1e-12)


def test_sigma_tail_series_nonincreasing(tmp_path):
    traj = Trajectory(TimeGrid(1.0, 9), np.random.default_rng(1).standard_normal((10, 5)))
    basis = pod_from_trajectory(traj)
    path = str(tmp_path / "sigma_tail.csv")
    write_plot_series(path, "sigma_tail", range(basis.J + 1), sigma_tail(basis))
    tails = [float(r["tail"]) for r in read_rows(path)]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tails[-1] == 0.0


def test_plot_series_length_mismatch(tmp_path):
    with pytest.raises(ContainerError):
        write_plot_series(str(tmp_path / "x.csv"), PlotKind.ERROR_VS_R, [0, 1], [1.0])
