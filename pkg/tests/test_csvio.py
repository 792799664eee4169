import csv
import json
import math
from pathlib import Path

import numpy as np

from probelb.utils.csvio import format_value, metadata_path, read_csv, write_csv
from probelb.utils.plotting import save_line_plot


def test_format_value() -> None:
    assert format_value(1.0 / 3.0) == "0.333333333333"
    assert format_value(np.float64(2.5)) == "2.5"
    assert format_value(np.int64(7)) == "7"
    assert format_value(True) == "1"
    assert format_value(math.inf) == "inf"
    assert format_value(math.nan) == "nan"
    assert format_value(None) == ""


def test_metadata_goes_to_a_sidecar(tmp_path: Path) -> None:
    path = write_csv(
        tmp_path / "nested" / "sweep.csv",
        ["sigma", "efficiency"],
        [(0.0, 1.0), (0.5, 0.75)],
        metadata={"n_servers": 10, "profile": "no_false_small"},
    )
    assert path.read_text(encoding="utf-8") == "sigma,efficiency\n0,1\n0.5,0.75\n"
    sidecar = metadata_path(path)
    assert sidecar.name == "sweep.meta.json"
    assert json.loads(sidecar.read_text(encoding="utf-8")) == {"n_servers": "10", "profile": "no_false_small"}

    metadata, rows = read_csv(path)
    assert metadata == {"n_servers": "10", "profile": "no_false_small"}
    assert rows == [{"sigma": "0", "efficiency": "1"}, {"sigma": "0.5", "efficiency": "0.75"}]


def test_plain_csv_reader_sees_the_header_first(tmp_path: Path) -> None:
    path = write_csv(tmp_path / "sweep.csv", ["sigma", "efficiency"], [(0.25, 0.9)], metadata={"rho": 0.8})
    with open(path, encoding="utf-8", newline="") as f:
        assert list(csv.reader(f)) == [["sigma", "efficiency"], ["0.25", "0.9"]]


def test_no_sidecar_without_metadata(tmp_path: Path) -> None:
    path = write_csv(tmp_path / "events.csv", ["x"], [(1,)])
    assert not metadata_path(path).exists()
    assert read_csv(path) == ({}, [{"x": "1"}])


def test_rewrite_is_byte_identical(tmp_path: Path) -> None:
    rows = [(s, math.exp(-s)) for s in np.linspace(0.0, 1.0, 7)]
    first = write_csv(tmp_path / "a.csv", ["x", "y"], rows).read_bytes()
    second = write_csv(tmp_path / "a.csv", ["x", "y"], rows).read_bytes()
    assert first == second


def test_line_plot(tmp_path: Path) -> None:
    path = save_line_plot(
        tmp_path / "plot.svg",
        {"E": ([0.0, 0.1, 1.0], [1.0, 0.8, 0.9])},
        title="test",
        xlabel="sigma",
        ylabel="E",
        log_x=True,
        reference=1.0,
    )
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")
