"""Delimited output, config echo headers, and the JSON summary document."""

import json
import math

import numpy as np
import pytest

from dephasim import ConfigError, TimeSeries
from dephasim.report import (
    FLOAT_FORMAT,
    format_float,
    header_lines,
    read_timeseries,
    render_summary,
    write_summary,
    write_table,
    write_timeseries,
)

AWKWARD_FLOATS = [
    math.pi, 1.0 / 3.0, 6.02214076e23, 1e-300, -0.0, 2.0**-52,
    1.7976931348623157e308, 5e-324,
]


def test_format_float_round_trips_bit_exactly():
    for x in AWKWARD_FLOATS:
        text = format_float(x)
        assert float(text) == x or (x == 0.0 and float(text) == 0.0), x


def test_format_float_nonfinite():
    assert format_float(math.inf) == "inf"
    assert format_float(-math.inf) == "-inf"
    assert format_float(math.nan) == "nan"


def test_header_lines_shapes():
    lines = header_lines([
        ("device.q_total", 10400.0),
        ("experiment.protocol", "ramsey"),
        ("fit.decay_time", math.inf),
        ("flag", True),
    ])
    assert lines[0] == "# device.q_total = 10400.0"
    assert lines[1] == '# experiment.protocol = "ramsey"'
    assert lines[2] == "# fit.decay_time = inf"
    assert lines[3] == "# flag = true"


def test_write_table_layout(tmp_path):
    path = write_table(
        tmp_path / "t.csv",
        ["name", "value"],
        [{"name": "x", "value": 1.5}, {"name": "flagged", "value": True}],
        header_items=[("run.id", 7)],
    )
    lines = path.read_text().splitlines()
    assert lines[0] == "# run.id = 7"
    assert lines[1] == "name,value"
    assert lines[2] == "x," + (FLOAT_FORMAT % 1.5)
    assert lines[3] == "flagged,true"


def test_timeseries_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    times = np.sort(rng.uniform(0.0, 1e-4, 40))
    values = rng.normal(size=(40, 2)) * np.array([1e-17, 1e9])
    series = TimeSeries(
        times=times,
        values=values,
        labels=("sigma_x", "sigma_y"),
        meta={
            "protocol": "ramsey",
            "detuning": 35e3,
            "seed": None,                     # dropped: not a scalar str/num
            "noise_sigma": 0.0,
            "final_state": np.eye(2),          # dropped: array
            "_private": "skipme",              # dropped: underscore
            "note": "free text, with comma",
        },
    )
    path = write_timeseries(tmp_path / "ts.csv", series,
                            header_items=[("device.q_total", 10400.0)])
    back = read_timeseries(path)
    np.testing.assert_array_equal(back.times, times)
    np.testing.assert_array_equal(back.values, values)
    assert back.labels == ("sigma_x", "sigma_y")
    assert back.meta["protocol"] == "ramsey"
    assert back.meta["detuning"] == 35e3
    assert back.meta["note"] == "free text, with comma"
    assert back.meta["device.q_total"] == 10400.0
    assert "final_state" not in back.meta
    assert "_private" not in back.meta
    assert "seed" not in back.meta


def test_read_timeseries_requires_time_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ConfigError, match="t_s"):
        read_timeseries(p)


def test_read_timeseries_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ConfigError, match="no column header"):
        read_timeseries(p)


def test_read_timeseries_malformed_body(tmp_path):
    p = tmp_path / "ragged.csv"
    p.write_text("t_s,u\n0.0,1.0,9.0\n1.0,2.0,9.0\n")
    with pytest.raises(ConfigError, match="malformed"):
        read_timeseries(p)


def test_write_summary_strict_json(tmp_path):
    payload = {
        "fit": {
            "decay_time_s": math.inf,
            "residual_rms": np.float64(1.5e-9),
            "converged": True,
            "count": np.int64(3),
            "missing": math.nan,
        },
        "rows": [{"v": 1.0}, {"v": -math.inf}],
    }
    path = write_summary(tmp_path / "summary.json", payload)
    text = path.read_text()
    doc = json.loads(text)  # would fail on bare Infinity/NaN tokens
    assert doc["fit"]["decay_time_s"] == "inf"
    assert doc["fit"]["missing"] == "nan"
    assert doc["fit"]["residual_rms"] == 1.5e-9
    assert doc["fit"]["count"] == 3
    assert doc["rows"][1]["v"] == "-inf"
    assert "Infinity" not in text and "NaN" not in text


def test_render_summary_sections():
    text = render_summary({
        "prediction": {"gamma_exact_per_s": 22633.4, "regime": "crossover"},
        "notes": ["first", "second"],
    })
    assert "[prediction]" in text
    assert "gamma_exact_per_s" in text
    assert "crossover" in text
    assert "[notes]" in text
    assert "  first" in text
