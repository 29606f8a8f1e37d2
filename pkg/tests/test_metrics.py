"""Metrics CSV contract: header, formatting, validation errors."""

import pytest

from ligs.metrics import (
    HEADER,
    MetricsError,
    MetricsRow,
    MetricsWriter,
    emit_metrics,
    read_metrics,
)


def test_header_contract():
    assert HEADER == "step,ret_ext,ret_int,switches,success,seed"


def test_zero_row_formatting():
    row = MetricsRow(step=0, ret_ext=0.0, ret_int=0.0, switches=0, success=0, seed=42)
    assert row.to_line() == "0,0.0,0.0,0,0,42"


def test_float_fields_round_trip_exactly(tmp_path):
    path = str(tmp_path / "m.csv")
    vals = (1 / 3, -2.5e-17, 1234.0625)
    with MetricsWriter(path) as w:
        for i, v in enumerate(vals):
            emit_metrics(w, MetricsRow(i, v, -v, i, 0, 7))
    rows = read_metrics(path)
    assert [r.ret_ext for r in rows] == list(vals)
    assert [r.ret_int for r in rows] == [-v for v in vals]


def test_line_count(tmp_path):
    path = str(tmp_path / "m.csv")
    with MetricsWriter(path) as w:
        for i in range(10_000):
            w.emit(MetricsRow(i, 0.0, 0.0, 0, 0, 0))
    text = open(path, encoding="utf-8").read()
    assert len(text.splitlines()) == 10_000 + 1


def test_writer_rejects_decreasing_step(tmp_path):
    with MetricsWriter(str(tmp_path / "m.csv")) as w:
        w.emit(MetricsRow(5, 0.0, 0.0, 0, 0, 0))
        with pytest.raises(MetricsError):
            w.emit(MetricsRow(3, 0.0, 0.0, 0, 0, 0))


def test_reader_flags_decreasing_step(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(HEADER + "\n5,0.0,0.0,0,0,1\n3,0.0,0.0,0,0,1\n", encoding="utf-8")
    with pytest.raises(MetricsError, match="line 3"):
        read_metrics(str(p))


def test_reader_flags_bad_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("step,ret\n", encoding="utf-8")
    with pytest.raises(MetricsError, match="line 1"):
        read_metrics(str(p))


def test_reader_flags_field_count_and_names_path(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(HEADER + "\n1,0.0,0.0,0\n", encoding="utf-8")
    with pytest.raises(MetricsError, match="m.csv"):
        read_metrics(str(p))


def test_reader_flags_bad_success_value(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(HEADER + "\n1,0.0,0.0,0,2,1\n", encoding="utf-8")
    with pytest.raises(MetricsError, match="success"):
        read_metrics(str(p))


def test_reader_missing_file():
    with pytest.raises(MetricsError):
        read_metrics("/nonexistent/metrics.csv")


def test_equal_steps_allowed(tmp_path):
    # two episodes can close on the same global step count
    path = str(tmp_path / "m.csv")
    with MetricsWriter(path) as w:
        w.emit(MetricsRow(128, 1.0, 0.0, 0, 1, 0))
        w.emit(MetricsRow(128, 0.0, 0.0, 0, 0, 0))
    assert len(read_metrics(path)) == 2
