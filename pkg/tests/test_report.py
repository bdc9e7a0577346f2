"""Tests for specflow.report."""

import json

import numpy as np
import pandas as pd
from mpmath import mpc, mpf

from specflow import __version__
from specflow.report import (
    SCHEMA_VERSION,
    build_report,
    dumps,
    emit,
    format_table,
    hypotheses_summary,
    to_jsonable,
    write_timings,
)


def _report():
    return build_report("alpha", {"seed": 0}, {"q": [1, 1, 2], "big": 2 ** 80})


class TestToJsonable:
    def test_big_integers(self):
        assert to_jsonable(2 ** 53 - 1) == 2 ** 53 - 1
        assert to_jsonable(2 ** 60) == str(2 ** 60)
        assert to_jsonable(np.int64(7)) == 7

    def test_mpmath(self):
        assert to_jsonable(mpf("0.25")) == 0.25
        tiny = to_jsonable(mpf("1e-400"))
        assert isinstance(tiny, str) and "e-400" in tiny
        assert to_jsonable(mpf("inf")) == "inf"
        assert to_jsonable(mpc(1, -2)) == {"re": 1.0, "im": -2.0}

    def test_numpy(self):
        assert to_jsonable(np.array([1.5, 2.5])) == [1.5, 2.5]
        assert to_jsonable(np.bool_(True)) is True
        assert to_jsonable(float("nan")) == "nan"

    def test_nested(self):
        assert to_jsonable({1: (mpf(1), [np.float64(0.5)])}) == {"1": [1.0, [0.5]]}


class TestWriting:
    def test_envelope(self):
        report = _report()
        assert report["schema_version"] == SCHEMA_VERSION
        assert report["tool_version"] == __version__
        assert json.loads(dumps(report))["results"]["big"] == str(2 ** 80)

    def test_dumps_is_stable(self):
        assert dumps(_report()) == dumps(_report())

    def test_emit_both(self, tmp_path):
        paths = emit(_report(), {"convergents": [{"n": 0, "q": 1}, {"n": 1, "q": 2}], "empty": []},
                     tmp_path, "both")
        assert sorted(p.name for p in paths) == ["alpha.json", "alpha_convergents.csv"]
        df = pd.read_csv(tmp_path / "alpha_convergents.csv")
        assert df["q"].tolist() == [1, 2]
        assert not list(tmp_path.glob(".*.tmp"))

    def test_timings(self, tmp_path):
        path = write_timings("clt", {"rows": 0.1234567891}, tmp_path)
        assert json.loads(path.read_text()) == {"rows": 0.123457}


class TestSummaries:
    def test_format_table(self):
        text = format_table([{"n": 1, "x": 0.5}, {"n": 10, "x": None}])
        lines = text.splitlines()
        assert lines[0].split() == ["n", "x"]
        assert lines[-1].split() == ["10", "-"]

    def test_empty_table(self):
        assert format_table([]) == "(empty)"

    def test_hypotheses(self):
        h = {"verdict": "pass", "witness": None}
        text = hypotheses_summary({"h1": h, "h2": {"verdict": "fail", "witness": 6}, "h3": h, "K1": 0.5, "K2": 3})
        assert "H2: fail (witness m=6)" in text
        assert "K1 = 0.5" in text
