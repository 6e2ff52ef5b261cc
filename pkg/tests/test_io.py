import json
import math

from hypothesis import given, strategies as st

from kerrcrit.io import atomic_write, csv_text, fmt, metadata, read_csv, read_meta, write_columns, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_reals_roundtrip_bit_exact(x):
    assert float(fmt(x)) == x


def test_fmt_special_values():
    assert fmt(math.nan) == "nan"
    assert fmt(7) == "7" and fmt(True) == "1"
    assert fmt("a,b\nc") == "a;b c"


def test_csv_metadata_and_lf(tmp_path):
    meta = metadata({"model": {"delta": 2.0}}, task="t")
    text = csv_text(["a", "b"], [(1, 0.1), (2, 1 / 3)], meta)
    assert "\r" not in text and text.endswith("\n")
    p = tmp_path / "x.csv"
    atomic_write(p, text)
    header, rows = read_csv(p)
    assert header == ["a", "b"]
    assert float(rows[1]["b"]) == 1 / 3
    assert read_meta(p)["config"]["model"]["delta"] == 2.0
    assert read_meta(p)["units"].startswith("rates in gamma")


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "y.json"
    write_json(p, {"z": complex(1, 2)})
    assert json.loads(p.read_text()) == {"z": [1.0, 2.0]}
    assert [q.name for q in p.parent.iterdir()] == ["y.json"]


def test_columns_header(tmp_path):
    p = tmp_path / "c.dat"
    write_columns(p, {"F_tilde": [0.5, 1.0], "n_over_N": [0.1, 0.2]}, comment="units of gamma")
    lines = p.read_text().splitlines()
    assert lines[:2] == ["# units of gamma", "# F_tilde n_over_N"]
    assert lines[2].split() == ["0.5", "0.10000000000000001"]
