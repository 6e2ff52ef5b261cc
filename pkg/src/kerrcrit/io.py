"""Atomic file output, CSV formatting and metadata headers."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from . import __version__

SWEEP_HEADER = ["N", "F_tilde", "Re_lambda", "Im_lambda", "n_over_N", "g2", "cutoff", "err"]


def fmt(x) -> str:
    """17 significant digits; integers verbatim; NaN as 'nan'."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x).replace(",", ";").replace("\n", " ")


def atomic_write(path, text: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(text, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "\n"})) as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metadata(config: dict | None = None, **extra) -> dict:
    meta = {"code": "kerrcrit", "version": __version__, "units": "rates in gamma, times in 1/gamma"}
    if config is not None:
        meta["config"] = config
    meta.update(extra)
    return meta


def meta_lines(meta: dict) -> str:
    return "".join(f"# {line}\n" for line in json.dumps(meta, sort_keys=True, default=_json_default).splitlines())


def csv_text(header, rows, meta: dict | None = None) -> str:
    out = [meta_lines(meta)] if meta else []
    out.append(",".join(header) + "\n")
    for row in rows:
        out.append(",".join(fmt(v) for v in row) + "\n")
    return "".join(out)


def write_csv(path, header, rows, meta: dict | None = None) -> None:
    atomic_write(path, csv_text(header, rows, meta))


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Parse a CSV written by write_csv, skipping '#' metadata lines."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


def read_meta(path) -> dict:
    body = "\n".join(ln[2:] for ln in Path(path).read_text().splitlines() if ln.startswith("# "))
    return json.loads(body) if body else {}


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, payload: dict) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def write_columns(path, columns: dict, meta: dict | None = None, comment: str = "") -> None:
    """Whitespace-separated column file with a '#' header naming axes and units."""
    names = list(columns)
    n = len(columns[names[0]])
    out = [meta_lines(meta)] if meta else []
    if comment:
        out.append(f"# {comment}\n")
    out.append("# " + " ".join(names) + "\n")
    for i in range(n):
        out.append(" ".join(fmt(float(columns[k][i])) for k in names) + "\n")
    atomic_write(path, "".join(out))
