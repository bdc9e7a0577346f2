"""Report assembly, text summaries and atomic JSON/CSV output."""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
from mpmath import mpc, mpf, nstr

from . import __version__

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def to_jsonable(value):
    """mpmath/numpy values to plain JSON types; floats out of range become strings."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        value = int(value)
        return value if abs(value) < 2 ** 53 else str(value)
    if isinstance(value, mpc):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(value.real)), "im": to_jsonable(float(value.imag))}
    if isinstance(value, mpf):
        f = float(value)
        if math.isfinite(f) and (f != 0 or value == 0):
            return f
        return "inf" if value == mpf("inf") else mp_string(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else str(f)
    return value


def mp_string(value: mpf) -> str:
    return nstr(value, 17)


def build_report(command: str, config: dict, results: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "config": config,
        "results": results,
    }


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(report: dict, path) -> Path:
    path = Path(path)
    _atomic_write(path, dumps(report))
    logger.info(f"wrote {path}")
    return path


def write_csv(rows: List[dict], path) -> Path:
    path = Path(path)
    df = pd.DataFrame([to_jsonable(r) for r in rows])
    _atomic_write(path, df.to_csv(index=False))
    logger.info(f"wrote {path} ({len(df)} rows)")
    return path


def write_timings(command: str, timings: Dict[str, float], out_dir) -> Path:
    path = Path(out_dir) / f"{command}.timings.json"
    _atomic_write(path, json.dumps({k: round(v, 6) for k, v in timings.items()}, indent=2) + "\n")
    return path


def emit(report: dict, tables: Dict[str, List[dict]], out_dir, fmt: str = "json") -> List[Path]:
    """Write <command>.json and/or one <command>_<table>.csv per table."""
    out_dir = Path(out_dir)
    command = report["command"]
    written = []
    if fmt in ("json", "both"):
        written.append(write_json(report, out_dir / f"{command}.json"))
    if fmt in ("csv", "both"):
        for name, rows in tables.items():
            if rows:
                written.append(write_csv(rows, out_dir / f"{command}_{name}.csv"))
    return written


# ---------------------------------------------------------------------------
# Text summaries
# ---------------------------------------------------------------------------

def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "-"
    if isinstance(value, (mpf, float, np.floating)):
        return f"{float(value):.{digits}g}" if math.isfinite(float(value)) else mp_string(mpf(value))
    return str(value)


def format_table(rows: Iterable[dict], columns: Optional[List[str]] = None) -> str:
    rows = list(rows)
    if not rows:
        return "(empty)"
    columns = columns or list(rows[0])
    cells = [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def alpha_summary(label: str, rows: List[dict], class_m: List[int]) -> str:
    lines = [f"α = {label}", "", format_table(rows, ["n", "a", "p", "q", "theta", "lower_ok", "upper_ok"])]
    shown = ", ".join(str(m) for m in class_m[:20])
    more = f" … (+{len(class_m) - 20})" if len(class_m) > 20 else ""
    lines += ["", f"class M: {shown}{more}"]
    return "\n".join(lines)


def hypotheses_summary(hyp: dict) -> str:
    lines = []
    for name in ("h1", "h2", "h3"):
        h = hyp[name]
        extra = f" (witness m={h['witness']})" if h.get("witness") is not None else ""
        lines.append(f"  {name.upper()}: {h['verdict']}{extra}")
    lines.append(f"  K1 = {_fmt(hyp.get('K1'))}, K2 = {_fmt(hyp.get('K2'))}")
    return "\n".join(lines)


def verdict_summary(verdict: dict) -> str:
    lines = [f"Outcome: {verdict['outcome']}", f"  {verdict['reason']}"]
    if verdict.get("l2"):
        lines.append(f"  L2 test: {verdict['l2']['status']} ({verdict['l2']['reason']})")
    if verdict.get("subsequence"):
        lines.append(f"  subsequence: {verdict['subsequence']}")
    for note in verdict.get("annotations", []):
        lines.append(f"  - {note}")
    return "\n".join(lines)


def certificate_summary(cert: dict) -> str:
    lines = [f"Certificate ({cert['kind']}): {cert['status']}"]
    for c in cert["per_lambda"]:
        values = ", ".join(_fmt(p["integral"], 4) for p in c["points"])
        lines.append(f"  λ={_fmt(c['lambda'], 4)}: {c['status']}  [{values}]")
    return "\n".join(lines)


def clt_summary(rows: List[dict]) -> str:
    return format_table(rows, ["n", "u", "ks", "cf_distance", "variance", "expected_variance", "normal_within"])
