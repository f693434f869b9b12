"""Report assembly and atomic emission (JSON, text table, CSV)."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

from . import __version__

REPORT_VERSION = 1


def build_report(config: dict, claims=(), qm=()) -> dict:
    return {"version": REPORT_VERSION, "package_version": __version__, "config": dict(config),
            "claims": [c.to_dict() if hasattr(c, "to_dict") else c for c in claims],
            "qm": list(qm)}


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def _fmt(v):
    return f"{v:.3e}" if isinstance(v, float) else str(v)


def render_text(report: dict) -> str:
    lines = []
    if report["claims"]:
        head = f"{'claim':<6} {'status':<12} {'certificate':<20} {'numeric max residual':<28} anchor"
        lines += [head, "-" * len(head)]
        for c in report["claims"]:
            num = ", ".join(f"{n['group']}={n['max_residual']:.1e}" for n in c["numeric"]) or "-"
            lines.append(f"{c['id']:<6} {c['status']:<12} {c['certificate'].get('kind', '-'):<20} "
                         f"{num:<28} {c['equation_anchor']}")
            for note in c["notes"]:
                lines.append(f"{'':<6} note: {note}")
        counts = {}
        for c in report["claims"]:
            counts[c["status"]] = counts.get(c["status"], 0) + 1
        lines.append("summary: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    for q in report["qm"]:
        lines.append(f"[{q['experiment']}] status={q.get('status', '-')}")
        for key in ("max_residuals", "half_dt_max_residuals", "convergence_ratios"):
            if key in q:
                lines.append(f"  {key}: " + ", ".join(f"{k}={_fmt(v)}" for k, v in q[key].items()))
        for key, val in q.get("checks", {}).items():
            lines.append(f"  {key}: {_fmt(val)}")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report: dict, fmt: str = "json", path=None) -> str:
    if not report["claims"] and not report["qm"]:
        raise ValueError("nothing to report")
    text = render(report, fmt)
    if path is not None:
        write_atomic(path, text)
    return text


def trajectory_csv(columns: dict) -> str:
    """Columns of equal length; NaN entries are written as empty cells."""
    names = list(columns)
    n = len(columns[names[0]])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        row = []
        for k in names:
            v = float(columns[k][i])
            row.append("" if v != v else repr(v))
        w.writerow(row)
    return buf.getvalue()
