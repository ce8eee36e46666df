"""Check records, run configuration and deterministic report files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from patholab import __version__

STATUSES = ("PASS", "FAIL", "DIVERGES", "CONVERGES", "INCONCLUSIVE", "INFO")


@dataclass
class CheckReport:
    name: str
    status: str
    value: float | None = None
    target: float | None = None
    tolerance: float | None = None
    details: dict = field(default_factory=dict)
    paper_anchor: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "value": self.value,
            "target": self.target,
            "tolerance": self.tolerance,
            "details": self.details,
            "paper_anchor": self.paper_anchor,
        }


def status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


@dataclass
class RunConfig:
    """Everything needed to re-run a command; round-trips through config.json."""

    command: str
    family: str | None = None
    n: int = 2
    beta: float | None = None
    a: float | None = None
    r0: str = "auto"
    margin: float = 0.5
    samples: int = 1000
    J: int = 48
    p_grid: tuple = (1.0, 1.01, 1.05, 1.5, 2.0, 4.0, 10.0)
    c_grid: tuple = (0.1, 1.0, 10.0)
    rho_min: float = 2.0**-20
    seed: int = 0
    out: str = "patholab-out"
    strict: bool = False
    functional: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        d["c_grid"] = list(self.c_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        for key in ("p_grid", "c_grid"):
            if key in kw:
                kw[key] = tuple(float(x) for x in kw[key])
        return cls(**kw)


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: floats with 17 significant digits, non-finite values as strings."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, CheckReport):
        return to_json(obj.to_dict(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass
class Table:
    """A CSV sidecar: header, rows and a one-line description per column."""

    header: list
    rows: list
    columns: dict = field(default_factory=dict)
    description: str = ""


def schema_markdown(tables: dict, plotdata: dict) -> str:
    lines = [
        "# Output schema",
        "",
        "## report.json",
        "",
        "Top-level keys: `version` (string), `seed` (integer), `family` (string),",
        "`n` (integer), `params` (object), `checks` (array).",
        "",
        "Each check has `name`, `status` (one of " + ", ".join(f"`{s}`" for s in STATUSES) + "),",
        "`value`, `target`, `tolerance` (numbers or null), `details` (object) and",
        "`paper_anchor` (the claim the check is about).",
        "Numbers carry 17 significant digits; non-finite values are the strings",
        '`"inf"`, `"-inf"` and `"nan"`.',
        "",
    ]
    for title, group in (("tables", tables), ("plotdata", plotdata)):
        if not group:
            continue
        lines += [f"## {title}/", ""]
        for name, tab in group.items():
            lines.append(f"### {title}/{name}.csv")
            lines.append("")
            if tab.description:
                lines += [tab.description, ""]
            lines.append("| column | meaning |")
            lines.append("| --- | --- |")
            for col in tab.header:
                lines.append(f"| `{col}` | {tab.columns.get(col, '')} |")
            lines.append("")
    return "\n".join(lines)


def build_report(config: RunConfig, checks: list[CheckReport], params: dict | None = None) -> dict:
    return {
        "version": __version__,
        "seed": int(config.seed),
        "family": config.family or "all",
        "n": int(config.n),
        "params": params if params is not None else {},
        "checks": [c.to_dict() for c in checks],
    }


def emit_report(
    config: RunConfig,
    checks: list[CheckReport],
    destination,
    tables: dict | None = None,
    plotdata: dict | None = None,
    params: dict | None = None,
) -> Path:
    """Write report.json, config.json, schema.md, tables/*.csv and plotdata/*.csv."""
    out = Path(destination)
    tables = tables or {}
    plotdata = plotdata or {}
    atomic_write(out / "report.json", to_json(build_report(config, checks, params)) + "\n")
    atomic_write(out / "config.json", to_json(config.to_dict()) + "\n")
    for name, tab in tables.items():
        atomic_write(out / "tables" / f"{name}.csv", csv_text(tab.header, tab.rows))
    for name, tab in plotdata.items():
        atomic_write(out / "plotdata" / f"{name}.csv", csv_text(tab.header, tab.rows))
    atomic_write(out / "schema.md", schema_markdown(tables, plotdata))
    return out / "report.json"


def exit_code(checks: list[CheckReport], strict: bool = False) -> int:
    bad = {"FAIL", "INCONCLUSIVE"} if strict else {"FAIL"}
    return 1 if any(c.status in bad for c in checks) else 0
