"""Report documents, run manifests and flat/figure exports.

Reports hold only configuration and results, never timestamps, so the same
configuration reproduces the same bytes.  Timing and environment go to the
manifest written next to each report.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__

SCHEMA = "malign.report/1"
MANIFEST_SCHEMA = "malign.manifest/1"
SIG_DIGITS = 12

CSV_COLUMNS = {
    "gamma": ["n", "mean_L", "se", "gamma", "var", "replicates"],
    "surface": ["q", "lengths", "mean_L", "se", "gamma", "replicates"],
    "hoeffding": ["t", "bound", "freq_upper", "freq_lower", "flag_upper", "flag_lower"],
    "clt": ["n", "var_hat", "var_per_n", "dk", "dk_band", "skew", "kurt"],
    "bm": ["n", "mode", "p", "replicates", "mean", "se", "skewness", "match_rate"],
    "perm": ["n", "c", "replicates", "mean", "se", "mean_over_sqrt_n", "var", "skewness", "excess_kurtosis"],
}
SVG_SERIES = {"gamma": ("n", "gamma"), "clt": ("n", "dk")}


class SchemaError(ValueError):
    pass


def _round(x: float) -> float | None:
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def to_jsonable(obj: Any) -> Any:
    """Plain JSON values: floats at 12 significant digits, rationals as ``"num/den"`` strings."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, str) or obj is None:
        return obj
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise SchemaError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: Any) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2) + "\n"


def canonical(doc: Any) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    """sha256 of the canonical config JSON; the worker count does not take part."""
    trimmed = {k: v for k, v in config.items() if k != "workers"}
    return hashlib.sha256(canonical(trimmed).encode()).hexdigest()


def make_report(kind: str, config: dict, rows: list, **extra) -> dict:
    doc = {"schema": SCHEMA, "kind": kind, "config": config, "rows": rows}
    doc.update(extra)
    return to_jsonable(doc)


def validate_report(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("report must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"unknown report schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    for key, typ in (("kind", str), ("config", dict), ("rows", list)):
        if not isinstance(doc.get(key), typ):
            raise SchemaError(f"report field {key!r} missing or not a {typ.__name__}")
    for row in doc["rows"]:
        if not isinstance(row, dict):
            raise SchemaError("every row must be an object")


@dataclasses.dataclass
class RunManifest:
    argv: list[str]
    config: dict
    config_digest: str
    seed: int | None
    version: str
    wall_time: float
    modules: dict
    report: str
    report_sha256: str

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["schema"] = MANIFEST_SCHEMA
        return doc

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        doc = json.loads(Path(path).read_text())
        if doc.pop("schema", None) != MANIFEST_SCHEMA:
            raise SchemaError(f"{path} is not a run manifest")
        return cls(**doc)


def module_versions() -> dict:
    import numba
    import scipy

    return {
        "malign": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "scipy": scipy.__version__,
    }


def manifest_path(report_path: str | Path) -> Path:
    p = Path(report_path)
    return p.with_name(p.stem + ".manifest.json")


def emit_report(doc: dict, out: str | Path, formats: Iterable[str] = ("json",)) -> list[Path]:
    """Write ``doc`` as JSON, plus CSV and SVG when asked and defined for its kind."""
    validate_report(doc)
    out = Path(out)
    written = []
    text = dumps(doc)
    out.write_text(text)
    written.append(out)
    formats = set(formats)
    kind = doc["kind"]
    if "csv" in formats and kind in CSV_COLUMNS:
        path = out.with_suffix(".csv")
        path.write_text(to_csv(doc))
        written.append(path)
    if "svg" in formats and kind in SVG_SERIES:
        svg = to_svg(doc)
        if svg is not None:
            path = out.with_suffix(".svg")
            path.write_text(svg)
            written.append(path)
    return written


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, list):
        return ";".join(_cell(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(doc: dict) -> str:
    cols = CSV_COLUMNS[doc["kind"]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in doc["rows"]:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def to_svg(doc: dict, width: int = 640, height: int = 400, pad: int = 56) -> str | None:
    """Line chart with log-scale x; the plotted numbers are embedded in a comment."""
    xk, yk = SVG_SERIES[doc["kind"]]
    pts = [(r[xk], r[yk]) for r in doc["rows"] if r.get(xk) is not None and r.get(yk) is not None]
    if not pts:
        return None
    lx = [math.log10(x) for x, _ in pts]
    ys = [y for _, y in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ys), max(ys)
    xs = x1 - x0 or 1.0
    yspan = y1 - y0 or 1.0

    def px(v):
        return pad + (v - x0) / xs * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / yspan * (height - 2 * pad)

    vertices = " ".join(f"{px(a):.3f},{py(b):.3f}" for a, b in zip(lx, ys))
    data = json.dumps({"x": [x for x, _ in pts], "y": ys, "x_key": xk, "y_key": yk})
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<!-- data: {data} -->",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 16}" text-anchor="middle" font-size="13">{xk} (log scale)</text>',
        f'<text x="16" y="{height / 2:.0f}" font-size="13" transform="rotate(-90 16 {height / 2:.0f})" text-anchor="middle">{yk}</text>',
        f'<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{vertices}"/>',
    ]
    for (x, y), a in zip(pts, lx):
        lines.append(f'<circle cx="{px(a):.3f}" cy="{py(y):.3f}" r="3" fill="#1f5fa8"><title>{x}: {y}</title></circle>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_data(svg_text: str) -> dict:
    start = svg_text.index("<!-- data: ") + len("<!-- data: ")
    end = svg_text.index(" -->", start)
    return json.loads(svg_text[start:end])


def write_manifest(
    argv: list[str], config: dict, seed: int | None, wall_time: float, report_path: str | Path
) -> Path:
    report_path = Path(report_path)
    man = RunManifest(
        argv=list(argv),
        config=to_jsonable(config),
        config_digest=config_digest(config),
        seed=seed,
        version=__version__,
        wall_time=round(wall_time, 3),
        modules=module_versions(),
        report=report_path.name,
        report_sha256=hashlib.sha256(report_path.read_bytes()).hexdigest(),
    )
    path = manifest_path(report_path)
    path.write_text(json.dumps(man.to_json(), sort_keys=True, indent=2) + "\n")
    return path
