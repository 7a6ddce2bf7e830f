"""Render regret curves from an aggregate results CSV.

Input is the experiment harness's aggregate CSV (one row per grid point,
policy, regret kind, and benchmark). Output is a PNG with one line and one
+/- 1 std band per policy, plus a machine-readable JSON sidecar of the exact
plotted points so downstream checks never need image comparison.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

AGGREGATE_COLUMNS = [
    "experiment", "policy", "k", "t", "s", "v",
    "regret_kind", "benchmark", "mean", "std", "n",
]


class RenderError(ValueError):
    """Raised for malformed input CSV or an empty selection."""


@dataclass
class FigureSpec:
    """What to plot and where to write it."""

    csv_path: str
    output_path: str
    axis: str = "T"
    # Optional filters; None keeps everything present in the CSV.
    policies: list[str] | None = None
    regret_kind: str | None = None
    benchmark: str | None = None
    # Dashed reference c * x^exponent anchored at the first plotted point.
    reference_exponent: float | None = None
    loglog: bool = False

    def __post_init__(self):
        if self.axis not in ("T", "K"):
            raise RenderError(f"axis must be 'T' or 'K', got {self.axis!r}")
        if self.reference_exponent is not None and not (0.0 < self.reference_exponent <= 1.0):
            raise RenderError("reference exponent must lie in (0, 1]")


def _read_rows(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise RenderError("empty CSV")
    missing = [c for c in AGGREGATE_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise RenderError(f"CSV is missing columns: {', '.join(missing)}")
    return list(reader)


def build_series(spec: FigureSpec, text: str) -> list[dict]:
    """Group the CSV into per-policy (x, mean, std) series, sorted by x."""
    xcol = "t" if spec.axis == "T" else "k"
    rows = _read_rows(text)
    if spec.policies is not None:
        rows = [r for r in rows if r["policy"] in spec.policies]
    if spec.regret_kind is not None:
        rows = [r for r in rows if r["regret_kind"] == spec.regret_kind]
    if spec.benchmark is not None:
        rows = [r for r in rows if r["benchmark"] == spec.benchmark]
    if not rows:
        raise RenderError("selection matches no rows")

    order: list[str] = []
    grouped: dict[str, list[tuple[float, float, float]]] = {}
    for r in rows:
        name = r["policy"]
        if name not in grouped:
            grouped[name] = []
            order.append(name)
        grouped[name].append((float(r[xcol]), float(r["mean"]), float(r["std"])))

    series = []
    for name in order:
        pts = sorted(grouped[name])
        xs = [p[0] for p in pts]
        if len(set(xs)) != len(xs):
            raise RenderError(
                f"policy {name!r} has multiple rows per {xcol}; filter by "
                "regret_kind/benchmark to disambiguate"
            )
        series.append({
            "policy": name,
            "x": xs,
            "mean": [p[1] for p in pts],
            "std": [p[2] for p in pts],
        })
    return series


def reference_line(series: list[dict], exponent: float) -> dict:
    """Dashed guide c * x^exponent anchored at the first series' first point."""
    anchor = series[0]
    x = np.asarray(anchor["x"], dtype=np.float64)
    mean = np.asarray(anchor["mean"], dtype=np.float64)
    y = mean[0] * (x / x[0]) ** exponent
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(y - mean) / np.abs(mean)
    gap = float(np.max(rel[np.isfinite(rel)])) if np.any(np.isfinite(rel)) else float("nan")
    return {
        "exponent": exponent,
        "anchor_policy": anchor["policy"],
        "x": x.tolist(),
        "y": y.tolist(),
        "max_relative_gap": gap,
    }


def render(spec: FigureSpec) -> tuple[str, str]:
    """Write the figure and its sidecar; returns (image_path, sidecar_path).

    All validation happens before any file is written. The sidecar holds the
    exact plotted numbers, so identical CSV + spec yield an identical sidecar.
    """
    with open(spec.csv_path) as fh:
        text = fh.read()
    series = build_series(spec, text)
    ref = reference_line(series, spec.reference_exponent) \
        if spec.reference_exponent is not None else None

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for s in series:
        x = np.asarray(s["x"])
        mean = np.asarray(s["mean"])
        std = np.asarray(s["std"])
        (line,) = ax.plot(x, mean, marker="o", label=s["policy"])
        ax.fill_between(x, mean - std, mean + std, alpha=0.2, color=line.get_color())
    if ref is not None:
        ax.plot(ref["x"], ref["y"], linestyle="--", color="gray",
                label=f"~{spec.axis}^{ref['exponent']:g}")
    if spec.loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(spec.axis)
    ax.set_ylabel("regret")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)

    sidecar = {
        "axis": spec.axis,
        "loglog": spec.loglog,
        "series": series,
        "reference": ref,
    }
    sidecar_path = spec.output_path + ".points.json"
    tmp = sidecar_path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(sidecar, fh, indent=1)
    os.replace(tmp, sidecar_path)
    return spec.output_path, sidecar_path
