"""Figure builders over the CLI's CSV + manifest artifacts.

Every number on a figure comes straight out of the input CSV; nothing is
recomputed here. Rendering is pinned to the Agg backend with fixed size,
fonts, and metadata so identical inputs produce byte-identical images.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["KINDS", "PlotSpec", "SchemaError", "load_artifact", "build_figure", "render"]

KINDS = ("path-band", "sweep-curves", "error-panel", "histogram-prefix")

# one fixed look for every figure: determinism beats prettiness
_RC = {
    "figure.figsize": (8.0, 5.0),
    "figure.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "svg.hashsalt": "pa-plots",
    "axes.prop_cycle": plt.cycler(
        color=["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    ),
}

_SCHEMAS = {
    "path-band": {"time_years", "income_ratio", "band_lower", "band_upper", "marker_years"},
    "sweep-curves": {"group", "n_poor", "m_over_M", "years_mc"},
    "histogram-prefix": {"z", "cumulative_count", "cumulative_nu"},
}
# the error panel arrives in two layouts: metric rows or per-cell rows
_ERROR_PANEL_SCHEMAS = (
    {"metric", "value", "approximation", "difference"},
    {"group", "m_over_M", "years_mc", "years_approx"},
)


class SchemaError(ValueError):
    """Input CSV or manifest does not match the requested figure kind."""


@dataclass(frozen=True)
class PlotSpec:
    input_csv: Path
    kind: str
    output_image: Path

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def load_artifact(csv_path: Path, kind: str) -> tuple[dict[str, list[str]], dict]:
    """Columns plus manifest, validated against the figure kind."""
    manifest_path = Path(str(csv_path) + ".manifest.json")
    if not csv_path.exists():
        raise SchemaError(f"input CSV {csv_path} does not exist")
    if not manifest_path.exists():
        raise SchemaError(f"manifest {manifest_path} does not exist")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("kind") != kind:
        raise SchemaError(
            f"manifest kind {manifest.get('kind')!r} does not match requested {kind!r}"
        )

    with csv_path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        names = reader.fieldnames or []
        rows = list(reader)
    present = set(names)
    if kind == "error-panel":
        if present not in [set(s) for s in _ERROR_PANEL_SCHEMAS]:
            raise SchemaError(f"error-panel columns {sorted(present)} match no known layout")
    elif present != _SCHEMAS[kind]:
        missing = _SCHEMAS[kind] - present
        raise SchemaError(f"columns {sorted(present)} do not match {kind}; missing {sorted(missing)}")
    if not rows:
        raise SchemaError(f"{csv_path} has no data rows")
    return {name: [row[name] for row in rows] for name in names}, manifest


def _floats(columns: dict[str, list[str]], name: str) -> np.ndarray:
    return np.array([float(v) for v in columns[name]])


def _build_path_band(ax, columns):
    t = _floats(columns, "time_years")
    ax.plot(t, _floats(columns, "income_ratio"), label="income ratio")
    ax.plot(t, _floats(columns, "band_lower"), linestyle="--", label="lower bound")
    ax.plot(t, _floats(columns, "band_upper"), linestyle="--", label="upper bound")
    marker = _floats(columns, "marker_years")[0]
    ax.axvline(marker, linestyle=":", label=f"stable until {marker:g} years")
    ax.set_xlabel("time (years)")
    ax.set_ylabel("income relative to start")
    ax.legend(loc="upper left")


def _build_sweep_curves(ax, columns):
    groups = columns["group"]
    n_poor = _floats(columns, "n_poor")
    ratios = columns["m_over_M"]
    years = _floats(columns, "years_mc")
    # homogeneous poor-only curve is ratio independent, draw it once in black
    poor = [(n, y) for g, n, y in zip(groups, n_poor, years) if g == "poor"]
    seen = sorted(set(poor))
    ax.plot([n for n, _ in seen], [y for _, y in seen], color="black", label="poor only")
    for ratio in sorted(set(ratios), key=float):
        mixed = sorted(
            (n, y)
            for g, n, r, y in zip(groups, n_poor, ratios, years)
            if g == "mixed" and r == ratio
        )
        ax.plot([n for n, _ in mixed], [y for _, y in mixed], label=f"mixed, m/M = {ratio}")
    ax.set_xlabel("number of poor members")
    ax.set_ylabel("maximal stable time (years)")
    ax.legend(loc="best", fontsize=8)


def _build_error_panel(ax, columns):
    if "metric" in columns:
        labels = columns["metric"]
        value = _floats(columns, "value")
        approx = _floats(columns, "approximation")
    else:
        labels = [f"{g}, {r}" for g, r in zip(columns["group"], columns["m_over_M"])]
        value = _floats(columns, "years_mc")
        approx = _floats(columns, "years_approx")
    x = np.arange(len(labels))
    width = 0.38
    ax.bar(x - width / 2, value, width, label="Monte Carlo")
    ax.bar(x + width / 2, approx, width, label="approximation")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("estimate")
    ax.legend(loc="best")


def _build_histogram_prefix(ax, columns):
    z = _floats(columns, "z")
    cum_count = _floats(columns, "cumulative_count")
    cum_nu = _floats(columns, "cumulative_nu")
    counts = np.diff(np.concatenate([[0.0], cum_count]))
    x = np.arange(z.size)
    ax.bar(x, counts, color="#1f77b4", alpha=0.6, label="members at amount")
    ax.set_xticks(x)
    ax.set_xticklabels([f"{v:g}" for v in z], fontsize=8)
    ax.set_xlabel("savings amount")
    ax.set_ylabel("member count")
    twin = ax.twinx()
    twin.plot(x, cum_nu, color="#d62728", marker="o", label="cumulative implied number")
    twin.set_ylabel("implied number of the prefix")
    handles_a, labels_a = ax.get_legend_handles_labels()
    handles_b, labels_b = twin.get_legend_handles_labels()
    ax.legend(handles_a + handles_b, labels_a + labels_b, loc="upper left")


_BUILDERS = {
    "path-band": _build_path_band,
    "sweep-curves": _build_sweep_curves,
    "error-panel": _build_error_panel,
    "histogram-prefix": _build_histogram_prefix,
}


def build_figure(kind: str, columns: dict[str, list[str]], manifest: dict):
    """Matplotlib figure for already-loaded artifact columns."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _BUILDERS[kind](ax, columns)
        seed = manifest.get("seed")
        title = kind if seed is None else f"{kind} (seed {seed})"
        ax.set_title(title)
        fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Render the artifact to PNG or SVG; returns the output path."""
    suffix = spec.output_image.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise SchemaError(f"output must be .png or .svg, got {suffix!r}")
    columns, manifest = load_artifact(spec.input_csv, spec.kind)
    fig = build_figure(spec.kind, columns, manifest)
    try:
        # element ids in SVG output are derived from svg.hashsalt at save
        # time, so saving needs the same pinned settings as building
        with plt.rc_context(_RC):
            if suffix == ".png":
                fig.savefig(spec.output_image, format="png", metadata={"Software": "pa-plots"})
            else:
                fig.savefig(
                    spec.output_image,
                    format="svg",
                    metadata={"Date": None, "Creator": "pa-plots"},
                )
    finally:
        plt.close(fig)
    return spec.output_image
