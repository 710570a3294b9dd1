"""Two-dimensional sweeps over (delta/|t|, mu/|t|) with CSV and SVG output."""

from __future__ import annotations

import csv
import dataclasses
import html
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from kitaev_vqe.ansatz import AnsatzKind, AnsatzSpec
from kitaev_vqe.model import ChainParams, even_odd_gap, ground_energy
from kitaev_vqe.pauli import jw_hamiltonian
from kitaev_vqe.vqe import OptimizerConfig, multi_restart, relative_error

GAP = "gap"
RELATIVE_ERROR = "relative_error"
CSV_CORNER = "mu_over_t\\delta_over_t"
MAX_GAP_SITES = 14
_TITLE_KEYS = ("n", "t", "ansatz", "layers", "seed", "estimator")


@dataclass(frozen=True)
class GridSpec:
    """Axes are ``(min, max, steps)`` in units of ``|t|``."""

    delta_over_t: tuple[float, float, int] = (-2.0, 2.0, 41)
    mu_over_t: tuple[float, float, int] = (-4.0, 4.0, 41)
    t: float = -1.0

    def __post_init__(self) -> None:
        for name in ("delta_over_t", "mu_over_t"):
            lo, hi, steps = getattr(self, name)
            if int(steps) != steps or steps < 2:
                raise ValueError(f"{name} needs at least 2 integer steps, got {steps}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} needs finite min < max, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi), int(steps)))
        if not math.isfinite(self.t) or self.t == 0:
            raise ValueError(f"reference hopping t must be finite and nonzero, got {self.t}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.delta_over_t[2], self.mu_over_t[2]

    def delta_values(self) -> np.ndarray:
        return np.linspace(*self.delta_over_t)

    def mu_values(self) -> np.ndarray:
        return np.linspace(*self.mu_over_t)

    def chain(self, n: int, i: int, j: int) -> ChainParams:
        scale = abs(self.t)
        return ChainParams(
            n, self.t, self.delta_values()[i] * scale, self.mu_values()[j] * scale
        )


@dataclass
class ScanResult:
    """``values[i, j]`` belongs to ``delta_over_t[i]`` and ``mu_over_t[j]``.

    Cells that failed hold NaN and are listed in ``failures`` as
    ``(i, j, message)``.
    """

    grid: GridSpec
    values: np.ndarray
    quantity: str
    metadata: dict[str, object] = field(default_factory=dict)
    failures: list[tuple[int, int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values have shape {self.values.shape}, grid {self.grid.shape}")
        failed = {(i, j) for i, j, _ in self.failures}
        for i, j in zip(*np.nonzero(~np.isfinite(self.values))):
            if (int(i), int(j)) not in failed:
                raise ValueError(f"cell ({i}, {j}) is not finite but not marked failed")

    @property
    def complete(self) -> bool:
        return not self.failures


def phase_gap_scan(grid: GridSpec, n: int) -> ScanResult:
    """Even-odd ground-state splitting at every grid point."""
    if not 1 <= n <= MAX_GAP_SITES:
        raise ValueError(f"phase scan supports 1 <= n <= {MAX_GAP_SITES}, got {n}")
    values = np.empty(grid.shape)
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            values[i, j] = even_odd_gap(grid.chain(n, i, j))
    return ScanResult(grid, values, GAP, {"n": n, "t": grid.t})


def cell_seed(seed: int, i: int, j: int) -> int:
    """Seed for cell ``(i, j)``, independent of evaluation order."""
    return int(np.random.SeedSequence((seed, i, j)).generate_state(1)[0])


def _vqe_cell(task) -> tuple[int, int, float, str | None]:
    grid, n, kind, layers, config, i, j = task
    try:
        chain = grid.chain(n, i, j)
        circuit = AnsatzSpec(kind, n, layers).build(chain)
        cfg = dataclasses.replace(config, seed=cell_seed(config.seed, i, j))
        best, _ = multi_restart(jw_hamiltonian(chain), circuit, cfg)
        exact, _ = ground_energy(chain)
        return i, j, relative_error(best.final_energy, exact), None
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return i, j, math.nan, f"{type(exc).__name__}: {exc}"


def vqe_error_scan(
    grid: GridSpec,
    n: int,
    kind: AnsatzKind,
    layers: int,
    config: OptimizerConfig,
    jobs: int = 1,
) -> ScanResult:
    """Relative VQE error (best of restarts) against exact ED at each grid point.

    ``jobs > 1`` evaluates cells in a process pool; results are placed by
    coordinates, so the output does not depend on scheduling.
    """
    AnsatzSpec(kind, n, layers)
    tasks = [
        (grid, n, kind, layers, config, i, j)
        for i in range(grid.shape[0])
        for j in range(grid.shape[1])
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_vqe_cell, tasks))
    else:
        outcomes = [_vqe_cell(task) for task in tasks]
    values = np.empty(grid.shape)
    failures = []
    for i, j, value, error in outcomes:
        values[i, j] = value
        if error is not None:
            failures.append((i, j, error))
    failures.sort()
    metadata = {
        "n": n,
        "t": grid.t,
        "ansatz": kind.value,
        "layers": layers,
        "seed": config.seed,
        "restarts": config.restarts,
        "estimator": config.estimator,
        "max_iterations": config.max_iterations,
        "convergence_tol": config.convergence_tol,
        "init_range": f"{config.init_range[0]!r},{config.init_range[1]!r}",
        "cell_seed": "SeedSequence((seed, i, j))",
    }
    return ScanResult(grid, values, RELATIVE_ERROR, metadata, failures)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_csv(result: ScanResult, path: str | Path) -> None:
    """Header of delta values, then one row per mu value."""
    path = Path(path)
    deltas = result.grid.delta_values()
    lines = [",".join([CSV_CORNER] + [_fmt(d) for d in deltas])]
    for j, mu in enumerate(result.grid.mu_values()):
        lines.append(",".join([_fmt(mu)] + [_fmt(v) for v in result.values[:, j]]))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write scan CSV to {path}: {exc}") from exc


def read_csv(path: str | Path, quantity: str = GAP, t: float = -1.0) -> ScanResult:
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise OSError(f"cannot read scan CSV {path}: {exc}") from exc
    if not rows or rows[0][0] != CSV_CORNER:
        raise ValueError(f"{path} is not a scan CSV")
    deltas = [float(x) for x in rows[0][1:]]
    mus = [float(r[0]) for r in rows[1:]]
    values = np.array([[float(x) for x in r[1:]] for r in rows[1:]]).T
    grid = GridSpec((deltas[0], deltas[-1], len(deltas)), (mus[0], mus[-1], len(mus)), t)
    failures = [
        (int(i), int(j), "read as NaN") for i, j in zip(*np.nonzero(np.isnan(values)))
    ]
    return ScanResult(grid, values, quantity, failures=failures)


def _colors(fractions: np.ndarray) -> list[str]:
    from matplotlib import colormaps

    rgba = colormaps["viridis"](np.clip(fractions, 0.0, 1.0))
    return ["#%02x%02x%02x" % tuple(int(round(255 * c)) for c in row[:3]) for row in rgba]


def _scaled(values: np.ndarray, color_scale: str, floor: float = 1e-16) -> np.ndarray:
    if color_scale == "log":
        return np.log10(np.maximum(np.abs(values), floor))
    if color_scale == "linear":
        return np.abs(values)
    raise ValueError(f"color scale must be 'linear' or 'log', got {color_scale!r}")


def write_svg_heatmap(
    result: ScanResult,
    path: str | Path,
    color_scale: str = "linear",
    thresholds: Sequence[float] = (),
) -> None:
    """Static SVG heatmap with axis labels, a color bar and optional iso outlines.

    Colors encode ``|value|`` (the CSV keeps the sign), so a vanishing gap and
    a small error both show up dark.  Every cell is a ``<rect class="cell">``; failed cells are grey.  For each
    threshold, cells with ``|value| <= threshold`` get an outline in
    ``<g class="iso">``.
    """
    path = Path(path)
    nd, nm = result.grid.shape
    scaled = _scaled(result.values, color_scale)
    finite = np.isfinite(scaled)
    lo = float(scaled[finite].min()) if finite.any() else 0.0
    hi = float(scaled[finite].max()) if finite.any() else 1.0
    span = hi - lo if hi > lo else 1.0
    fractions = np.where(finite, (scaled - lo) / span, 0.0)
    colors = _colors(fractions.ravel())

    cell = max(4.0, min(24.0, 480.0 / max(nd, nm)))
    left, top = 70.0, 50.0
    width, height = nd * cell, nm * cell
    bar_x = left + width + 30
    total_w, total_h = bar_x + 90, top + height + 60

    shown = [f"{k}={result.metadata[k]}" for k in _TITLE_KEYS if k in result.metadata]
    title = result.quantity + (f" ({', '.join(shown)})" if shown else "")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{total_w:g}" height="{total_h:g}" viewBox="0 0 {total_w:g} {total_h:g}">',
        f"<title>{html.escape(title)}</title>",
        "<desc>"
        + html.escape(
            "; ".join(
                [f"color_scale={color_scale}"]
                + [f"{k}={v}" for k, v in result.metadata.items()]
                + [f"failed_cells={len(result.failures)}"]
            )
        )
        + "</desc>",
        '<defs><linearGradient id="bar" x1="0" y1="1" x2="0" y2="0">',
    ]
    for k, color in enumerate(_colors(np.linspace(0, 1, 11))):
        out.append(f'<stop offset="{k / 10:g}" stop-color="{color}"/>')
    out.append("</linearGradient></defs>")
    out.append(
        f'<text x="{total_w / 2:g}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{html.escape(title)}</text>'
    )
    out.append('<g class="cells" shape-rendering="crispEdges">')
    for i in range(nd):
        for j in range(nm):
            x = left + i * cell
            y = top + (nm - 1 - j) * cell
            fill = colors[i * nm + j] if finite[i, j] else "#bbbbbb"
            out.append(
                f'<rect class="cell" x="{x:g}" y="{y:g}" width="{cell:g}" '
                f'height="{cell:g}" fill="{fill}"/>'
            )
    out.append("</g>")
    dashes = ["", "4,2", "2,2", "6,3"]
    for k, level in enumerate(thresholds):
        out.append(
            f'<g class="iso" data-threshold="{_fmt(level)}" fill="none" stroke="white" '
            f'stroke-width="1" stroke-dasharray="{dashes[k % len(dashes)]}">'
        )
        mask = np.abs(result.values) <= level
        for i, j in zip(*np.nonzero(mask)):
            x = left + i * cell
            y = top + (nm - 1 - j) * cell
            out.append(f'<rect x="{x:g}" y="{y:g}" width="{cell:g}" height="{cell:g}"/>')
        out.append("</g>")

    d_lo, d_hi, _ = result.grid.delta_over_t
    m_lo, m_hi, _ = result.grid.mu_over_t
    text = 'font-family="sans-serif" font-size="11"'
    out += [
        f'<rect x="{left:g}" y="{top:g}" width="{width:g}" height="{height:g}" '
        'fill="none" stroke="black"/>',
        f'<text x="{left:g}" y="{top + height + 15:g}" {text}>{_fmt(d_lo)}</text>',
        f'<text x="{left + width:g}" y="{top + height + 15:g}" text-anchor="end" {text}>'
        f"{_fmt(d_hi)}</text>",
        f'<text x="{left + width / 2:g}" y="{top + height + 35:g}" text-anchor="middle" '
        f'{text}>Δ/|t|</text>',
        f'<text x="{left - 6:g}" y="{top + height:g}" text-anchor="end" {text}>{_fmt(m_lo)}</text>',
        f'<text x="{left - 6:g}" y="{top + 10:g}" text-anchor="end" {text}>{_fmt(m_hi)}</text>',
        f'<text x="{left - 40:g}" y="{top + height / 2:g}" text-anchor="middle" {text} '
        f'transform="rotate(-90 {left - 40:g} {top + height / 2:g})">μ/|t|</text>',
        f'<rect class="colorbar" x="{bar_x:g}" y="{top:g}" width="16" height="{height:g}" '
        'fill="url(#bar)" stroke="black"/>',
    ]
    label = "log10 |value|" if color_scale == "log" else "|value|"
    out += [
        f'<text x="{bar_x + 20:g}" y="{top + 10:g}" {text}>{_fmt(hi)}</text>',
        f'<text x="{bar_x + 20:g}" y="{top + height:g}" {text}>{_fmt(lo)}</text>',
        f'<text x="{bar_x:g}" y="{top + height + 35:g}" {text}>{label}</text>',
        "</svg>",
    ]
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write SVG heatmap to {path}: {exc}") from exc
