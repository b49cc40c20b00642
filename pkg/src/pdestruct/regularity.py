"""Oscillation, discontinuity sets, epsilon-Lipschitz covers and characteristic constancy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._parallel import map_chunks
from .errors import DomainError, ValidationError
from .function_model import Function2D, GridSpec, Rect

__all__ = [
    "DEFAULT_BOX",
    "DEFAULT_RADII",
    "ChangeableCover",
    "CharacteristicReport",
    "ConstancyPipelineResult",
    "RegularityReport",
    "characteristic_segment",
    "constancy_along_characteristics",
    "constancy_pipeline",
    "discontinuity_field",
    "lipschitz_cover",
    "nowhere_dense",
    "oscillation",
    "oscillation_profile",
]

DEFAULT_RADII = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_THRESHOLD = 0.1
# even side: an isolated node can always be dodged by a half-size sub-box
DEFAULT_BOX = 4


def _check_radii(radii):
    r = np.asarray(radii, dtype=float).ravel()
    if r.size == 0:
        raise ValidationError("radii must be a non-empty sequence")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValidationError("radii must be positive and finite")
    if np.any(np.diff(r) >= 0):
        raise ValidationError("radii must be strictly decreasing")
    return r


def _ball_offsets(radius, samples, rings):
    # centre plus `rings` concentric circles of `samples` points each
    theta = 2.0 * np.pi * np.arange(samples) / samples
    c, s = np.cos(theta), np.sin(theta)
    scales = radius * np.arange(1, rings + 1) / rings
    dx = np.concatenate([[0.0], (scales[:, None] * c).ravel()])
    dy = np.concatenate([[0.0], (scales[:, None] * s).ravel()])
    return dx, dy


def oscillation_profile(f: Function2D, p, radii: Sequence[float], samples_per_radius: int = 720, rings: int = 4) -> np.ndarray:
    """Running minimum over ``radii`` of (max - min of ``f`` over the sampled ball)."""
    r = _check_radii(radii)
    px, py = float(p[0]), float(p[1])
    ranges = []
    for radius in r:
        dx, dy = _ball_offsets(radius, samples_per_radius, rings)
        xs, ys = px + dx, py + dy
        if not np.all(f.domain.contains(xs, ys)):
            raise DomainError(f"ball of radius {radius:g} around ({px:g}, {py:g}) leaves the domain")
        vals = np.asarray(f(xs, ys), dtype=float)
        ranges.append(_kernels.row_range(vals[None, :])[0])
    return np.minimum.accumulate(np.array(ranges))


def oscillation(f: Function2D, p, radii: Sequence[float] = DEFAULT_RADII, samples_per_radius: int = 720, rings: int = 4) -> float:
    """Estimate of the oscillation of ``f`` at ``p`` (last entry of the running minimum)."""
    return float(oscillation_profile(f, p, radii, samples_per_radius, rings)[-1])


# ---------------------------------------------------------------------------
# discontinuity field
# ---------------------------------------------------------------------------


def nowhere_dense(flags, box: int = DEFAULT_BOX, mask=None):
    """Box/sub-box surrogate for nowhere density of the flagged node set.

    Every ``box x box`` window of nodes that meets ``mask`` must contain a
    ``ceil(box/2)`` sub-window that meets ``mask`` and holds no flagged node.
    Returns ``(verdict, relevant, witnesses)``; ``witnesses[i, j]`` is the
    sub-window offset inside window ``(i, j)`` or ``(-1, -1)``.
    """
    flags = np.ascontiguousarray(flags, dtype=np.bool_)
    mask = np.ones_like(flags) if mask is None else np.ascontiguousarray(mask, dtype=np.bool_)
    if mask.shape != flags.shape:
        raise ValidationError("mask and flags must have the same shape")
    if box < 2 or box > min(flags.shape):
        raise ValidationError(f"box size must be in [2, {min(flags.shape)}], got {box}")
    sub = math.ceil(box / 2)
    relevant, wit = _kernels.box_witnesses(flags, mask, int(box), int(sub))
    verdict = bool(np.all(wit[relevant][:, 0] >= 0)) if relevant.any() else True
    return verdict, relevant, wit


@dataclass(frozen=True, eq=False)
class RegularityReport:
    spec: GridSpec
    radii: tuple
    threshold: float
    oscillation_field: np.ndarray
    flagged_points: list
    nowhere_dense_verdict: bool
    box: int
    relevant_boxes: np.ndarray
    witnesses: np.ndarray
    lipschitz_constants: np.ndarray
    lipschitz_divergent: np.ndarray

    def witness_list(self) -> list[list[int]]:
        """``[i, j, si, sj]``: box origin and the origin of its clean sub-box."""
        out = []
        for i, j in np.argwhere(self.relevant_boxes):
            di, dj = self.witnesses[i, j]
            if di >= 0:
                out.append([int(i), int(j), int(i + di), int(j + dj)])
        return out

    def to_dict(self) -> dict:
        xs, ys = self.spec.xs, self.spec.ys
        grid = self.spec.geometry()
        lip = [None if not math.isfinite(v) else float(v) for v in self.lipschitz_constants.ravel()]
        return {
            "oscillation_field": {**grid, "values": [float(v) for v in self.oscillation_field.ravel()]},
            "radii": [float(r) for r in self.radii],
            "threshold": self.threshold,
            "flagged_points": [{"i": i, "j": j, "x": float(xs[i]), "y": float(ys[j])} for i, j in self.flagged_points],
            "nowhere_dense_verdict": self.nowhere_dense_verdict,
            "box": self.box,
            "sub_box": math.ceil(self.box / 2),
            "witnesses": self.witness_list(),
            "lipschitz_constants": {**grid, "values": lip},
        }


def discontinuity_field(
    f: Function2D,
    spec: GridSpec,
    radii: Sequence[float] = DEFAULT_RADII,
    threshold: float = DEFAULT_THRESHOLD,
    samples_per_radius: int = 64,
    rings: int = 2,
    box: int = DEFAULT_BOX,
    mask=None,
    threads: int | None = None,
) -> RegularityReport:
    """Oscillation at every node, flagged nodes and the nowhere-dense verdict.

    Ball samples falling outside ``f.domain`` are dropped, i.e. the oscillation
    is that of ``f`` restricted to its domain. ``mask`` (bool ``(nx, ny)``)
    restricts the analysis to a node subset; unmasked nodes are never flagged.
    Local Lipschitz constants are ``max |f(q) - f(p)| / |q - p|`` over the
    smallest ball, reported as divergent (``inf``) when they grow at least
    tenfold across each of the last two radius refinements.
    """
    r = _check_radii(radii)
    if not f.domain.contains_rect(spec.rect):
        raise DomainError(f"grid {spec.rect.as_tuple()} not inside domain {f.domain.as_tuple()}")
    X, Y = spec.mesh()
    X, Y = X.ravel(), Y.ravel()
    offsets = [_ball_offsets(radius, samples_per_radius, rings) for radius in r]
    n_r = r.size

    def chunk(idx):
        px, py = X[idx][:, None], Y[idx][:, None]
        center = np.asarray(f(px[:, 0], py[:, 0]), dtype=float)
        ranges = np.empty((idx.size, n_r))
        slopes = np.empty((idx.size, n_r))
        for k, (dx, dy) in enumerate(offsets):
            xs, ys = px + dx, py + dy
            inside = f.domain.contains(xs, ys)
            vals = np.full(xs.shape, np.nan)
            vals[inside] = f(xs[inside], ys[inside])
            ranges[:, k] = _kernels.row_range(vals)
            dist = np.hypot(dx, dy)
            with np.errstate(invalid="ignore", divide="ignore"):
                q = np.abs(vals[:, 1:] - center[:, None]) / dist[1:]
            slopes[:, k] = np.nanmax(np.where(np.isnan(q), -np.inf, q), axis=1)
        return np.concatenate([ranges, slopes], axis=1)

    both = map_chunks(chunk, X.size, threads)
    osc = np.minimum.accumulate(both[:, :n_r], axis=1)[:, -1].reshape(spec.shape)
    slopes = both[:, n_r:]
    if n_r >= 3:
        grow = (slopes[:, -1] >= 10 * slopes[:, -2]) & (slopes[:, -2] >= 10 * slopes[:, -3]) & (slopes[:, -1] > 0)
    else:
        grow = np.zeros(X.size, dtype=bool)
    lip = np.where(grow, np.inf, slopes[:, -1]).reshape(spec.shape)

    m = np.ones(spec.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != spec.shape:
        raise ValidationError(f"mask shape {m.shape} does not match grid {spec.shape}")
    flags = (osc > threshold) & m
    verdict, relevant, wit = nowhere_dense(flags, box, m)
    flagged = [(int(i), int(j)) for i, j in np.argwhere(flags)]
    return RegularityReport(
        spec, tuple(float(v) for v in r), float(threshold), osc, flagged, verdict, int(box), relevant, wit, lip, grow.reshape(spec.shape)
    )


# ---------------------------------------------------------------------------
# epsilon-Lipschitz covers of one-variable functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChangeableCover:
    epsilon: float
    intervals: list
    dense: bool
    cell_ok: np.ndarray
    edges: np.ndarray


def _cells(interval, resolution, samples_per_cell):
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValidationError(f"interval must satisfy a < b, got [{a}, {b}]")
    if int(resolution) != resolution or resolution < 1:
        raise ValidationError(f"resolution must be a positive integer, got {resolution}")
    w = (b - a) / resolution
    u = np.linspace(0.0, 1.0, samples_per_cell)
    k = np.arange(resolution)[:, None]
    t = a + (k + u) * w
    t[:, 0] = a + k[:, 0] * w
    t[:, -1] = a + (k[:, 0] + 1) * w
    t[-1, -1] = b
    return t


def lipschitz_cover(
    g: Callable,
    epsilon: float,
    interval=(0.0, 1.0),
    resolution: int = 64,
    samples_per_cell: int = 8,
) -> ChangeableCover:
    """Maximal runs of grid cells on which ``g`` is sampled epsilon-Lipschitz.

    A cell qualifies when every pair among its ``samples_per_cell`` points
    (endpoints included) has ``|quotient| <= epsilon``. Adjacent qualifying
    cells share an endpoint, so the secant slope across their union is a
    convex combination of in-cell slopes and the run stays epsilon-Lipschitz.
    ``dense`` is true when every cell is covered.
    """
    if not (epsilon > 0):
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    t = _cells(interval, resolution, samples_per_cell)
    v = np.asarray(g(t), dtype=float)
    slopes = _kernels.pair_slope_max(t, v)
    ok = slopes <= epsilon
    edges = np.append(t[:, 0], t[-1, -1])
    intervals = []
    k = 0
    while k < ok.size:
        if not ok[k]:
            k += 1
            continue
        start = k
        while k < ok.size and ok[k]:
            k += 1
        intervals.append((float(edges[start]), float(edges[k])))
    return ChangeableCover(float(epsilon), intervals, bool(ok.all()), ok, edges)


@dataclass(frozen=True)
class ConstancyPipelineResult:
    dense_everywhere: bool
    defect: float
    bound: float
    holds: bool


def constancy_pipeline(
    g: Callable,
    interval=(0.0, 1.0),
    epsilons: Sequence[float] = (1e-1, 1e-2, 1e-3),
    resolution: int = 64,
    subdivisions: int = 4,
) -> ConstancyPipelineResult:
    """Dense covers on every closed sub-grid imply a small constancy defect.

    Covers are computed for each epsilon on ``interval`` and on its dyadic
    sub-intervals down to ``1/subdivisions`` of its length. When all of them are
    dense the sampled ``max - min`` of ``g`` must not exceed
    ``10 * min(epsilons) * (b - a)``; ``holds`` reports that implication.
    """
    a, b = float(interval[0]), float(interval[1])
    pieces = [(a, b)]
    parts = 2
    while parts <= subdivisions:
        w = (b - a) / parts
        pieces += [(a + i * w, a + (i + 1) * w) for i in range(parts)]
        parts *= 2
    dense = all(lipschitz_cover(g, e, piece, resolution).dense for e in epsilons for piece in pieces)
    vals = np.asarray(g(_cells((a, b), resolution, 8)), dtype=float)
    defect = float(vals.max() - vals.min())
    bound = 10.0 * min(epsilons) * (b - a)
    return ConstancyPipelineResult(dense, defect, bound, (not dense) or defect <= bound)


# ---------------------------------------------------------------------------
# constancy along characteristic lines k x - y = c
# ---------------------------------------------------------------------------


def characteristic_segment(k: float, c: float, rect: Rect):
    """``(y_lo, y_hi)`` of the part of the line ``k x - y = c`` inside ``rect``, or None."""
    lo, hi = k * rect.x0 - c, k * rect.x1 - c
    if lo > hi:
        lo, hi = hi, lo
    lo, hi = max(lo, rect.y0), min(hi, rect.y1)
    if lo > hi + rect.slack:
        return None
    return lo, max(lo, hi)


def characteristic_range(k: float, rect: Rect) -> tuple[float, float]:
    """Range of ``k x - y`` over ``rect``."""
    xs = (k * rect.x0, k * rect.x1)
    return min(xs) - rect.y1, max(xs) - rect.y0


def characteristic_point(k: float, c: float, rect: Rect, y_base: float = 0.0):
    """Point of the line ``k x - y = c`` inside ``rect`` nearest to the baseline ``y = y_base``."""
    seg = characteristic_segment(k, c, rect)
    if seg is None:
        raise DomainError(f"line {k:g}x - y = {c:g} misses the rectangle {rect.as_tuple()}")
    y = np.clip(y_base, seg[0], seg[1])
    x = np.clip((c + y) / k, rect.x0, rect.x1)
    return float(x), float(y)


@dataclass(frozen=True, eq=False)
class CharacteristicReport:
    k: float
    tol: float
    offsets: np.ndarray
    deviations: np.ndarray
    max_deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "tol": self.tol,
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "offsets": [float(c) for c in self.offsets],
            "deviations": [float(d) for d in self.deviations],
        }


def constancy_along_characteristics(
    f: Function2D,
    k: float,
    spec: GridSpec,
    tol: float,
    n_offsets: int | None = None,
    n_line: int | None = None,
) -> CharacteristicReport:
    """Spread ``max - min`` of ``f`` along each line ``k x - y = c`` crossing the grid rectangle."""
    if k == 0 or not math.isfinite(k):
        raise ValidationError("characteristic slope k must be finite and non-zero")
    rect = spec.rect
    n_offsets = n_offsets or (spec.nx + spec.ny - 1)
    n_line = n_line or max(spec.nx, spec.ny)
    c_lo, c_hi = characteristic_range(k, rect)
    offsets = np.linspace(c_lo, c_hi, n_offsets)
    ys = np.empty((n_offsets, n_line))
    for idx, c in enumerate(offsets):
        seg = characteristic_segment(k, c, rect)
        ys[idx] = np.linspace(seg[0], seg[1], n_line) if seg else np.nan
    xs = np.clip((offsets[:, None] + ys) / k, rect.x0, rect.x1)
    vals = np.asarray(f(xs, ys), dtype=float)
    dev = _kernels.row_range(np.ascontiguousarray(vals))
    worst = float(dev.max())
    return CharacteristicReport(float(k), float(tol), offsets, dev, worst, worst <= tol)
