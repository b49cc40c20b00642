"""Discretised Baire lambda-function and its upper-semicontinuity check.

For a one-variable function ``g``, a point ``x`` and a window ``[-eps, eps]``,
``lambda`` is the largest radius ``delta`` in (0, 1] such that any two
difference quotients taken across ``x`` (left endpoint in ``(x-delta, x)``,
right endpoint in ``(x, x+delta)``) differ by at most ``eps``. Here ``delta``
runs down the dyadic ladder 1, 1/2, 1/4, ... and the open intervals are
sampled at ``resolution`` half-step-offset points each, so the returned value
is a lower bound on the exact supremum, within a factor of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from ._parallel import map_chunks
from .errors import DomainError, NumericalError, ValidationError
from .function_model import Function2D, GridSpec

__all__ = ["LambdaField", "lambda_1d", "lambda_field", "ladder", "usc_violations"]

MIN_RESOLUTION = 8

# smallest usable ladder step: keep the in-interval sample spacing 64 ulps wide
_ULP_GUARD = 64.0 * np.finfo(float).eps


def ladder(resolution: int, scale: float = 1.0) -> np.ndarray:
    """Dyadic candidates ``1, 1/2, ...`` down to ``2**-resolution``, cut where the
    sample spacing around a point of magnitude ``scale`` would fall under the
    floating-point guard."""
    floor = _ULP_GUARD * resolution * max(1.0, abs(scale))
    levels = [2.0**-j for j in range(resolution + 1)]
    return np.array([d for d in levels if d >= floor])


def _check_args(epsilon, resolution):
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValidationError(f"epsilon must be positive and finite, got {epsilon}")
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ValidationError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution}")


def _lambda_rows(section: Callable, centers, reach, epsilon, resolution):
    """lambda at each row's centre; ``section(points, rows)`` evaluates row-wise."""
    centers = np.asarray(centers, dtype=float)
    reach = np.asarray(reach, dtype=float)
    n = centers.size
    out = np.zeros(n)
    open_rows = np.ones(n, dtype=bool)
    frac = (np.arange(resolution) + 0.5) / resolution
    floors = _ULP_GUARD * resolution * np.maximum(1.0, np.abs(centers))
    for j in range(resolution + 1):
        delta = 2.0**-j
        active = open_rows & (delta <= reach) & (delta >= floors)
        if not active.any():
            if not (open_rows & (delta >= floors)).any():
                break
            continue
        rows = np.flatnonzero(active)
        c = centers[rows][:, None]
        left = c - delta + frac * delta
        right = c + frac * delta
        g_left = np.asarray(section(left, rows), dtype=float)
        g_right = np.asarray(section(right, rows), dtype=float)
        spread = _kernels.quotient_spread(left, g_left, right, g_right)
        if np.isnan(spread).any():
            k = rows[int(np.argmax(np.isnan(spread)))]
            raise NumericalError("non-finite section value in lambda sampling", (float(centers[k]),))
        ok = spread <= epsilon
        out[rows[ok]] = delta
        open_rows[rows[ok]] = False
        if not open_rows.any():
            break
    return out


def lambda_1d(g: Callable, x: float, epsilon: float, resolution: int = 64) -> float:
    """Discretised lambda of the scalar function ``g`` at ``x`` for window ``[-eps, eps]``."""
    _check_args(epsilon, resolution)
    x = float(x)

    def section(pts, rows):
        return g(pts)

    return float(_lambda_rows(section, [x], [1.0], epsilon, resolution)[0])


@dataclass(frozen=True, eq=False)
class LambdaField:
    """lambda values on grid nodes; ``axis`` is the differentiation variable."""

    spec: GridSpec
    epsilon: float
    axis: str
    values: np.ndarray
    resolution: int = 64

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.spec.nx, self.spec.ny)
        if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
            raise ValidationError("lambda values must lie in [0, 1]")
        if self.axis not in ("x", "y"):
            raise ValidationError(f"axis must be 'x' or 'y', got {self.axis!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def min_delta(self) -> float:
        """Smallest ladder candidate; a zero value means even this one failed."""
        return 2.0**-self.resolution

    def upper_bracket(self) -> np.ndarray:
        """Per-node upper bound on the exact supremum implied by the dyadic ladder."""
        v = self.values
        return np.where(v > 0, np.minimum(2.0 * v, 1.0), self.min_delta)

    def to_dict(self) -> dict:
        out = self.spec.geometry()
        out["epsilon"] = self.epsilon
        out["axis"] = self.axis
        out["resolution"] = self.resolution
        out["values"] = [float(v) for v in self.values.ravel()]
        return out


def lambda_field(
    f: Function2D,
    axis: str,
    epsilon: float,
    spec: GridSpec,
    resolution: int = 64,
    threads: int | None = None,
) -> LambdaField:
    """lambda of the section through every node (``f(., y)`` for ``axis='x'``).

    Ladder steps that would carry the section outside ``f.domain`` are
    skipped, so the grid must lie strictly inside the domain along ``axis``.
    """
    _check_args(epsilon, resolution)
    if axis not in ("x", "y"):
        raise ValidationError(f"axis must be 'x' or 'y', got {axis!r}")
    if not f.domain.contains_rect(spec.rect):
        raise DomainError(f"grid {spec.rect.as_tuple()} not inside domain {f.domain.as_tuple()}")
    X, Y = spec.mesh()
    X, Y = X.ravel(), Y.ravel()
    dom = f.domain
    if axis == "x":
        centers, frozen, lo, hi = X, Y, dom.x0, dom.x1
    else:
        centers, frozen, lo, hi = Y, X, dom.y0, dom.y1
    reach = np.minimum(centers - lo, hi - centers)
    if np.any(reach < 2.0**-resolution):
        raise DomainError("lambda_field grid touches the domain boundary along the differentiation axis")

    def chunk(idx):
        c, w, r = centers[idx], frozen[idx], reach[idx]

        def section(pts, rows):
            fixed = np.broadcast_to(w[rows][:, None], pts.shape)
            return f(pts, fixed) if axis == "x" else f(fixed, pts)

        return _lambda_rows(section, c, r, epsilon, resolution)

    vals = map_chunks(chunk, centers.size, threads)
    return LambdaField(spec, float(epsilon), axis, vals.reshape(spec.nx, spec.ny), int(resolution))


def usc_violations(field: LambdaField, tol: float, ladder_aware: bool = True) -> list[tuple[int, int]]:
    """Nodes ``(i, j)`` whose value sits more than ``tol`` below an 8-neighbour.

    With ``ladder_aware`` (default) the node is compared through its upper
    bracket (twice its dyadic value, capped at 1), since the stored value is
    only a lower bound within one ladder step of the exact supremum; a step
    between neighbouring nodes is then not mistaken for a failure. Set it to
    ``False`` to compare raw stored values.
    """
    node = field.upper_bracket() if ladder_aware else field.values
    neigh = _kernels.neighbor_max(np.ascontiguousarray(field.values, dtype=float))
    bad = node < neigh - tol
    return [(int(i), int(j)) for i, j in np.argwhere(bad)]
