"""Difference quotients, finite-difference partials and the D_n operator.

Partials along a path are nested first-order differences applied
innermost-first: the path ``("x", "y")`` differentiates in ``x`` and then in
``y``. Each level uses a central stencil, or a second-order one-sided stencil
where the central one would leave the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, DomainError, NumericalError, ValidationError
from .function_model import Function2D, as_path, derivative_paths

__all__ = [
    "DIVERGENCE_GROWTH",
    "LADDER_FACTOR",
    "PartialLadder",
    "QuotientSample",
    "d1_field",
    "diff_quotient",
    "directional_quotient",
    "dn_apply",
    "fd_partial",
    "partial_ladder",
]

# refinement ratio of the divergence ladder and the growth that counts as blow-up
LADDER_FACTOR = 10.0
DIVERGENCE_GROWTH = 10.0

_CENTRAL = ((-1.0, -0.5), (1.0, 0.5))
_FORWARD = ((0.0, -1.5), (1.0, 2.0), (2.0, -0.5))
_BACKWARD = ((0.0, 1.5), (-1.0, -2.0), (-2.0, 0.5))


def diff_quotient(g: Callable, x1: float, x2: float) -> float:
    """Secant slope ``(g(x1) - g(x2)) / (x1 - x2)``."""
    if x1 == x2:
        raise DegenerateInputError(f"difference quotient needs distinct points, got {x1} twice")
    return float((g(x1) - g(x2)) / (x1 - x2))


def _base_values(f, x, y):
    vals = np.asarray(f(x, y), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = np.unravel_index(int(np.argmax(bad)), vals.shape) if vals.ndim else ()
        pt = (float(np.asarray(x)[k]), float(np.asarray(y)[k]))
        raise NumericalError(f"non-finite value of {f.name} in FD stencil", pt)
    return vals


_STENCILS = (_CENTRAL, _FORWARD, _BACKWARD)


def _stencil_modes(f: Function2D, path, x, y, h):
    """Per point and axis: 0 central, 1 forward, 2 backward.

    Chosen once for the whole nested stencil (``m`` derivatives along an axis
    reach ``m*h`` centrally or ``2*m*h`` one-sidedly), so every level of the
    nest uses the same scheme and the O(h**2) errors stay consistent.
    """
    dom = f.domain
    s = dom.slack
    modes = {}
    for axis, c, lo, hi in (("x", x, dom.x0, dom.x1), ("y", y, dom.y0, dom.y1)):
        m = path.count(axis)
        if m == 0:
            modes[axis] = np.zeros(c.shape, dtype=np.int8)
            continue
        central = (c - m * h >= lo - s) & (c + m * h <= hi + s)
        forward = ~central & (c >= lo - s) & (c + 2 * m * h <= hi + s)
        backward = ~central & ~forward & (c - 2 * m * h >= lo - s) & (c <= hi + s)
        if not np.all(central | forward | backward):
            k = tuple(np.argwhere(~(central | forward | backward))[0])
            raise DomainError(
                f"FD stencil with h={h:g} along {axis} escapes domain {dom.as_tuple()} "
                f"at ({float(x[k]):.6g}, {float(y[k]):.6g})"
            )
        modes[axis] = np.where(central, 0, np.where(forward, 1, 2)).astype(np.int8)
    return modes


def _nested_fd(f: Function2D, path, x, y, h, modes=None):
    if modes is None:
        modes = _stencil_modes(f, path, x, y, h)
    if not path:
        return _base_values(f, x, y)
    axis, inner = path[-1], path[:-1]
    mode = modes[axis]
    out = np.empty(x.shape)
    for kind, stencil in enumerate(_STENCILS):
        mask = mode == kind
        if not mask.any():
            continue
        xm, ym = x[mask], y[mask]
        sub = {a: m[mask] for a, m in modes.items()}
        acc = np.zeros(xm.shape)
        for offset, weight in stencil:
            if axis == "x":
                acc += weight * _nested_fd(f, inner, xm + offset * h, ym, h, sub)
            else:
                acc += weight * _nested_fd(f, inner, xm, ym + offset * h, h, sub)
        out[mask] = acc / h
    return out


def fd_partial(f: Function2D, path, p, h: float, use_exact: bool = True):
    """Partial derivative of ``f`` along ``path`` at ``p``.

    ``p`` is ``(x, y)`` with scalar or array coordinates. When ``use_exact``
    is set and ``f`` carries a closed form for ``path``, that value is returned
    (falling back to differences wherever it is not finite, e.g. at declared
    singular points); pass ``use_exact=False`` to get the finite-difference
    value for cross-checking.
    """
    path = as_path(path)
    if not (h > 0 and math.isfinite(h)):
        raise ValidationError(f"step h must be positive and finite, got {h}")
    x, y = np.broadcast_arrays(np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float))
    scalar = x.ndim == 0
    x, y = np.atleast_1d(x).astype(float), np.atleast_1d(y).astype(float)
    f.domain.check(x, y)
    if use_exact and f.has_exact(path):
        out = np.atleast_1d(np.asarray(f.exact(path, x, y), dtype=float)).copy()
        bad = ~np.isfinite(out)
        if bad.any():
            out[bad] = _nested_fd(f, path, x[bad], y[bad], h)
    else:
        out = _nested_fd(f, path, x, y, h)
    return float(out[0]) if scalar else out


def dn_apply(f: Function2D, n: int, p, h: float, use_exact: bool = True):
    """Sum of all ``2**n`` ordered n-th partials of ``f`` at ``p``."""
    total = 0.0
    for path in derivative_paths(n):
        total = total + fd_partial(f, path, p, h, use_exact)
    return total


@dataclass(frozen=True)
class PartialLadder:
    """FD values of one partial on the step ladder ``h, h/r, h/r**2, ...``."""

    path: tuple
    steps: tuple
    values: np.ndarray
    diverged: np.ndarray | bool


def partial_ladder(
    f: Function2D,
    path,
    p,
    h: float,
    levels: int = 3,
    factor: float = LADDER_FACTOR,
    growth: float = DIVERGENCE_GROWTH,
    floor: float = 1.0,
) -> PartialLadder:
    """Finite differences on a refining step ladder with a divergence verdict.

    The partial is reported as divergent at a point when every refinement
    grows the magnitude by at least ``growth`` and the finest value exceeds
    ``floor`` in magnitude (the floor keeps round-off growth around a true
    zero from counting). Always uses differences, never closed forms.
    """
    if levels < 2:
        raise ValidationError("ladder needs at least two levels")
    steps = tuple(h / factor**k for k in range(levels))
    vals = np.array([np.asarray(fd_partial(f, path, p, s, use_exact=False), dtype=float) for s in steps])
    mags = np.abs(vals)
    grows = (mags[1:] >= growth * mags[:-1]) & (mags[1:] > 0)
    diverged = grows.all(axis=0) & (mags[-1] > floor)
    if np.ndim(diverged) == 0:
        diverged = bool(diverged)
    return PartialLadder(as_path(path), steps, vals, diverged)


@dataclass(frozen=True)
class QuotientSample:
    p: tuple
    q: tuple
    quotient: float
    distance: float
    cos_alpha: float
    sin_alpha: float


def directional_quotient(f: Function2D, p, q) -> QuotientSample:
    """``(f(q) - f(p)) / |q - p|`` with the direction of ``p -> q``."""
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    if px == qx and py == qy:
        raise DegenerateInputError(f"directional quotient needs distinct points, got {p} twice")
    d = math.hypot(qx - px, qy - py)
    val = (float(f(qx, qy)) - float(f(px, py))) / d
    return QuotientSample((px, py), (qx, qy), val, d, (qx - px) / d, (qy - py) / d)


def d1_field(f: Function2D, h: float, use_exact: bool = True, max_order: int = 4) -> Function2D:
    """The field ``D_1 f = f_x + f_y`` as a new :class:`Function2D`.

    Its partial along a path ``P`` (up to ``max_order``) is ``f_{xP} + f_{yP}``
    evaluated directly on ``f`` through :func:`fd_partial`, so closed forms of
    ``f`` are used where present and everything else is one consistent nested
    stencil on ``f`` instead of differences of differences.
    """

    def ev(x, y):
        return dn_apply(f, 1, (x, y), h, use_exact)

    def make(path):
        return lambda x, y: fd_partial(f, ("x",) + path, (x, y), h, use_exact) + fd_partial(
            f, ("y",) + path, (x, y), h, use_exact
        )

    partials = {path: make(path) for n in range(1, max_order + 1) for path in derivative_paths(n)}
    return Function2D(ev, f.domain, f"D1[{f.name}]", partials)
