"""Finite-dimensional transport for maps ``F: R^d x R^d -> R^m``.

Directional derivatives are taken through the coordinate functionals of
``R^m``, which separate points, so a vanishing Gateaux residual
``D F(., y)(x) + D F(x, .)(y) = 0`` forces ``F(x, y) = F(x - y, 0)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CatalogError, DomainError, NonDifferentiableError, UnsupportedDimensionError, ValidationError

__all__ = [
    "DirectionalDerivative",
    "GateauxReport",
    "TranslationReport",
    "VectorMap",
    "gateaux_residual",
    "l_directional_derivative",
    "probe_pairs",
    "vector_catalog_get",
    "vector_catalog_names",
    "verify_translation",
]

MAX_TABULATION_DIM = 3
# step ratio of the divergence probe, matching the scalar divergence ladder
DIVERGENCE_PROBE = 10.0


@dataclass(frozen=True, eq=False)
class VectorMap:
    """``evaluator(x, y)`` maps ``(..., d)`` arrays to ``(..., m)``; both factors live in ``[lo, hi]^d``."""

    d: int
    m: int
    evaluator: Callable
    lo: float = -2.0
    hi: float = 2.0
    name: str = "F"

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise ValidationError(f"dimensions must be positive, got d={self.d}, m={self.m}")
        if not self.lo < self.hi:
            raise ValidationError("box needs lo < hi")

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s = 1e-12 * (1.0 + max(abs(self.lo), abs(self.hi)))
        return np.all((z >= self.lo - s) & (z <= self.hi + s), axis=-1)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[-1] != self.d or y.shape[-1] != self.d:
            raise ValidationError(f"{self.name} expects points of dimension {self.d}")
        if not (np.all(self.contains(x)) and np.all(self.contains(y))):
            raise DomainError(f"argument outside the box [{self.lo}, {self.hi}]^{self.d} of {self.name}")
        out = np.asarray(self.evaluator(x, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise DomainError(f"{self.name} produced a non-finite value")
        return out


@dataclass(frozen=True)
class DirectionalDerivative:
    value: float
    error_estimate: float


def l_directional_derivative(G: Callable, x0, h_dir, l: int, step: float = 1e-4) -> DirectionalDerivative:
    """Derivative at ``t = 0`` of ``t -> G(x0 + t h_dir)[l]``.

    Central differences at ``step`` and ``step/2`` combined by one Richardson
    step; the difference of the two raw estimates is the error estimate. An
    extra difference at ``step/10`` that is ten times the coarse one is
    reported as :class:`NonDifferentiableError` (a halving step cannot show
    tenfold growth for a jump or a 1/h blow-up).
    """
    x0 = np.asarray(x0, dtype=float)
    h_dir = np.asarray(h_dir, dtype=float)
    if not np.any(h_dir):
        raise ValidationError("direction must be non-zero")
    if not (step > 0 and math.isfinite(step)):
        raise ValidationError(f"step must be positive, got {step}")

    def central(s):
        plus = np.asarray(G(x0 + s * h_dir), dtype=float)[..., l]
        minus = np.asarray(G(x0 - s * h_dir), dtype=float)[..., l]
        return (plus - minus) / (2.0 * s)

    coarse, fine = central(step), central(step / 2.0)
    probe = central(step / DIVERGENCE_PROBE)
    if abs(probe) >= 10.0 * abs(coarse) * (1.0 - 1e-9) and abs(probe) > 1e-8:
        raise NonDifferentiableError(
            f"refinement diverged along {h_dir.tolist()} at {x0.tolist()} (coordinate {l})", (coarse, probe)
        )
    value = (4.0 * fine - coarse) / 3.0
    return DirectionalDerivative(float(value), float(abs(fine - coarse)))


@dataclass(frozen=True, eq=False)
class GateauxReport:
    max_residual: float
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "rows": self.rows}


def _sections(F: VectorMap, x, y):
    return (lambda z: F(z, y)), (lambda z: F(x, z))


def gateaux_residual(F: VectorMap, x, y, basis: Sequence | None = None, step: float = 1e-4, probe: int = 0) -> GateauxReport:
    """``max |D F(., y)(x)(h, l) + D F(x, .)(y)(h, l)|`` over basis directions and coordinates."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    basis = np.eye(F.d) if basis is None else np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[1] != F.d or np.linalg.matrix_rank(basis) < F.d:
        raise ValidationError(f"basis must span R^{F.d}")
    sec_x, sec_y = _sections(F, x, y)
    rows = []
    worst = 0.0
    for b, h_dir in enumerate(basis):
        for l in range(F.m):
            dx = l_directional_derivative(sec_x, x, h_dir, l, step)
            dy = l_directional_derivative(sec_y, y, h_dir, l, step)
            res = abs(dx.value + dy.value)
            worst = max(worst, res)
            rows.append(
                {"probe": probe, "basis": b, "coordinate": l, "d_first": dx.value, "d_second": dy.value, "residual": res}
            )
    return GateauxReport(float(worst), rows)


def probe_pairs(F: VectorMap, n: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """``n*n`` deterministic pairs ``(x, y)`` with ``x``, ``y`` and ``x - y`` all inside the box.

    Points are drawn from the middle half of the box so that differences stay
    in range and directional stencils fit.
    """
    rng = np.random.default_rng(seed)
    mid = 0.5 * (F.lo + F.hi)
    quarter = 0.25 * (F.hi - F.lo)
    lo, hi = max(F.lo / 2, mid - quarter), min(F.hi / 2, mid + quarter)
    xs = rng.uniform(lo, hi, size=(n, F.d))
    ys = rng.uniform(lo, hi, size=(n, F.d))
    return [(a, b) for a, b in itertools.product(xs, ys)]


@dataclass(frozen=True, eq=False)
class TranslationReport:
    passed: bool
    max_defect: float
    tol: float
    phi_points: np.ndarray
    phi_values: np.ndarray
    defects: np.ndarray

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_defect": self.max_defect,
            "tol": self.tol,
            "defects": [float(v) for v in self.defects],
            "phi": {"points": self.phi_points.tolist(), "values": self.phi_values.tolist()},
        }


def verify_translation(F: VectorMap, probes, tol: float, phi_points_per_axis: int = 5) -> TranslationReport:
    """Check ``F(x, y) == F(x - y, 0)`` on probe pairs and tabulate ``phi(x) = F(x, 0)``."""
    if F.d > MAX_TABULATION_DIM:
        raise UnsupportedDimensionError(f"phi tabulation supports d <= {MAX_TABULATION_DIM}, got d={F.d}")
    if not probes:
        raise ValidationError("verify_translation needs at least one probe pair")
    xs = np.array([p[0] for p in probes], dtype=float)
    ys = np.array([p[1] for p in probes], dtype=float)
    zero = np.zeros_like(xs)
    defects = np.max(np.abs(np.atleast_2d(F(xs, ys) - F(xs - ys, zero)).reshape(len(probes), -1)), axis=1)
    worst = float(defects.max())
    axis = np.linspace(F.lo, F.hi, phi_points_per_axis)
    pts = np.array(list(itertools.product(axis, repeat=F.d)))
    vals = F(pts, np.zeros_like(pts))
    return TranslationReport(worst <= tol, worst, float(tol), pts, np.asarray(vals), defects)


# ---------------------------------------------------------------------------
# catalog of vector maps
# ---------------------------------------------------------------------------


def _difference(d):
    return VectorMap(d, d, lambda x, y: x - y, name=f"difference(d={d})")


def _sum(d):
    return VectorMap(d, d, lambda x, y: x + y, name=f"sum(d={d})")


def _norm_pair(d=2):
    # phi(u) = (|u|^2, u_1) applied to u = x - y
    def ev(x, y):
        u = x - y
        return np.stack([np.sum(u * u, axis=-1), u[..., 0]], axis=-1)

    return VectorMap(d, 2, ev, name=f"norm_pair(d={d})")


def _sin_square(d=2):
    if d != 2:
        raise ValidationError("sin_square is defined on R^2 pairs")

    def ev(x, y):
        u = x - y
        return np.stack([np.sin(u[..., 0]), u[..., 1] ** 2], axis=-1)

    return VectorMap(2, 2, ev, name="sin_square")


_VECTOR_CATALOG = {
    "difference": (_difference, 3),
    "sum": (_sum, 3),
    "norm_pair": (_norm_pair, 2),
    "sin_square": (_sin_square, 2),
}


def vector_catalog_names() -> list[str]:
    return list(_VECTOR_CATALOG)


def vector_catalog_get(name: str, d: int | None = None) -> VectorMap:
    try:
        ctor, default_d = _VECTOR_CATALOG[name]
    except KeyError:
        raise CatalogError(name, vector_catalog_names()) from None
    return ctor(default_d if d is None else int(d))
