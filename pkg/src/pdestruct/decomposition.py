"""Residual checks and constructive solution representations.

* first order: ``f_x + k f_y = 0``  ->  ``f(x, y) = phi(k x - y)``
* order n:     ``D_n f = 0``        ->  ``f = sum_i (x+y)**(i-1) phi_i(x-y)``
* wave type:   ``f_xx = f_yy``, ``f_xy = f_yx``  ->  ``f = phi(x+y) + psi(x-y)``

Profiles are sampled on the baseline ``y = y_base`` (default 0). For a
characteristic that misses the baseline inside the rectangle, the in-rectangle
point of that characteristic nearest to the baseline is used instead; on exact
solutions the value is the same.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .differencing import d1_field, dn_apply, fd_partial, partial_ladder
from .errors import HypothesisViolation, UnsupportedOrderError, ValidationError
from .function_model import Function2D, GridSpec, Profile1D, Rect, derivative_paths
from .regularity import characteristic_point, characteristic_range, constancy_along_characteristics

__all__ = [
    "DecompositionResult",
    "ProfileFit",
    "WaveSplit",
    "decompose_dn",
    "decompose_wave",
    "extract_profile",
    "reconstruct_dn",
    "residual_first_order",
]

DEFAULT_SAMPLES = 801
DEFAULT_GATE = 1e-3
MAX_ORDER = 4


def _check_k(k):
    if k == 0 or not math.isfinite(k):
        raise ValidationError("k must be finite and non-zero")


def _check_baseline(rect: Rect, y_base: float):
    if not (rect.y0 <= y_base <= rect.y1):
        raise ValidationError(f"baseline y = {y_base:g} does not cross the rectangle {rect.as_tuple()}")


def _nodes(spec: GridSpec):
    X, Y = spec.mesh()
    return X.ravel(), Y.ravel()


def _worst(err, X, Y):
    k = int(np.nanargmax(err))
    return (float(X[k]), float(Y[k])), float(err[k])


def residual_first_order(f: Function2D, k: float, spec: GridSpec, h: float = 1e-4, use_exact: bool = True) -> float:
    """Largest ``|f_x + k f_y|`` over the grid nodes."""
    _check_k(k)
    X, Y = _nodes(spec)
    fx = fd_partial(f, "x", (X, Y), h, use_exact)
    fy = fd_partial(f, "y", (X, Y), h, use_exact)
    return float(np.max(np.abs(fx + k * fy)))


def _characteristic_samples(f: Function2D, k: float, rect: Rect, t_nodes, y_base: float):
    pts = np.array([characteristic_point(k, c, rect, y_base) for c in t_nodes])
    return pts[:, 0], pts[:, 1]


@dataclass(frozen=True, eq=False)
class ProfileFit:
    profile: Profile1D
    reconstruction_error: float
    k: float


def extract_profile(
    f: Function2D,
    k: float,
    spec: GridSpec,
    n_samples: int = DEFAULT_SAMPLES,
    y_base: float = 0.0,
) -> ProfileFit:
    """``phi(s) = f((s + y_base)/k, y_base)`` tabulated over the range of ``k x - y``."""
    _check_k(k)
    rect = spec.rect
    _check_baseline(rect, y_base)
    lo, hi = characteristic_range(k, rect)
    s = np.linspace(lo, hi, n_samples)
    px, py = _characteristic_samples(f, k, rect, s, y_base)
    prof = Profile1D(s, np.asarray(f(px, py), dtype=float))
    X, Y = _nodes(spec)
    err = float(np.max(np.abs(np.asarray(f(X, Y)) - prof(k * X - Y))))
    return ProfileFit(prof, err, float(k))


def reconstruct_dn(profiles: Sequence, domain: Rect) -> Function2D:
    """``sum_i (x+y)**(i-1) * profiles[i-1](x-y)`` for tabulated or analytic profiles."""
    profs = list(profiles)

    def ev(x, y):
        s, t = x + y, x - y
        return sum(s**i * np.asarray(p(t), dtype=float) for i, p in enumerate(profs))

    return Function2D(ev, domain, f"reconstruct[{len(profs)}]")


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    order: int
    profiles: list
    residual: float
    reconstruction_error: float
    method_metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "residual": self.residual,
            "reconstruction_error": self.reconstruction_error,
            "profiles": [p.to_dict() for p in self.profiles],
            "metadata": self.method_metadata,
        }


def _gate_dn(g: Function2D, n: int, probe: GridSpec, h: float, gate: float, use_exact: bool):
    X, Y = _nodes(probe)
    vals = np.abs(np.asarray(dn_apply(g, n, (X, Y), h, use_exact), dtype=float))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    node, worst = _worst(vals, X, Y)
    if worst > gate:
        raise HypothesisViolation(f"D_{n} f = 0 (residual gate)", node, worst, gate)


def _all_exact(g: Function2D, n: int) -> bool:
    return all(g.has_exact(p) for p in derivative_paths(n))


def _decompose(g, n, spec, t_nodes, probe, h, gate, use_exact, y_base, levels):
    _gate_dn(g, n, probe, h, gate, use_exact)
    rect = spec.rect
    if n == 1:
        px, py = _characteristic_samples(g, 1.0, rect, t_nodes, y_base)
        return [Profile1D(t_nodes, np.asarray(g(px, py), dtype=float))]
    g1 = d1_field(g, h, use_exact, max_order=n)
    # closed forms survive only if the top level had all of them
    exact_below = levels[0]
    levels.append(bool(exact_below))
    child_gate = gate if exact_below else gate / h
    # below the top level the attached partials are the consistent stencils on f
    psis = _decompose(g1, n - 1, spec, t_nodes, probe, h, child_gate, True, y_base, levels)
    upper = [Profile1D(t_nodes, psi.values / (2.0 * i)) for i, psi in enumerate(psis, start=1)]
    px, py = _characteristic_samples(g, 1.0, rect, t_nodes, y_base)
    s, t = px + py, px - py
    u = sum(s**i * prof(t) for i, prof in enumerate(upper, start=1))
    first = Profile1D(t_nodes, np.asarray(g(px, py), dtype=float) - u)
    return [first] + upper


def decompose_dn(
    f: Function2D,
    n: int,
    spec: GridSpec,
    h: float = 1e-4,
    gate: float = DEFAULT_GATE,
    n_samples: int = DEFAULT_SAMPLES,
    probe: int = 11,
    use_exact: bool = True,
    y_base: float = 0.0,
    max_order: int = MAX_ORDER,
) -> DecompositionResult:
    """Profiles ``phi_1..phi_n`` with ``f = sum_i (x+y)**(i-1) phi_i(x-y)``.

    Follows the inductive construction: decompose ``g = D_1 f`` at order
    ``n-1`` into ``psi_1..psi_{n-1}``, set ``phi_{i+1} = psi_i / (2 i)`` and read
    ``phi_1`` off ``f - sum_i (x+y)**i phi_{i+1}(x-y)`` along the baseline.
    Refuses (``HypothesisViolation``) when ``|D_n f|`` exceeds ``gate`` on the
    probe grid; the gate is widened by ``1/h`` per level whose field has no
    closed-form partials.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"order n must be a positive integer, got {n}")
    if n > max_order:
        raise UnsupportedOrderError(f"order {n} exceeds the recursion cap {max_order}")
    rect = spec.rect
    _check_baseline(rect, y_base)
    lo, hi = characteristic_range(1.0, rect)
    t_nodes = np.linspace(lo, hi, n_samples)
    probe_spec = spec.probe(probe)
    top_exact = use_exact and _all_exact(f, n)
    levels = [bool(top_exact)]
    profiles = _decompose(f, n, spec, t_nodes, probe_spec, h, gate, use_exact, y_base, levels)
    X, Y = _nodes(spec)
    residual = float(np.max(np.abs(dn_apply(f, n, (X, Y), h, use_exact))))
    recon = reconstruct_dn(profiles, rect)
    err = float(np.max(np.abs(np.asarray(f(X, Y)) - recon(X, Y))))
    meta = {
        "h": h,
        "grid": spec.geometry(),
        "probe": probe_spec.geometry(),
        "gate": gate,
        "n_samples": n_samples,
        "y_base": y_base,
        "exact_partials": levels,
        "error_budget": _error_budget(profiles, levels, h, f(X, Y)),
    }
    return DecompositionResult(int(n), profiles, residual, err, meta)


def _error_budget(profiles, levels, h, values) -> float:
    # linear interpolation: dt**2/8 * max|phi''|, i.e. max second difference / 8
    interp = max(float(np.max(np.abs(np.diff(p.values, 2)), initial=0.0)) / 8.0 for p in profiles)
    # central differences: O(h**2) per level that had no closed forms
    fd = sum(not ok for ok in levels) * h**2 * (1.0 + float(np.max(np.abs(values))))
    return interp + fd


# ---------------------------------------------------------------------------
# wave split
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaveSplit:
    phi: Profile1D
    psi: Profile1D
    psi_tilde: Profile1D
    residuals: dict
    reconstruction_error: float
    method_metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "phi": self.phi.to_dict(),
            "psi": self.psi.to_dict(),
            "psi_tilde": self.psi_tilde.to_dict(),
            "residuals": self.residuals,
            "reconstruction_error": self.reconstruction_error,
            "metadata": self.method_metadata,
        }


def _mixed_exist(f: Function2D, X, Y, h: float, use_exact: bool):
    # where no closed form is usable, existence is decided by the divergence ladder
    for path in (("x", "y"), ("y", "x")):
        need = np.ones(X.shape, dtype=bool)
        if use_exact and f.has_exact(path):
            need = ~np.isfinite(np.asarray(f.exact(path, X, Y), dtype=float))
        if not need.any():
            continue
        lad = partial_ladder(f, path, (X[need], Y[need]), max(h, 1e-2))
        div = np.atleast_1d(lad.diverged)
        if div.any():
            k = int(np.argmax(div))
            node = (float(X[need][k]), float(Y[need][k]))
            label = "f''_" + "".join(path)
            raise HypothesisViolation(
                f"{label} exists (difference ladder diverges)", node, float(abs(lad.values[-1, k]))
            )


def _cumtrapz(t, v):
    out = np.zeros_like(v)
    out[1:] = np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))
    return out


def decompose_wave(
    f: Function2D,
    spec: GridSpec,
    h: float = 1e-4,
    gate: float = DEFAULT_GATE,
    n_samples: int = DEFAULT_SAMPLES,
    refine: int = 8,
    probe: int = 11,
    use_exact: bool = True,
    y_base: float = 0.0,
) -> WaveSplit:
    """Split ``f = phi(x+y) + psi(x-y)`` with the gauge ``psi(0) = 0``.

    ``psi_tilde`` tabulates ``g = f_x - f_y`` along the baseline, ``psi`` is half
    its cumulative trapezoid integral and ``phi(t) = f - psi`` on the line
    ``x + y = t``. The integral runs on a grid ``refine`` times finer than the
    returned ``n_samples`` profiles.
    """
    rect = spec.rect
    _check_baseline(rect, y_base)
    probe_spec = spec.probe(probe)
    PX, PY = _nodes(probe_spec)

    _mixed_exist(f, PX, PY, h, use_exact)
    fxy = fd_partial(f, "xy", (PX, PY), h, use_exact)
    fyx = fd_partial(f, "yx", (PX, PY), h, use_exact)
    node, sym = _worst(np.abs(fxy - fyx), PX, PY)
    if sym > gate:
        raise HypothesisViolation("f''_xy = f''_yx", node, sym, gate)
    fxx = fd_partial(f, "xx", (PX, PY), h, use_exact)
    fyy = fd_partial(f, "yy", (PX, PY), h, use_exact)
    node, eq = _worst(np.abs(fxx - fyy), PX, PY)
    if eq > gate:
        raise HypothesisViolation("f''_xx = f''_yy", node, eq, gate)

    def g_eval(x, y):
        return fd_partial(f, "x", (x, y), h, use_exact) - fd_partial(f, "y", (x, y), h, use_exact)

    g = Function2D(g_eval, f.domain, f"g[{f.name}]")
    line = constancy_along_characteristics(g, 1.0, spec, gate)
    if not line.passed:
        k = int(np.argmax(line.deviations))
        raise HypothesisViolation(
            "f'_x - f'_y depends only on x - y", (float(line.offsets[k]),), line.max_deviation, gate
        )

    lo, hi = characteristic_range(1.0, rect)
    t_fine = np.linspace(lo, hi, (n_samples - 1) * refine + 1)
    gx, gy = _characteristic_samples(g, 1.0, rect, t_fine, y_base)
    psi_tilde_fine = np.asarray(g(gx, gy), dtype=float)
    psi_fine = 0.5 * _cumtrapz(t_fine, psi_tilde_fine)
    anchor = 0.0 if lo <= 0.0 <= hi else lo
    psi_fine = psi_fine - np.interp(anchor, t_fine, psi_fine)
    psi_fine_prof = Profile1D(t_fine, psi_fine)

    t = t_fine[::refine]
    # line x + y = t is (-1) x - y = -t
    qx, qy = _characteristic_samples(f, -1.0, rect, -t, y_base)
    phi_vals = np.asarray(f(qx, qy), dtype=float) - psi_fine_prof(qx - qy)
    phi = Profile1D(t, phi_vals)
    psi = Profile1D(t, psi_fine[::refine])
    psi_tilde = Profile1D(t, psi_tilde_fine[::refine])

    X, Y = _nodes(spec)
    err = float(np.max(np.abs(np.asarray(f(X, Y)) - phi(X + Y) - psi(X - Y))))
    residuals = {"mixed_symmetry_defect": sym, "xx_yy_defect": eq, "g_line_deviation": line.max_deviation}
    meta = {
        "h": h,
        "grid": spec.geometry(),
        "probe": probe_spec.geometry(),
        "gate": gate,
        "n_samples": n_samples,
        "refine": refine,
        "y_base": y_base,
        "gauge_point": anchor,
        "exact_partials": bool(use_exact and all(f.has_exact(p) for p in derivative_paths(2))),
    }
    return WaveSplit(phi, psi, psi_tilde, residuals, err, meta)
