"""Evaluatable planar functions, the built-in catalog, and grid sampling/ingestion.

Grid convention: vertex-centred uniform nodes, stored row-major with ``x`` as
the slow index, i.e. ``values[i * ny + j] = f(x0 + i*dx, y0 + j*dy)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CatalogError, DomainError, NumericalError, ValidationError

__all__ = [
    "DEFAULT_DOMAIN",
    "MAX_EXACT_ORDER",
    "AnalyticProfile",
    "Function2D",
    "GridSample",
    "GridSpec",
    "Profile1D",
    "Rect",
    "catalog_get",
    "catalog_names",
    "derivative_paths",
    "eval2d",
    "from_grid",
    "linear_combination",
    "load_grid",
    "parse_function_spec",
    "profile_get",
    "profile_names",
    "sample_grid",
]

Path2 = tuple  # ordered tuple over {"x", "y"}

# highest derivative order for which catalog entries carry closed forms
MAX_EXACT_ORDER = 4


def derivative_paths(order: int) -> list[tuple[str, ...]]:
    """All ``2**order`` ordered derivative paths of the given order."""
    if order < 1:
        raise ValidationError(f"derivative order must be >= 1, got {order}")
    return [tuple(p) for p in itertools.product("xy", repeat=order)]


def as_path(path) -> tuple[str, ...]:
    """Normalise ``"xy"``, ``["x", "y"]`` or ``("x", "y")`` to a path tuple."""
    out = tuple(path)
    if not out or any(a not in ("x", "y") for a in out):
        raise ValidationError(f"derivative path must be a non-empty sequence over 'x'/'y', got {path!r}")
    return out


# ---------------------------------------------------------------------------
# rectangles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        vals = (self.x0, self.x1, self.y0, self.y1)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"rectangle corners must be finite, got {vals}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(f"rectangle needs x0 < x1 and y0 < y1, got {vals}")

    @property
    def slack(self) -> float:
        # absorbs last-ulp drift of points computed as (c + y) / k and the like
        return 1e-12 * (1.0 + max(abs(self.x0), abs(self.x1), abs(self.y0), abs(self.y1)))

    def contains(self, x, y):
        s = self.slack
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x0 - s) & (x <= self.x1 + s) & (y >= self.y0 - s) & (y <= self.y1 + s)

    def contains_rect(self, other: "Rect") -> bool:
        return bool(self.contains(other.x0, other.y0) and self.contains(other.x1, other.y1))

    def check(self, x, y):
        inside = self.contains(x, y)
        if not np.all(inside):
            bad = np.argwhere(~np.atleast_1d(inside))[0]
            px = np.atleast_1d(np.broadcast_to(x, np.shape(inside)))[tuple(bad)]
            py = np.atleast_1d(np.broadcast_to(y, np.shape(inside)))[tuple(bad)]
            raise DomainError(f"point ({float(px):.6g}, {float(py):.6g}) outside domain {self.as_tuple()}")

    def as_tuple(self):
        return (self.x0, self.x1, self.y0, self.y1)


DEFAULT_DOMAIN = Rect(-2.0, 2.0, -2.0, 2.0)


# ---------------------------------------------------------------------------
# planar functions
# ---------------------------------------------------------------------------


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class Function2D:
    """Scalar field on a rectangle, vectorised over numpy arrays.

    ``evaluator(x, y)`` receives broadcast float arrays. ``singular_points``
    holds ``(x, y, value)`` triples whose value overrides the formula, which is
    how the piecewise-defined counterexamples get their value at the origin.
    ``exact_partials`` maps derivative paths to closed-form evaluators valid
    away from the singular points.
    """

    evaluator: Callable
    domain: Rect = DEFAULT_DOMAIN
    name: str = "f"
    exact_partials: Mapping[tuple, Callable] = field(default_factory=dict)
    singular_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "exact_partials", MappingProxyType(dict(self.exact_partials)))
        pts = tuple((float(px), float(py), float(v)) for px, py, v in self.singular_points)
        for px, py, v in pts:
            if not math.isfinite(v):
                raise ValidationError(f"singular point ({px}, {py}) of {self.name} needs a finite value")
        object.__setattr__(self, "singular_points", pts)

    def _singular_mask(self, x, y):
        mask = np.zeros(x.shape, dtype=bool)
        for px, py, _ in self.singular_points:
            mask |= (x == px) & (y == py)
        return mask

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        self.domain.check(x, y)
        with np.errstate(all="ignore"):
            out = np.array(np.broadcast_to(self.evaluator(x, y), x.shape), dtype=float)
        for px, py, v in self.singular_points:
            out[(x == px) & (y == py)] = v
        return _scalar_or_array(out)

    def has_exact(self, path) -> bool:
        return as_path(path) in self.exact_partials

    def exact(self, path, x, y):
        """Closed-form partial along ``path``; NaN at declared singular points."""
        fn = self.exact_partials[as_path(path)]
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        self.domain.check(x, y)
        with np.errstate(all="ignore"):
            out = np.array(np.broadcast_to(fn(x, y), x.shape), dtype=float)
        out[self._singular_mask(x, y)] = np.nan
        return _scalar_or_array(out)

    def is_singular(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return self._singular_mask(x, y)


def eval2d(f: Function2D, p) -> float:
    """Evaluate ``f`` at the single point ``p = (x, y)``."""
    x, y = p
    return float(f(float(x), float(y)))


def linear_combination(terms: Sequence[tuple[float, Function2D]], name: str | None = None) -> Function2D:
    """``sum(c * f for c, f in terms)`` with exact partials kept where every term has them."""
    if not terms:
        raise ValidationError("linear_combination needs at least one term")
    coeffs = [float(c) for c, _ in terms]
    funcs = [f for _, f in terms]
    dom = funcs[0].domain
    for f in funcs[1:]:
        d = f.domain
        dom = Rect(max(dom.x0, d.x0), min(dom.x1, d.x1), max(dom.y0, d.y0), min(dom.y1, d.y1))

    def ev(x, y):
        return sum(c * f(x, y) for c, f in zip(coeffs, funcs))

    shared = set(funcs[0].exact_partials)
    for f in funcs[1:]:
        shared &= set(f.exact_partials)

    def make(path):
        parts = [f.exact_partials[path] for f in funcs]
        return lambda x, y: sum(c * p(x, y) for c, p in zip(coeffs, parts))

    sing = {}
    for f in funcs:
        for px, py, _ in f.singular_points:
            sing[(px, py)] = None
    singular = tuple((px, py, float(ev(np.float64(px), np.float64(py)))) for px, py in sing)
    label = name or " + ".join(f"{c:g}*{f.name}" for c, f in zip(coeffs, funcs))
    return Function2D(ev, dom, label, {p: make(p) for p in shared}, singular)


# ---------------------------------------------------------------------------
# analytic one-variable profiles (building blocks of the parametrised families)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnalyticProfile:
    """One-variable function with closed-form derivatives of every order.

    ``derivative(n)`` returns the n-th derivative as a vectorised callable.
    """

    name: str
    nth: Callable[[int], Callable]

    def __call__(self, t):
        return self.nth(0)(np.asarray(t, dtype=float))

    def derivative(self, n: int) -> Callable:
        return self.nth(n)


def _poly_profile(name, coeffs):
    base = np.polynomial.Polynomial(coeffs)

    def nth(n):
        return base.deriv(n) if n else base

    return AnalyticProfile(name, nth)


def _sin_nth(n):
    return [np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)][n % 4]


def _cos_nth(n):
    return [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][n % 4]


def _abs_nth(n):
    # derivatives of order >= 1 hold away from the kink at 0 only
    if n == 0:
        return np.abs
    if n == 1:
        return np.sign
    return np.zeros_like


_PROFILES: dict[str, AnalyticProfile] = {
    "zero": _poly_profile("zero", [0.0]),
    "identity": _poly_profile("identity", [0.0, 1.0]),
    "square": _poly_profile("square", [0.0, 0.0, 1.0]),
    "cube": _poly_profile("cube", [0.0, 0.0, 0.0, 1.0]),
    "sin": AnalyticProfile("sin", _sin_nth),
    "cos": AnalyticProfile("cos", _cos_nth),
    "exp": AnalyticProfile("exp", lambda n: np.exp),
    "abs": AnalyticProfile("abs", _abs_nth),
}


def profile_names() -> list[str]:
    return sorted(_PROFILES)


def profile_get(name) -> AnalyticProfile:
    if isinstance(name, AnalyticProfile):
        return name
    try:
        return _PROFILES[name]
    except KeyError:
        raise CatalogError(name, profile_names()) from None


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _partials_by_counts(counts_fn, max_order=MAX_EXACT_ORDER):
    table = {}
    for n in range(1, max_order + 1):
        for path in derivative_paths(n):
            table[path] = counts_fn(path.count("x"), path.count("y"))
    return table


# closed-form partials of 2xy/(x^2+y^2), keyed by (#x, #y) with #x <= #y;
# the function is symmetric under x <-> y, which gives the other half.
def _schwartz_lower(a, b):
    r2 = lambda x, y: x * x + y * y  # noqa: E731
    forms = {
        (0, 0): lambda x, y: 2 * x * y / r2(x, y),
        (0, 1): lambda x, y: 2 * x * (x * x - y * y) / r2(x, y) ** 2,
        (0, 2): lambda x, y: -4 * x * y * (3 * x * x - y * y) / r2(x, y) ** 3,
        (0, 3): lambda x, y: -12 * x * (x * x - 2 * x * y - y * y) * (x * x + 2 * x * y - y * y) / r2(x, y) ** 4,
        (1, 1): lambda x, y: -2 * (x * x - 2 * x * y - y * y) * (x * x + 2 * x * y - y * y) / r2(x, y) ** 3,
        (1, 2): lambda x, y: 4 * y * (9 * x**4 - 14 * x * x * y * y + y**4) / r2(x, y) ** 4,
    }
    return forms[(a, b)]


# closed-form partials of 2x^3y^3/(x^6+y^6), same (#x <= #y) convention
def _sextic_lower(a, b):
    q = lambda x, y: x**6 + y**6  # noqa: E731
    forms = {
        (0, 0): lambda x, y: 2 * x**3 * y**3 / q(x, y),
        (0, 1): lambda x, y: 6 * x**3 * y**2 * (x**6 - y**6) / q(x, y) ** 2,
        (0, 2): lambda x, y: 12 * x**3 * y * (x**12 - 9 * x**6 * y**6 + 2 * y**12) / q(x, y) ** 3,
        (0, 3): lambda x, y: 12 * x**3 * (x**18 - 80 * x**12 * y**6 + 125 * x**6 * y**12 - 10 * y**18) / q(x, y) ** 4,
        (1, 1): lambda x, y: -18 * x**2 * y**2 * (x**6 - 2 * x**3 * y**3 - y**6) * (x**6 + 2 * x**3 * y**3 - y**6) / q(x, y) ** 3,
        (1, 2): lambda x, y: -36 * x**2 * y * (x**18 - 32 * x**12 * y**6 + 37 * x**6 * y**12 - 2 * y**18) / q(x, y) ** 4,
    }
    return forms[(a, b)]


def _symmetric_counts(lower):
    def counts(a, b):
        if a <= b:
            return lower(a, b)
        swapped = lower(b, a)
        return lambda x, y: swapped(y, x)

    return counts


def _rational_entry(name, lower, domain):
    counts = _symmetric_counts(lower)
    partials = _partials_by_counts(counts, max_order=3)
    return Function2D(counts(0, 0), domain, name, partials, ((0.0, 0.0, 0.0),))


def schwartz(domain: Rect = DEFAULT_DOMAIN) -> Function2D:
    """2xy/(x^2+y^2), value 0 at the origin."""
    return _rational_entry("schwartz", _schwartz_lower, domain)


def sextic(domain: Rect = DEFAULT_DOMAIN) -> Function2D:
    """2x^3y^3/(x^6+y^6), value 0 at the origin."""
    return _rational_entry("sextic", _sextic_lower, domain)


def plane_wave(phi="sin", k: float = 1.0, domain: Rect = DEFAULT_DOMAIN) -> Function2D:
    """phi(k*x - y); solves f_x + k f_y = 0."""
    phi = profile_get(phi)
    k = float(k)

    def counts(a, b):
        d = phi.derivative(a + b)
        scale = k**a * (-1.0) ** b
        return lambda x, y: scale * d(k * x - y)

    return Function2D(lambda x, y: phi(k * x - y), domain, f"plane_wave({phi.name},k={k:g})", _partials_by_counts(counts))


def _operator_coeffs(a, b):
    # coefficients of v**m in (1+v)**a (1-v)**b, i.e. of ds**(n-m) dt**m in (ds+dt)**a (ds-dt)**b
    plus = np.polynomial.polynomial.polypow([1.0, 1.0], a) if a else np.array([1.0])
    minus = np.polynomial.polynomial.polypow([1.0, -1.0], b) if b else np.array([1.0])
    return np.polynomial.polynomial.polymul(plus, minus)


def poly_transport(*phis, domain: Rect = DEFAULT_DOMAIN) -> Function2D:
    """sum_i (x+y)**(i-1) * phi_i(x-y); D_n of it vanishes for n = len(phis)."""
    if not phis:
        raise ValidationError("poly_transport needs at least one profile")
    profs = [profile_get(p) for p in phis]

    def ev(x, y):
        s, t = x + y, x - y
        return sum(s**i * p(t) for i, p in enumerate(profs))

    def counts(a, b):
        n = a + b
        coeffs = _operator_coeffs(a, b)
        terms = []
        for m, c in enumerate(coeffs):
            if c == 0.0:
                continue
            ds = n - m  # number of s-derivatives
            for e, p in enumerate(profs):
                if ds > e:
                    continue
                falling = math.perm(e, ds)
                terms.append((c * falling, e - ds, p.derivative(m)))

        def fn(x, y):
            s, t = x + y, x - y
            out = np.zeros(np.broadcast(s, t).shape)
            for w, power, d in terms:
                out = out + w * s**power * d(t)
            return out

        return fn

    label = "poly_transport(" + ",".join(p.name for p in profs) + ")"
    return Function2D(ev, domain, label, _partials_by_counts(counts))


def wave_pair(phi="cube", psi="cos", domain: Rect = DEFAULT_DOMAIN) -> Function2D:
    """phi(x+y) + psi(x-y); satisfies f_xx = f_yy and f_xy = f_yx."""
    phi = profile_get(phi)
    psi = profile_get(psi)

    def counts(a, b):
        n = a + b
        dp, dq = phi.derivative(n), psi.derivative(n)
        sign = (-1.0) ** b
        return lambda x, y: dp(x + y) + sign * dq(x - y)

    return Function2D(
        lambda x, y: phi(x + y) + psi(x - y),
        domain,
        f"wave_pair({phi.name},{psi.name})",
        _partials_by_counts(counts),
    )


_CATALOG = {
    "schwartz": (schwartz, "2xy/(x^2+y^2), 0 at the origin; separately smooth, jointly discontinuous"),
    "sextic": (sextic, "2x^3y^3/(x^6+y^6), 0 at the origin; all second partials, jointly discontinuous"),
    "plane_wave": (plane_wave, "phi(k*x - y); params: profile, k"),
    "poly_transport": (poly_transport, "sum_i (x+y)^(i-1) phi_i(x-y); params: profiles phi_1..phi_n"),
    "wave_pair": (wave_pair, "phi(x+y) + psi(x-y); params: profiles phi, psi"),
}


def catalog_names() -> list[str]:
    return list(_CATALOG)


def catalog_describe() -> dict[str, str]:
    return {name: desc for name, (_, desc) in _CATALOG.items()}


def catalog_get(name: str, *profiles, domain: Rect | None = None, **params) -> Function2D:
    """Look up a catalog entry; profiles and keyword parameters go to its constructor.

    >>> catalog_get("schwartz")(1.0, 1.0)
    1.0
    """
    try:
        ctor, _ = _CATALOG[name]
    except KeyError:
        raise CatalogError(name, catalog_names()) from None
    dom = DEFAULT_DOMAIN if domain is None else domain
    try:
        return ctor(*profiles, domain=dom, **params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for catalog entry {name!r}: {exc}") from None


def parse_function_spec(text: str, domain: Rect | None = None) -> Function2D:
    """Build a catalog function from ``name[:profile,...][:key=value,...]``.

    Examples: ``schwartz``, ``plane_wave:sin:k=1``, ``poly_transport:square,cube``,
    ``wave_pair:cube,cos``.
    """
    parts = [p for p in text.strip().split(":") if p]
    if not parts:
        raise ValidationError("empty function spec")
    name, rest = parts[0], parts[1:]
    profiles: list[str] = []
    params: dict[str, float] = {}
    for chunk in rest:
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" in item:
                key, val = item.split("=", 1)
                try:
                    params[key.strip()] = float(val)
                except ValueError:
                    raise ValidationError(f"parameter {key!r} needs a number, got {val!r}") from None
            else:
                profiles.append(item)
    return catalog_get(name, *profiles, domain=domain, **params)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform vertex-centred grid geometry."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        Rect(self.x0, self.x1, self.y0, self.y1)
        for n in (self.nx, self.ny):
            if int(n) != n or n < 2:
                raise ValidationError(f"grid point counts must be integers >= 2, got nx={self.nx}, ny={self.ny}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @classmethod
    def square(cls, lo: float, hi: float, n: int) -> "GridSpec":
        return cls(lo, hi, lo, hi, n, n)

    @property
    def rect(self) -> Rect:
        return Rect(self.x0, self.x1, self.y0, self.y1)

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx) * self.dx

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny) * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def mesh(self):
        """Node coordinates as two ``(nx, ny)`` arrays (``indexing='ij'``)."""
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def probe(self, m: int = 11) -> "GridSpec":
        """Coarser grid on the same rectangle; reuses nodes when (n-1) is divisible by (m-1)."""
        return GridSpec(self.x0, self.x1, self.y0, self.y1, min(m, self.nx), min(m, self.ny))

    def geometry(self) -> dict:
        return {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1, "nx": self.nx, "ny": self.ny}


@dataclass(frozen=True, eq=False)
class GridSample:
    """Values of a field on a :class:`GridSpec`, flattened row-major (x slow)."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self):
        spec = GridSpec(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != spec.nx * spec.ny:
            raise ValidationError(f"grid expects nx*ny = {spec.nx * spec.ny} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            k = int(np.argmax(~np.isfinite(vals)))
            raise ValidationError(f"non-finite grid value at flat index {k}")
        vals.setflags(write=False)
        object.__setattr__(self, "nx", spec.nx)
        object.__setattr__(self, "ny", spec.ny)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_spec(cls, spec: GridSpec, values) -> "GridSample":
        return cls(spec.x0, spec.x1, spec.y0, spec.y1, spec.nx, spec.ny, values)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.nx, self.ny)

    # -- serialisation ----------------------------------------------------

    def to_dict(self, **extra) -> dict:
        out = self.spec.geometry()
        out.update(extra)
        out["values"] = [float(v) for v in self.values]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "GridSample":
        missing = [k for k in ("x0", "x1", "y0", "y1", "nx", "ny", "values") if k not in data]
        if missing:
            raise ValidationError(f"grid JSON missing keys: {', '.join(missing)}")
        try:
            return cls(
                float(data["x0"]),
                float(data["x1"]),
                float(data["y0"]),
                float(data["y1"]),
                data["nx"],
                data["ny"],
                np.asarray(data["values"], dtype=float),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed grid JSON: {exc}") from None

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_dict(**extra))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        xs, ys = self.spec.xs, self.spec.ys
        arr = self.as_array()
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(arr[i, j]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "<csv>") -> "GridSample":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{source}: empty CSV") from None
        if [h.strip() for h in header] != ["x", "y", "value"]:
            raise ValidationError(f"{source}: line 1: header must be 'x,y,value', got {','.join(header)!r}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                if len(rec) != 3:
                    raise ValueError("expected 3 fields")
                x, y, v = (float(c) for c in rec)
            except ValueError as exc:
                raise ValidationError(f"{source}: line {lineno}: malformed record {','.join(rec)!r} ({exc})") from None
            rows.append((x, y, v))
        if not rows:
            raise ValidationError(f"{source}: no data rows")
        data = np.array(rows)
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        for axis, vals in (("x", xs), ("y", ys)):
            if vals.size < 2:
                raise ValidationError(f"{source}: need at least 2 distinct {axis} values")
            steps = np.diff(vals)
            ref = (vals[-1] - vals[0]) / (vals.size - 1)
            if np.max(np.abs(steps - ref)) > 1e-9 * max(abs(ref), 1e-300):
                raise ValidationError(f"{source}: {axis} spacing is not uniform to relative tolerance 1e-9")
        nx, ny = xs.size, ys.size
        if len(rows) != nx * ny:
            raise ValidationError(f"{source}: expected {nx * ny} rows for a {nx}x{ny} grid, got {len(rows)}")
        ix = np.searchsorted(xs, data[:, 0])
        iy = np.searchsorted(ys, data[:, 1])
        flat = ix * ny + iy
        if np.unique(flat).size != flat.size:
            raise ValidationError(f"{source}: duplicate grid nodes")
        values = np.empty(nx * ny)
        values[flat] = data[:, 2]
        return cls(float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]), nx, ny, values)


def load_grid(path) -> GridSample:
    """Read a grid from ``.json`` or ``.csv`` (decided by suffix)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror or exc})") from None
    if path.suffix.lower() == ".csv":
        return GridSample.from_csv(text, source=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top-level JSON must be an object")
    try:
        return GridSample.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def sample_grid(f: Function2D, spec: GridSpec) -> GridSample:
    """Sample ``f`` on every node of ``spec``."""
    if not f.domain.contains_rect(spec.rect):
        raise DomainError(f"grid {spec.rect.as_tuple()} not inside domain {f.domain.as_tuple()} of {f.name}")
    X, Y = spec.mesh()
    vals = np.asarray(f(X, Y), dtype=float).reshape(spec.nx, spec.ny)
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NumericalError(f"non-finite value of {f.name}", (float(X[i, j]), float(Y[i, j])))
    return GridSample.from_spec(spec, vals.ravel())


def _cell_coords(u, n):
    # fractional node coordinate -> (cell index, offset in [0, 1]); exact at nodes
    r = np.rint(u)
    u = np.where(np.abs(u - r) <= 1e-9, r, u)
    i = np.clip(np.floor(u).astype(np.int64), 0, n - 2)
    return i, u - i


def from_grid(sample: GridSample) -> Function2D:
    """Bilinear interpolant of a grid sample (reproduces node values exactly)."""
    if not isinstance(sample, GridSample):
        raise ValidationError(f"from_grid expects a GridSample, got {type(sample).__name__}")
    spec = sample.spec
    arr = sample.as_array()
    dx, dy = spec.dx, spec.dy

    def ev(x, y):
        i, tx = _cell_coords((x - spec.x0) / dx, spec.nx)
        j, ty = _cell_coords((y - spec.y0) / dy, spec.ny)
        v00, v10 = arr[i, j], arr[i + 1, j]
        v01, v11 = arr[i, j + 1], arr[i + 1, j + 1]
        return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11

    return Function2D(ev, spec.rect, "grid")


# ---------------------------------------------------------------------------
# sampled one-variable tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Profile1D:
    """Piecewise-linear table ``t -> value`` on strictly increasing nodes."""

    t_values: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.t_values, dtype=float).ravel()
        v = np.array(self.values, dtype=float).ravel()
        if t.size != v.size:
            raise ValidationError(f"profile needs equal lengths, got {t.size} nodes and {v.size} values")
        if t.size < 2:
            raise ValidationError("profile needs at least 2 nodes")
        if not np.all(np.diff(t) > 0):
            raise ValidationError("profile nodes must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("profile nodes and values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t_values", t)
        object.__setattr__(self, "values", v)

    @property
    def t_min(self) -> float:
        return float(self.t_values[0])

    @property
    def t_max(self) -> float:
        return float(self.t_values[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * (1.0 + max(abs(self.t_min), abs(self.t_max)))
        if np.any((t < self.t_min - slack) | (t > self.t_max + slack)):
            raise DomainError(f"profile evaluated outside [{self.t_min:.6g}, {self.t_max:.6g}]")
        return _scalar_or_array(np.interp(t, self.t_values, self.values))

    def __len__(self):
        return self.t_values.size

    def to_dict(self) -> dict:
        return {"t_values": [float(t) for t in self.t_values], "values": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Profile1D":
        return cls(np.asarray(data["t_values"], dtype=float), np.asarray(data["values"], dtype=float))
