"""Hot inner loops, each in a numba and a pure-numpy flavour.

The flavour bound to the public names is picked once at import from the
``PDESTRUCT_BACKEND`` environment variable (``numba`` or ``numpy``; default
``numba``, silently falling back to numpy when numba is not importable).
Both flavours are always importable under ``<name>_numba`` / ``<name>_numpy``
so tests and the benchmark can compare them directly.

All kernels are pure reductions (max/min/compare), so the two flavours return
bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_requested = os.environ.get("PDESTRUCT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PDESTRUCT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"

# rows per numpy chunk in quotient_spread, keeps the (rows, R, R) temporary small
_CHUNK_ELEMS = 1 << 22


# --------------------------------------------------------------------------
# quotient spread: max - min of all cross difference quotients per row
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def quotient_spread_numba(a, ga, b, gb):
    n, r_left = a.shape
    r_right = b.shape[1]
    out = np.empty(n)
    for k in range(n):
        lo = np.inf
        hi = -np.inf
        bad = False
        for i in range(r_left):
            for j in range(r_right):
                q = (gb[k, j] - ga[k, i]) / (b[k, j] - a[k, i])
                if not np.isfinite(q):
                    bad = True
                if q < lo:
                    lo = q
                if q > hi:
                    hi = q
        out[k] = np.nan if bad else hi - lo
    return out


def quotient_spread_numpy(a, ga, b, gb):
    a, ga, b, gb = (np.asarray(v, dtype=float) for v in (a, ga, b, gb))
    n, r_left = a.shape
    r_right = b.shape[1]
    out = np.empty(n)
    step = max(1, _CHUNK_ELEMS // max(1, r_left * r_right))
    with np.errstate(all="ignore"):
        for start in range(0, n, step):
            sl = slice(start, start + step)
            q = (gb[sl, None, :] - ga[sl, :, None]) / (b[sl, None, :] - a[sl, :, None])
            q = q.reshape(q.shape[0], -1)
            spread = q.max(axis=1) - q.min(axis=1)
            spread[~np.isfinite(q).all(axis=1)] = np.nan
            out[sl] = spread
    return out


# --------------------------------------------------------------------------
# largest |difference quotient| over all sample pairs inside each cell
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def pair_slope_max_numba(t, v):
    n, m = t.shape
    out = np.empty(n)
    for k in range(n):
        best = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                q = abs((v[k, j] - v[k, i]) / (t[k, j] - t[k, i]))
                if not (q <= best):
                    best = q
        out[k] = best
    return out


def pair_slope_max_numpy(t, v):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    m = t.shape[1]
    i, j = np.triu_indices(m, k=1)
    with np.errstate(all="ignore"):
        q = np.abs((v[:, j] - v[:, i]) / (t[:, j] - t[:, i]))
    out = q.max(axis=1)
    out[np.isnan(q).any(axis=1)] = np.nan
    return out


# --------------------------------------------------------------------------
# max - min per row, NaN entries skipped
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def row_range_numba(vals):
    n, s = vals.shape
    out = np.empty(n)
    for k in range(n):
        lo = np.inf
        hi = -np.inf
        for j in range(s):
            v = vals[k, j]
            if v != v:
                continue
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        out[k] = hi - lo if hi >= lo else 0.0
    return out


def row_range_numpy(vals):
    vals = np.asarray(vals, dtype=float)
    empty = np.isnan(vals).all(axis=1)
    safe = np.where(empty[:, None], 0.0, vals)
    return np.nanmax(safe, axis=1) - np.nanmin(safe, axis=1)


# --------------------------------------------------------------------------
# max over the 8-neighbourhood of every grid node
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def neighbor_max_numba(field):
    nx, ny = field.shape
    out = np.full((nx, ny), -np.inf)
    for i in range(nx):
        for j in range(ny):
            best = -np.inf
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    if di == 0 and dj == 0:
                        continue
                    ii = i + di
                    jj = j + dj
                    if 0 <= ii < nx and 0 <= jj < ny and field[ii, jj] > best:
                        best = field[ii, jj]
            out[i, j] = best
    return out


def neighbor_max_numpy(field):
    field = np.asarray(field, dtype=float)
    nx, ny = field.shape
    padded = np.full((nx + 2, ny + 2), -np.inf)
    padded[1:-1, 1:-1] = field
    out = np.full((nx, ny), -np.inf)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            out = np.maximum(out, padded[1 + di : 1 + di + nx, 1 + dj : 1 + dj + ny])
    return out


# --------------------------------------------------------------------------
# box / sub-box witness search for the nowhere-dense surrogate
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def box_witnesses_numba(flags, mask, k, s):
    """Per k-box: (relevant, di, dj); di = dj = -1 when no clean sub-box exists."""
    nx, ny = flags.shape
    bx = nx - k + 1
    by = ny - k + 1
    relevant = np.zeros((bx, by), dtype=np.bool_)
    wit = np.full((bx, by, 2), -1, dtype=np.int64)
    for i in range(bx):
        for j in range(by):
            hit = False
            for a in range(k):
                for b in range(k):
                    if mask[i + a, j + b]:
                        hit = True
            relevant[i, j] = hit
            if not hit:
                continue
            found = False
            for di in range(k - s + 1):
                if found:
                    break
                for dj in range(k - s + 1):
                    clean = True
                    meets = False
                    for a in range(s):
                        for b in range(s):
                            if mask[i + di + a, j + dj + b]:
                                meets = True
                                if flags[i + di + a, j + dj + b]:
                                    clean = False
                    if clean and meets:
                        wit[i, j, 0] = di
                        wit[i, j, 1] = dj
                        found = True
                        break
    return relevant, wit


def _window_sums(arr, w):
    c = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.int64)
    c[1:, 1:] = np.cumsum(np.cumsum(arr.astype(np.int64), axis=0), axis=1)
    return c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]


def box_witnesses_numpy(flags, mask, k, s):
    flags = np.asarray(flags, dtype=bool) & np.asarray(mask, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    nx, ny = flags.shape
    bx, by = nx - k + 1, ny - k + 1
    relevant = _window_sums(mask, k) > 0
    good_sub = (_window_sums(flags, s) == 0) & (_window_sums(mask, s) > 0)
    wit = np.full((bx, by, 2), -1, dtype=np.int64)
    span = k - s + 1
    unresolved = relevant.copy()
    # row-major scan over sub-box offsets, first hit wins (matches the loop flavour)
    for di in range(span):
        for dj in range(span):
            ok = good_sub[di : di + bx, dj : dj + by] & unresolved
            wit[ok, 0] = di
            wit[ok, 1] = dj
            unresolved &= ~ok
    return relevant, wit


_IMPLS = {
    "quotient_spread": (quotient_spread_numba, quotient_spread_numpy),
    "pair_slope_max": (pair_slope_max_numba, pair_slope_max_numpy),
    "row_range": (row_range_numba, row_range_numpy),
    "neighbor_max": (neighbor_max_numba, neighbor_max_numpy),
    "box_witnesses": (box_witnesses_numba, box_witnesses_numpy),
}


def implementation(name, backend=None):
    """Return the kernel ``name`` for ``backend`` (defaults to the active one)."""
    backend = backend or BACKEND
    fast, slow = _IMPLS[name]
    return fast if backend == "numba" else slow


quotient_spread = implementation("quotient_spread")
pair_slope_max = implementation("pair_slope_max")
row_range = implementation("row_range")
neighbor_max = implementation("neighbor_max")
box_witnesses = implementation("box_witnesses")
