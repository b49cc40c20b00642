import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from pdestruct import (
    GridSpec,
    HypothesisViolation,
    Rect,
    UnsupportedOrderError,
    ValidationError,
    catalog_get,
    constancy_along_characteristics,
    decompose_dn,
    decompose_wave,
    extract_profile,
    from_grid,
    parse_function_spec,
    reconstruct_dn,
    residual_first_order,
    sample_grid,
)
from pdestruct.function_model import Function2D

from conftest import field

SPEC = GridSpec.square(-2, 2, 101)
T = np.linspace(-4, 4, 801)


def sym_dn_zero(expr_xy, n):
    """D_n via all 2**n ordered partials, and the rotated-coordinate identity."""
    x, y, s, t = sp.symbols("x y s t")
    expr = sp.sympify(expr_xy)
    total = 0
    for k in range(n + 1):
        total += sp.binomial(n, k) * sp.diff(expr, x, k, y, n - k) if n - k else sp.binomial(n, k) * sp.diff(expr, x, k)
    rotated = expr.subs({x: (s + t) / 2, y: (s - t) / 2}, simultaneous=True)
    return sp.simplify(total) == 0 and sp.simplify(2**n * sp.diff(rotated, s, n)) == 0


def test_symbolic_oracles():
    assert sym_dn_zero("(x-y)**2 + (x+y)*(x-y)**3", 2)
    assert sym_dn_zero("(x+y)**2*(x-y)", 3)
    assert not sym_dn_zero("(x+y)**2*(x-y)", 2)
    assert not sym_dn_zero("2*x*y", 1)


def test_residual_first_order_examples():
    assert residual_first_order(parse_function_spec("plane_wave:sin:k=1"), 1, SPEC) <= 1e-6
    assert residual_first_order(parse_function_spec("plane_wave:sin:k=1"), 1, SPEC, use_exact=False) <= 1e-6
    s = GridSpec.square(-1, 1, 11)
    assert residual_first_order(field(lambda x, y: x), 1, s, h=1e-3) == pytest.approx(1.0, abs=1e-12)
    assert residual_first_order(field(lambda x, y: 2 * x - y), 2, s, h=1e-3) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValidationError):
        residual_first_order(field(lambda x, y: x), 0, s)


def test_extract_profile_examples():
    f = parse_function_spec("plane_wave:sin:k=1")
    fit = extract_profile(f, 1, SPEC, n_samples=401)
    assert fit.reconstruction_error <= 1e-9
    np.testing.assert_allclose(fit.profile.values, np.sin(fit.profile.t_values), atol=1e-15)
    cube = parse_function_spec("plane_wave:cube:k=2")
    fit = extract_profile(cube, 2, SPEC)
    np.testing.assert_allclose(fit.profile.values, fit.profile.t_values**3, rtol=1e-12, atol=1e-12)
    # s = 2x - y spans [-6, 6]; 801 samples give dt = 0.015 and max|phi''| = 36
    assert fit.reconstruction_error <= 0.015**2 / 8 * 36
    # with dt = 0.01 every node value 2x - y (a multiple of 0.04) is a profile node
    assert extract_profile(cube, 2, SPEC, n_samples=1201).reconstruction_error <= 1e-6
    const = field(lambda x, y: 4.5)
    fit = extract_profile(const, -3.0, GridSpec.square(-1, 1, 11))
    assert fit.reconstruction_error == 0.0 and np.all(fit.profile.values == 4.5)


def test_extract_profile_interpolation_bound():
    # linear interpolation: dt**2/8 * max|phi''| with phi = sin
    f = parse_function_spec("plane_wave:sin:k=1")
    for n in (101, 201, 401):
        fit = extract_profile(f, 1, GridSpec.square(-2, 2, 37), n_samples=n)
        dt = 8.0 / (n - 1)
        assert fit.reconstruction_error <= dt**2 / 8 * 1.0 + 1e-15


def test_extract_profile_baseline():
    f = parse_function_spec("plane_wave:exp:k=1")
    s = GridSpec(-1, 1, 0.5, 1.5, 21, 11)
    with pytest.raises(ValidationError):
        extract_profile(f, 1, s)
    fit = extract_profile(f, 1, s, y_base=1.0)
    assert fit.reconstruction_error <= (3 / 800) ** 2 / 8 * np.exp(0.5)
    np.testing.assert_allclose(fit.profile.values, np.exp(fit.profile.t_values), rtol=1e-14)


def test_decompose_order_two():
    f = parse_function_spec("poly_transport:square,cube")
    r = decompose_dn(f, 2, SPEC)
    assert len(r.profiles) == 2
    assert np.max(np.abs(r.profiles[0](T) - T**2)) <= 1e-6
    assert np.max(np.abs(r.profiles[1](T) - T**3)) <= 1e-6
    assert r.reconstruction_error <= 1e-6
    assert r.method_metadata["exact_partials"] == [True, True]
    d = r.to_dict()
    assert d["order"] == 2 and len(d["profiles"]) == 2


def test_decompose_order_three():
    f = Function2D(lambda x, y: (x + y) ** 2 * (x - y), Rect(-2, 2, -2, 2), "s2t")
    exact = parse_function_spec("poly_transport:zero,zero,identity")
    X, Y = SPEC.mesh()
    assert np.array_equal(f(X, Y), exact(X, Y))
    r = decompose_dn(exact, 3, SPEC)
    assert np.max(np.abs(r.profiles[0](T))) <= 1e-6
    assert np.max(np.abs(r.profiles[1](T))) <= 1e-6
    assert np.max(np.abs(r.profiles[2](T) - T)) <= 1e-6


def test_decompose_order_one_matches_extract():
    f = parse_function_spec("plane_wave:cos:k=1")
    r = decompose_dn(f, 1, SPEC)
    fit = extract_profile(f, 1, SPEC)
    assert np.max(np.abs(r.profiles[0].values - fit.profile.values)) <= 1e-12
    np.testing.assert_allclose(r.profiles[0].values, np.cos(T), atol=1e-15)


def test_decompose_refuses_schwartz():
    with pytest.raises(HypothesisViolation) as info:
        decompose_dn(catalog_get("schwartz"), 2, SPEC)
    assert "residual gate" in str(info.value)
    assert info.value.node == (0.0, 0.0)


def test_decompose_order_cap():
    f = parse_function_spec("poly_transport:square,cube")
    with pytest.raises(UnsupportedOrderError):
        decompose_dn(f, 5, SPEC)
    with pytest.raises(ValidationError):
        decompose_dn(f, 0, SPEC)


PROFILES = [np.sin, lambda t: np.cos(2 * t) / 3, lambda t: 0.1 * t**2, lambda t: np.exp(t / 4) / 10]


@pytest.mark.parametrize("n,h", [(1, 1e-4), (2, 1e-4), (3, 1e-3), (4, 1e-2)])
def test_round_trip_without_closed_forms(n, h):
    f = reconstruct_dn(PROFILES[:n], Rect(-2, 2, -2, 2))
    assert not f.exact_partials
    r = decompose_dn(f, n, SPEC, h=h)
    budget = r.method_metadata["error_budget"]
    for got, want in zip(r.profiles, PROFILES):
        assert np.max(np.abs(got.values - want(T))) <= 10 * budget


def test_round_trip_grid_input():
    f = parse_function_spec("poly_transport:sin,cos")
    g = from_grid(sample_grid(f, SPEC))
    # bilinear data: difference on the sample lattice itself
    r = decompose_dn(g, 2, SPEC, h=SPEC.dx, gate=5e-2)
    assert r.method_metadata["exact_partials"] == [False, False]
    assert r.reconstruction_error <= 1e-2


def test_wave_split_example():
    f = parse_function_spec("wave_pair:cube,cos")
    w = decompose_wave(f, SPEC)
    assert w.psi(0.0) == 0.0
    assert np.max(np.abs(w.psi_tilde(T) + 2 * np.sin(T))) <= 1e-12
    assert np.max(np.abs(w.psi(T) - (np.cos(T) - 1))) <= 1e-6
    assert np.max(np.abs(w.phi(T) - (T**3 + 1))) <= 1e-6
    assert w.reconstruction_error <= 1e-6
    assert len(w.phi) == len(w.psi) == 801
    assert set(w.to_dict()) >= {"phi", "psi", "psi_tilde", "residuals", "reconstruction_error"}


def test_wave_split_harmonic():
    w = decompose_wave(field(lambda x, y: x + y), SPEC)
    assert np.max(np.abs(w.psi.values)) <= 1e-12
    assert np.max(np.abs(w.phi(T) - T)) <= 1e-12
    assert w.reconstruction_error <= 1e-12


def test_wave_split_refuses_schwartz():
    with pytest.raises(HypothesisViolation) as info:
        decompose_wave(catalog_get("schwartz"), SPEC)
    assert "f''_xy" in str(info.value)


def test_wave_split_gates():
    # f_xx != f_yy
    with pytest.raises(HypothesisViolation) as info:
        decompose_wave(field(lambda x, y: x**2), GridSpec.square(-1, 1, 21))
    assert "f''_xx = f''_yy" in str(info.value)


def test_wave_gauge_invariance():
    f = parse_function_spec("wave_pair:exp,sin")
    w = decompose_wave(f, SPEC)
    X, Y = SPEC.mesh()
    c = 0.37
    shifted = np.max(np.abs(f(X, Y) - (w.phi(X + Y) - c) - (w.psi(X - Y) + c)))
    assert shifted == pytest.approx(w.reconstruction_error, abs=1e-12)


@given(
    phi=st.sampled_from(["sin", "cos", "exp", "cube", "square"]),
    k=st.sampled_from([1.0, -1.0, 0.5, 2.0]),
)
def test_residual_implies_characteristic_constancy(phi, k):
    f = parse_function_spec(f"plane_wave:{phi}:k={k}")
    s = GridSpec.square(-2, 2, 21)
    if residual_first_order(f, 1, s) <= 1e-6:
        assert constancy_along_characteristics(f, 1, s, 1e-4).max_deviation <= 1e-4
    else:
        assert constancy_along_characteristics(f, k, s, 1e-4).passed
