import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from pdestruct import (
    CatalogError,
    DomainError,
    GridSample,
    GridSpec,
    Profile1D,
    Rect,
    ValidationError,
    catalog_get,
    eval2d,
    from_grid,
    linear_combination,
    load_grid,
    parse_function_spec,
    sample_grid,
)
from pdestruct.differencing import fd_partial
from pdestruct.function_model import catalog_names, derivative_paths, profile_get, profile_names

from conftest import field

CATALOG_SPECS = [
    "schwartz",
    "sextic",
    "plane_wave:sin:k=1",
    "plane_wave:exp:k=0.5",
    "plane_wave:cube:k=-2",
    "poly_transport:square,cube",
    "poly_transport:sin,cos,identity",
    "wave_pair:cube,cos",
    "wave_pair:exp,sin",
]


def test_schwartz_values():
    f = catalog_get("schwartz")
    assert f(1.0, 1.0) == 1.0
    assert f(0.0, 0.0) == 0.0
    assert f(1.0, -1.0) == -1.0
    assert eval2d(f, (0, 0)) == 0.0


@pytest.mark.parametrize("h", [1e-3, 0.1, 1.0, 1.7])
def test_sextic_diagonal(h):
    f = catalog_get("sextic")
    assert f(h, h) == pytest.approx(1.0, rel=1e-14)
    assert f(0.0, 0.0) == 0.0


def test_eval_examples():
    assert eval2d(parse_function_spec("plane_wave:sin:k=1"), (2, 2)) == 0.0
    assert eval2d(parse_function_spec("wave_pair:cube,cos"), (1, 0)) == pytest.approx(1 + np.cos(1.0), abs=1e-15)


def test_eval_outside_domain():
    with pytest.raises(DomainError):
        eval2d(catalog_get("schwartz"), (3.0, 0.0))


def test_schwartz_axes_vanish():
    f = catalog_get("schwartz")
    t = np.linspace(-2, 2, 41)
    assert np.all(f(t, 0 * t) == 0)
    assert np.all(f(0 * t, t) == 0)


def test_unknown_catalog_lists_names():
    with pytest.raises(CatalogError) as info:
        catalog_get("nope")
    msg = str(info.value)
    for name in ("schwartz", "sextic", "plane_wave", "poly_transport", "wave_pair"):
        assert name in msg


def test_catalog_names_minimum():
    assert {"schwartz", "sextic", "plane_wave", "poly_transport", "wave_pair"} <= set(catalog_names())


def test_bad_profile_and_param():
    with pytest.raises(CatalogError):
        parse_function_spec("plane_wave:nosuch")
    with pytest.raises(ValidationError):
        parse_function_spec("plane_wave:sin:k=abc")
    with pytest.raises(ValidationError):
        parse_function_spec("")


@pytest.mark.parametrize("spec", CATALOG_SPECS)
def test_exact_partials_match_fd(spec, rng):
    f = parse_function_spec(spec)
    pts = rng.uniform(-1.9, 1.9, size=(20, 2))
    for n in (1, 2, 3):
        for path in derivative_paths(n):
            assert f.has_exact(path), (spec, path)
    for n in (1, 2):
        for path in derivative_paths(n):
            exact = f.exact(path, pts[:, 0], pts[:, 1])
            fd = fd_partial(f, path, (pts[:, 0], pts[:, 1]), 1e-4, use_exact=False)
            err = np.abs(exact - fd)
            assert np.all(err <= 1e-5 * (1 + np.abs(exact))), (spec, path, err.max())


def _sym_partial(expr, path):
    x, y = sp.symbols("x y")
    for axis in path:
        expr = sp.diff(expr, x if axis == "x" else y)
    return sp.lambdify((x, y), expr, "numpy")


@pytest.mark.parametrize("name,formula", [("schwartz", "2*x*y/(x**2+y**2)"), ("sextic", "2*x**3*y**3/(x**6+y**6)")])
def test_counterexample_partials_symbolic(name, formula, rng):
    f = catalog_get(name)
    expr = sp.sympify(formula)
    pts = rng.uniform(-2, 2, size=(30, 2))
    for n in (1, 2, 3):
        for path in derivative_paths(n):
            oracle = _sym_partial(expr, path)(pts[:, 0], pts[:, 1])
            got = f.exact(path, pts[:, 0], pts[:, 1])
            np.testing.assert_allclose(got, oracle, rtol=1e-11, atol=1e-11)


def test_exact_is_nan_at_singular_point():
    f = catalog_get("schwartz")
    assert np.isnan(f.exact("x", 0.0, 0.0))


def test_poly_transport_partials_symbolic(rng):
    x, y = sp.symbols("x y")
    expr = sp.sin(x - y) + (x + y) * sp.cos(x - y) + (x + y) ** 2 * (x - y)
    f = parse_function_spec("poly_transport:sin,cos,identity")
    pts = rng.uniform(-2, 2, size=(15, 2))
    np.testing.assert_allclose(f(pts[:, 0], pts[:, 1]), sp.lambdify((x, y), expr)(pts[:, 0], pts[:, 1]), atol=1e-12)
    for n in (1, 2, 3, 4):
        for path in derivative_paths(n):
            oracle = _sym_partial(expr, path)(pts[:, 0], pts[:, 1])
            np.testing.assert_allclose(f.exact(path, pts[:, 0], pts[:, 1]), oracle, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", profile_names())
def test_profile_derivatives_consistent(name):
    p = profile_get(name)
    t = np.array([-1.3, -0.4, 0.7, 1.9])
    h = 1e-5
    for n in (0, 1, 2):
        fd = (p.derivative(n)(t + h) - p.derivative(n)(t - h)) / (2 * h)
        np.testing.assert_allclose(fd, p.derivative(n + 1)(t), atol=1e-6)


def test_sample_grid_examples():
    s = GridSpec(0, 1, 0, 1, 2, 2)
    g = sample_grid(field(lambda x, y: x, Rect(0, 1, 0, 1)), s)
    assert g.values.tolist() == [0.0, 0.0, 1.0, 1.0]
    g = sample_grid(field(lambda x, y: 3.0), GridSpec.square(-1, 1, 7))
    assert np.all(g.values == 3.0)
    g = sample_grid(catalog_get("schwartz"), GridSpec.square(-1, 1, 3))
    a = g.as_array()
    assert a[1, 1] == 0.0 and a[2, 2] == 1.0


def test_sample_grid_outside_domain():
    with pytest.raises(DomainError):
        sample_grid(catalog_get("schwartz"), GridSpec.square(-3, 3, 5))


@pytest.mark.parametrize(
    "args",
    [(1, 0, 0, 1, 3, 3), (0, 1, 0, 1, 1, 3), (0, 1, 0, 1, 3, 0), (0, float("nan"), 0, 1, 3, 3)],
)
def test_gridspec_rejects(args):
    with pytest.raises(ValidationError):
        GridSpec(*args)


def test_gridsample_rejects_bad_values():
    with pytest.raises(ValidationError):
        GridSample(0, 1, 0, 1, 2, 2, [0, 1, 2])
    with pytest.raises(ValidationError):
        GridSample(0, 1, 0, 1, 2, 2, [0, 1, 2, np.inf])


def test_from_grid_examples():
    s = GridSpec.square(0, 1, 3)
    g = from_grid(sample_grid(field(lambda x, y: x**2, Rect(0, 1, 0, 1)), s))
    assert g(0.25, 0.3) == pytest.approx(0.125, abs=1e-15)
    assert not g.exact_partials
    lin = from_grid(sample_grid(field(lambda x, y: x + y), GridSpec.square(-2, 2, 5)))
    pts = np.random.default_rng(1).uniform(-2, 2, size=(50, 2))
    np.testing.assert_allclose(lin(pts[:, 0], pts[:, 1]), pts.sum(axis=1), atol=1e-14)


@pytest.mark.parametrize("spec", CATALOG_SPECS)
def test_from_grid_reproduces_nodes(spec):
    f = parse_function_spec(spec)
    s = GridSpec(-2, 2, -1.5, 1.7, 23, 17)
    sample = sample_grid(f, s)
    g = from_grid(sample)
    X, Y = s.mesh()
    assert np.array_equal(g(X, Y), sample.as_array())


def test_grid_json_roundtrip(tmp_path):
    sample = sample_grid(parse_function_spec("wave_pair:cube,cos"), GridSpec(-1, 1, 0, 2, 5, 4))
    p = tmp_path / "g.json"
    p.write_text(sample.to_json())
    back = load_grid(p)
    assert back.spec == sample.spec
    assert np.array_equal(back.values, sample.values)
    assert set(json.loads(sample.to_json())) >= {"x0", "x1", "y0", "y1", "nx", "ny", "values"}


def test_grid_csv_roundtrip(tmp_path):
    sample = sample_grid(parse_function_spec("plane_wave:sin:k=1"), GridSpec(-1, 1, -0.5, 0.5, 6, 3))
    p = tmp_path / "g.csv"
    p.write_text(sample.to_csv())
    back = load_grid(p)
    np.testing.assert_allclose(back.values, sample.values, rtol=0, atol=0)
    np.testing.assert_allclose([back.x0, back.x1, back.y0, back.y1], [-1, 1, -0.5, 0.5])


def test_csv_errors_name_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y,value\n0,0,1\n0,1,2\n1,0,oops\n1,1,4\n")
    with pytest.raises(ValidationError) as info:
        load_grid(p)
    assert "bad.csv" in str(info.value) and "line 4" in str(info.value)
    p.write_text("a,b,c\n")
    with pytest.raises(ValidationError):
        load_grid(p)
    p.write_text("x,y,value\n0,0,1\n0,1,2\n1,0,3\n1,0,4\n")
    with pytest.raises(ValidationError):
        load_grid(p)
    p.write_text("x,y,value\n0,0,1\n0,1,2\n0,3,2\n1,0,3\n1,1,4\n1,3,4\n")
    with pytest.raises(ValidationError):
        load_grid(p)


def test_load_grid_unreadable(tmp_path):
    with pytest.raises(ValidationError) as info:
        load_grid(tmp_path / "missing.json")
    assert "missing.json" in str(info.value)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load_grid(bad)


def test_profile1d():
    p = Profile1D([0, 1, 2], [0, 1, 4])
    assert p(1.5) == 2.5
    assert p.t_min == 0 and p.t_max == 2 and len(p) == 3
    with pytest.raises(DomainError):
        p(2.5)
    with pytest.raises(ValidationError):
        Profile1D([0, 0, 1], [1, 2, 3])
    with pytest.raises(ValidationError):
        Profile1D([0, 1], [1, 2, 3])
    assert Profile1D.from_dict(p.to_dict())(0.5) == 0.5


def test_rect_checks():
    with pytest.raises(ValidationError):
        Rect(1, 0, 0, 1)
    r = Rect(-1, 1, -1, 1)
    assert r.contains_rect(Rect(-0.5, 0.5, -1, 1))
    assert not r.contains_rect(Rect(-2, 0.5, -1, 1))


@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    x=st.floats(-1.9, 1.9),
    y=st.floats(-1.9, 1.9),
)
def test_linear_combination_is_linear(a, b, x, y):
    f = parse_function_spec("plane_wave:sin:k=1")
    g = parse_function_spec("wave_pair:cube,cos")
    h = linear_combination([(a, f), (b, g)])
    assert h(x, y) == pytest.approx(a * f(x, y) + b * g(x, y), abs=1e-12)
    path = ("x", "y")
    assert h.exact(path, x, y) == pytest.approx(a * f.exact(path, x, y) + b * g.exact(path, x, y), abs=1e-11)
