"""Grid model of smooth functions: projection, derivatives, text I/O."""

import math
import warnings

import numpy as np
import pytest

from gradedinv import (
    AliasingWarning,
    ConfigMismatchError,
    DataError,
    GridConfig,
    IntervalDomainError,
    OrderRangeError,
    SmoothFn,
    from_text,
    lincomb,
    project,
)

from util import FULL, SMALL, fn_from_poly, poly_vals


def test_grid_config_validation():
    with pytest.raises(DataError):
        GridConfig(D=0, M=65, N=6)
    with pytest.raises(DataError):
        GridConfig(D=16, M=16, N=6)  # need M >= D + 1
    with pytest.raises(DataError):
        GridConfig(D=16, M=65, N=0)
    cfg = GridConfig(D=16, M=65, N=6)
    assert cfg.D == 16 and cfg.M == 65 and cfg.N == 6


def test_nodes_ascending_and_endpoints():
    nodes = SMALL.nodes
    assert nodes.shape == (SMALL.M,)
    assert nodes[0] == 0.0 and nodes[-1] == 1.0
    assert np.all(np.diff(nodes) > 0)
    # closed form of the node map
    j = np.arange(SMALL.M)
    want = np.sin(0.5 * math.pi * j / (SMALL.M - 1)) ** 2
    assert np.max(np.abs(nodes - want)) <= 1e-15


def test_zero_const_coordinate():
    z = SmoothFn.zero(SMALL)
    assert np.all(z.node_values() == 0.0)
    c = SmoothFn.const(2.5, SMALL)
    assert np.max(np.abs(c.node_values() - 2.5)) == 0.0
    assert np.all(c.derivative(1).node_values() == 0.0)
    s = SmoothFn.coordinate(SMALL)
    assert np.allclose(s.coeffs[:2], [0.5, 0.5])
    assert np.max(np.abs(s.node_values() - SMALL.nodes)) <= 1e-15


def test_from_coeffs_length_cap():
    SmoothFn.from_coeffs(np.ones(SMALL.D + 1), SMALL)
    with pytest.raises(DataError):
        SmoothFn.from_coeffs(np.ones(SMALL.D + 2), SMALL)


def test_coeffs_are_read_only():
    f = SmoothFn.from_coeffs([1.0, 2.0], SMALL)
    with pytest.raises(ValueError):
        f.coeffs[0] = 0.0


def test_call_and_domain():
    f = fn_from_poly([1.0, -2.0, 3.0], SMALL)
    pts = np.linspace(0.0, 1.0, 17)
    assert np.max(np.abs(f(pts) - poly_vals([1.0, -2.0, 3.0], pts))) <= 1e-13
    assert abs(f(0.3) - poly_vals([1.0, -2.0, 3.0], 0.3)) <= 1e-13
    with pytest.raises(IntervalDomainError):
        f(1.001)
    with pytest.raises(IntervalDomainError):
        f(np.array([0.5, -0.2]))
    # evaluation slack admits endpoint roundoff
    f(1.0 + 1e-13)
    f(-1e-13)


def test_projection_reproduces_polynomials():
    rng = np.random.default_rng(11)
    for deg in (0, 1, 5, SMALL.D):
        coeffs = rng.uniform(-1.0, 1.0, deg + 1)
        f = fn_from_poly(coeffs, SMALL)
        pts = rng.uniform(0.0, 1.0, 40)
        assert np.max(np.abs(f(pts) - poly_vals(coeffs, pts))) <= 1e-12


@pytest.mark.parametrize("k", [1, 2, 3, 5, 9])
def test_derivative_of_monomial(k):
    # d/ds s^k = k s^(k-1), exactly representable
    f = fn_from_poly([0.0] * k + [1.0], SMALL)
    g = f.derivative(1)
    pts = np.linspace(0.0, 1.0, 23)
    want = k * pts ** (k - 1)
    assert np.max(np.abs(g(pts) - want)) <= 1e-11


def test_higher_derivatives_match_analytic():
    # f = s^4: f'' = 12 s^2, f''' = 24 s, f'''' = 24
    f = fn_from_poly([0.0, 0.0, 0.0, 0.0, 1.0], SMALL)
    pts = np.linspace(0.0, 1.0, 9)
    assert np.max(np.abs(f.derivative(2)(pts) - 12 * pts**2)) <= 1e-10
    assert np.max(np.abs(f.derivative(3)(pts) - 24 * pts)) <= 1e-10
    assert np.max(np.abs(f.derivative(4)(pts) - 24.0)) <= 1e-10


def test_derivative_past_degree_vanishes():
    f = fn_from_poly([1.0, 1.0, 1.0], SMALL)
    g = f.derivative(3)
    assert np.max(np.abs(g.node_values())) == 0.0


def test_sup_abs_is_node_max():
    rng = np.random.default_rng(3)
    f = SmoothFn.from_coeffs(rng.uniform(-1, 1, SMALL.D + 1) * 0.5 ** np.arange(SMALL.D + 1), SMALL)
    dense = np.linspace(0.0, 1.0, 10 * SMALL.M)
    for i in range(SMALL.N + 1):
        got = f.sup_abs(i)
        # contract: the max of |f^(i)| over the grid nodes
        assert got == float(np.max(np.abs(f.derivative(i).node_values())))
        # and for a resolved function that tracks the true sup closely
        truth = float(np.max(np.abs(f.derivative(i)(dense))))
        assert abs(got - truth) <= 1e-2 * max(1.0, truth)


def test_sup_abs_order_range():
    f = SmoothFn.const(1.0, SMALL)
    with pytest.raises(OrderRangeError):
        f.sup_abs(SMALL.N + 1)


def test_vector_space_operations():
    a = fn_from_poly([1.0, 2.0], SMALL)
    b = fn_from_poly([0.5, -1.0, 0.25], SMALL)
    pts = np.linspace(0, 1, 11)
    assert np.max(np.abs((a + b)(pts) - (a(pts) + b(pts)))) <= 1e-14
    assert np.max(np.abs((a - b)(pts) - (a(pts) - b(pts)))) <= 1e-14
    assert np.max(np.abs((-a)(pts) + a(pts))) == 0.0
    assert np.max(np.abs((3.0 * a)(pts) - 3.0 * a(pts))) <= 1e-14
    c = lincomb(2.0, a, -1.0, b)
    assert np.max(np.abs(c(pts) - (2 * a(pts) - b(pts)))) <= 1e-14


def test_lincomb_config_mismatch():
    a = SmoothFn.const(1.0, SMALL)
    b = SmoothFn.const(1.0, FULL)
    with pytest.raises(ConfigMismatchError):
        lincomb(1.0, a, 1.0, b)


def test_text_round_trip_bitwise():
    rng = np.random.default_rng(7)
    f = SmoothFn.from_coeffs(rng.uniform(-1, 1, SMALL.D + 1), SMALL)
    g = from_text(f.to_text(), SMALL)
    assert np.array_equal(f.coeffs, g.coeffs)


def test_text_header_and_body_validation():
    f = SmoothFn.const(1.0, SMALL)
    text = f.to_text()
    assert text.splitlines()[0].startswith("D=")
    with pytest.raises(DataError):
        from_text("bogus\n1.0", SMALL)
    with pytest.raises(DataError):
        from_text("D=99\n" + "\n".join(["0.0"] * 100), SMALL)
    lines = text.splitlines()
    lines[1] = "not-a-number"
    with pytest.raises(DataError):
        from_text("\n".join(lines), SMALL)


def test_projection_warns_on_unresolved_input():
    cfg = GridConfig(D=8, M=65, N=4)
    with pytest.warns(AliasingWarning):
        project(np.exp(5.0 * cfg.nodes), cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("error", AliasingWarning)
        project(poly_vals([1.0, 1.0, 1.0], cfg.nodes), cfg)
