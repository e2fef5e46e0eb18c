import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from beliaev.errors import ConvergenceError
from beliaev.quadrature import (GAUSS, KRONROD, NODES, bisect_monotone, quad, quad2d)


def test_rule_weights():
    assert math.fsum(KRONROD) == pytest.approx(2.0, abs=1e-15)
    assert math.fsum(GAUSS) == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(NODES) > 0)


@pytest.mark.parametrize("degree", range(0, 23))
def test_kronrod_exact_to_degree_22(degree):
    exact = (1 - (-1) ** (degree + 1)) / (degree + 1)
    assert KRONROD @ NODES**degree == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("degree", range(0, 14))
def test_gauss_exact_to_degree_13(degree):
    exact = (1 - (-1) ** (degree + 1)) / (degree + 1)
    assert GAUSS @ NODES**degree == pytest.approx(exact, abs=1e-14)


def test_quad_smooth():
    r = quad(np.exp, 0.0, 1.0)
    assert r.value == pytest.approx(math.e - 1, rel=1e-14)
    assert r.converged


def test_quad_reversed_and_empty():
    assert quad(np.sin, 1.0, 0.0).value == pytest.approx(-(1 - math.cos(1.0)), rel=1e-13)
    assert quad(np.sin, 2.0, 2.0).value == 0.0


def test_quad_endpoint_singularity():
    r = quad(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, abs_tol=1e-10, rel_tol=1e-10)
    assert r.value == pytest.approx(2.0, abs=1e-8)


def test_quad_breakpoint_kink():
    r = quad(lambda x: np.abs(x - 0.3), 0.0, 1.0, points=[0.3])
    assert r.value == pytest.approx(0.5 * (0.09 + 0.49), abs=1e-14)
    assert r.cells == 2


def test_quad_complex():
    r = quad(lambda x: np.exp(1j * x), 0.0, math.pi)
    assert r.value == pytest.approx(2j, abs=1e-13)


def test_quad_failure_reports_partial_result():
    with pytest.raises(ConvergenceError) as info:
        quad(lambda x: np.sin(1.0 / x), 1e-12, 1.0, max_intervals=20)
    assert info.value.result is not None and not info.value.result.converged
    res = quad(lambda x: np.sin(1.0 / x), 1e-12, 1.0, max_intervals=20, raise_on_failure=False)
    assert not res.converged


@given(st.floats(0.1, 10.0), st.floats(-2.0, 2.0))
def test_quad_matches_scipy(a, c):
    f = lambda x: np.exp(-a * x * x) * np.cos(c * x)
    ref = integrate.quad(f, -3.0, 3.0, epsabs=1e-13, epsrel=1e-13)[0]
    assert quad(f, -3.0, 3.0).value == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_quad_thread_determinism():
    f = lambda x: np.log1p(x) * np.sin(30 * x)
    a = quad(f, 0.0, 3.0, threads=None)
    b = quad(f, 0.0, 3.0, threads=4)
    assert a.value == b.value


def test_quad2d_triangle_area():
    r = quad2d(lambda a, b: np.ones_like(a), 0.0, 1.0, lambda a: np.zeros_like(a), lambda a: a)
    assert r.value == pytest.approx(0.5, abs=1e-15)


def test_quad2d_matches_dblquad():
    f = lambda a, b: np.exp(-a * b) / (1.0 + a + b)
    r = quad2d(f, 0.0, 2.0, lambda a: 0.1 * a, lambda a: 1.0 + a * a)
    ref = integrate.dblquad(lambda b, a: f(a, b), 0.0, 2.0, lambda a: 0.1 * a,
                            lambda a: 1.0 + a * a, epsabs=1e-13, epsrel=1e-13)[0]
    assert r.value == pytest.approx(ref, rel=1e-9)


def test_quad2d_complex_and_threads():
    f = lambda a, b: 1.0 / (complex(0.3, 0.05) - a - b)
    lo = lambda a: np.zeros_like(a)
    hi = lambda a: np.ones_like(a)
    r1 = quad2d(f, 0.0, 1.0, lo, hi, abs_tol=1e-9, rel_tol=1e-9)
    r2 = quad2d(f, 0.0, 1.0, lo, hi, abs_tol=1e-9, rel_tol=1e-9, threads=3)
    assert r1.value == r2.value
    # closed form of int int 1/(z - a - b) over the unit square
    z = complex(0.3, 0.05)
    F = lambda w: w * np.log(w) - w
    exact = F(z) - 2 * F(z - 1) + F(z - 2)
    assert r1.value == pytest.approx(exact, rel=1e-8)


def test_bisect_monotone_vectorised():
    roots = bisect_monotone(lambda x: x**3 - np.array([1.0, 8.0, 27.0]), [0.0, 0.0, 0.0],
                            [5.0, 5.0, 5.0])
    assert roots == pytest.approx([1.0, 2.0, 3.0], rel=1e-14)
