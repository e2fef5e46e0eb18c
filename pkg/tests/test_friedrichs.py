import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beliaev.dispersion import ModelParams, dispersion
from beliaev.errors import DomainError, PoleError, UnderResolvedError
from beliaev.friedrichs import (FriedrichsModel, arrowhead_spectrum, build_model, continuum_rate,
                                feshbach_sigma, fgr_decay_rate, four_qp_floor_check,
                                lattice_points, level_spacing, model_spectrum,
                                nearest_lattice_index, resolvent_head, resolvent_head_dense,
                                riemann_convergence, select_fgr_index, survival_amplitude)
from beliaev.self_energy import sigma_cutoff
from beliaev.vertex import h

P = ModelParams(1.0, 1.0)


def _random_model(seed, n=None, repeats=False):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 200))
    d = rng.uniform(0.0, 4.0, n)
    if repeats:
        d = np.round(d, 1)
    return FriedrichsModel.from_arrays(rng.uniform(0.0, 3.0), d, rng.normal(0.0, 0.3, n))


def test_from_arrays_validation():
    with pytest.raises(DomainError):
        FriedrichsModel.from_arrays(1.0, [1.0, 2.0], [0.1])


def test_dense_layout():
    m = FriedrichsModel.from_arrays(1.0, [2.0, 3.0], [0.1, 0.2])
    H = m.dense()
    assert H.shape == (3, 3)
    assert np.array_equal(H, H.T)
    assert H[0, 0] == 1.0 and H[0, 2] == 0.2 and H[2, 2] == 3.0


@pytest.mark.parametrize("seed", range(20))
def test_feshbach_identity(seed):
    m = _random_model(seed)
    rng = np.random.default_rng(100 + seed)
    for _ in range(5):
        z = complex(rng.uniform(-1, 5), rng.choice([-1, 1]) * rng.uniform(1e-3, 1.0))
        dense = resolvent_head_dense(m, z)
        assert abs(resolvent_head(m, z) - dense) <= 1e-12 * abs(dense)


def test_feshbach_pole():
    m = FriedrichsModel.from_arrays(1.0, [2.0, 3.0], [0.1, 0.2])
    with pytest.raises(PoleError):
        feshbach_sigma(m, 2.0)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.booleans())
def test_arrowhead_matches_eigh(seed, repeats):
    m = _random_model(seed, repeats=repeats)
    sp = model_spectrum(m)
    w, v = np.linalg.eigh(m.dense())
    assert sp.eigenvalues == pytest.approx(w, abs=1e-12 * max(1.0, np.abs(w).max()))
    assert math.fsum(sp.head_weights) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_interlacing(seed):
    m = _random_model(seed)
    ev = model_spectrum(m).eigenvalues
    d = np.sort(m.diagonal)
    tol = 1e-12
    assert np.all(ev[:-1] <= d + tol) and np.all(d <= ev[1:] + tol)


def test_arrowhead_zero_coupling():
    sp = arrowhead_spectrum(1.5, [1.0, 2.0], [0.0, 0.0])
    assert list(sp.eigenvalues) == [1.0, 1.5, 2.0]
    assert list(sp.head_weights) == [0.0, 1.0, 0.0]


@pytest.mark.parametrize("seed", range(5))
def test_survival_amplitude_unitarity(seed):
    m = _random_model(seed, n=150)
    t = np.linspace(0.0, 50.0, 301)
    a = survival_amplitude(m, t)
    w, v = np.linalg.eigh(m.dense())
    ref = (np.exp(-1j * np.outer(t, w)) * v[0] ** 2).sum(axis=1)
    assert np.max(np.abs(np.abs(a) - np.abs(ref))) <= 1e-10
    assert abs(a[0] - 1.0) <= 1e-12


def test_lattice_points_exclusions():
    n, p, l = lattice_points((1, 0, 0), 10.0, 3.0)
    assert not np.any(np.all(n == 0, axis=1))
    assert not np.any(np.all(n == (1, 0, 0), axis=1))
    assert np.all(p + l < 3.0)
    # the ordered-pair basis holds both p and k - p
    as_set = {tuple(x) for x in n}
    assert all((1 - a, -b, -c) in as_set for a, b, c in as_set)


def test_build_model():
    m = build_model(P, (2, 0, 0), 20.0, 3.0, 0.1)
    k = 2 * math.pi * 2 / 20.0
    assert m.head == pytest.approx(dispersion(P, k))
    i = 0
    n = m.lattice[i]
    p = 2 * math.pi / 20.0 * np.linalg.norm(n)
    l = 2 * math.pi / 20.0 * np.linalg.norm(np.array([2, 0, 0]) - n)
    assert m.row[i] == pytest.approx(0.1 * 20.0**-1.5 * h(P, k, p, l), rel=1e-13)
    assert m.diagonal[i] == pytest.approx(dispersion(P, p) + dispersion(P, l), rel=1e-14)
    with pytest.raises(DomainError):
        build_model(P, (0, 0, 0), 20.0, 3.0, 0.1)
    with pytest.raises(DomainError):
        build_model(P, (20, 0, 0), 20.0, 3.0, 0.1)


def test_coupling_rescale_is_quadratic_in_sigma():
    m = build_model(P, (3, 0, 0), 15.0, 3.0, 0.1)
    z = complex(m.head, 0.05)
    s1 = feshbach_sigma(m, z)
    s2 = feshbach_sigma(m.with_coupling(0.2), z)
    assert s2 == pytest.approx(4 * s1, rel=1e-14)


def test_nearest_lattice_index():
    assert nearest_lattice_index(0.4, 30.0) == (2, 0, 0)
    assert nearest_lattice_index(1e-6, 30.0) == (1, 0, 0)


def test_riemann_sum_approaches_continuum():
    rows = riemann_convergence(P, 0.6, 3.0, complex(1.0, 0.3), [8.0, 12.0, 16.0])
    gaps = [r[4] for r in rows]
    assert gaps[-1] < gaps[0]
    disc, cont = rows[-1][2], rows[-1][3]
    assert abs(disc - cont) < 0.05 * abs(cont)


def test_continuum_rate_matches_on_shell():
    m = build_model(P, (5, 0, 0), 30.0, 3.0, 0.1)
    k = float(np.linalg.norm(m.k_vector))
    from beliaev.self_energy import im_sigma_on_shell
    assert continuum_rate(P, m) == pytest.approx(2 * 0.01 * abs(im_sigma_on_shell(P, k, 3.0)))


def test_level_spacing_positive():
    m = build_model(P, (5, 0, 0), 30.0, 3.0, 0.1)
    assert 0.0 < level_spacing(m) < 0.1


def test_feshbach_eps_rate():
    m = build_model(P, (8, 0, 0), 30.0, 3.0, 0.1)
    r = fgr_decay_rate(m, P, "feshbach_eps")
    assert r.rate == pytest.approx(-2 * r.shift_im)
    assert r.rate > 0
    with pytest.raises(DomainError):
        fgr_decay_rate(m, P, "feshbach_eps", c=10.0)


def test_decay_fit_refuses_under_resolved_window():
    m = build_model(P, (8, 0, 0), 30.0, 3.0, 0.1)
    with pytest.raises(UnderResolvedError):
        fgr_decay_rate(m, P, "decay_fit")
    r = fgr_decay_rate(m, P, "decay_fit", min_decay=0.0)
    assert r.shift_im == pytest.approx(-0.5 * r.rate)
    t1, t2 = r.diagnostics["window"]
    assert t1 == pytest.approx(5.0 / r.diagnostics["bandwidth"])
    assert t2 <= 0.5 * r.diagnostics["t_recurrence"] + 1e-9


def test_decay_fit_on_a_dense_synthetic_band():
    # a flat band of 4000 levels with constant coupling is the textbook
    # Golden Rule setting: Gamma = 2 pi g^2 / spacing
    n = 4000
    d = np.linspace(-2.0, 2.0, n)
    spacing = d[1] - d[0]
    g = 0.02 * math.sqrt(spacing)
    m = FriedrichsModel.from_arrays(0.0, d, np.full(n, g))
    r = fgr_decay_rate(m, None, "decay_fit")
    assert r.rate == pytest.approx(2 * math.pi * g * g / spacing, rel=0.05)


def test_uncoupled_model():
    m = build_model(P, (3, 0, 0), 15.0, 3.0, 0.0)
    a = survival_amplitude(m, np.linspace(0, 10, 5))
    assert np.allclose(np.abs(a) ** 2, 1.0, atol=1e-15)
    assert fgr_decay_rate(m, P).rate == 0.0


def test_select_fgr_index():
    m = select_fgr_index(P, 30.0, 3.0, 0.1)
    assert m.k_index == (10, 0, 0)
    width = np.linalg.norm(m.row)
    assert np.sum(m.diagonal <= m.head + width) >= 200
    prev = build_model(P, (m.k_index[0] - 1, 0, 0), 30.0, 3.0, 0.1)
    assert np.sum(prev.diagonal <= prev.head + np.linalg.norm(prev.row)) < 200


def test_four_qp_floor():
    ok, excess = four_qp_floor_check(P, 0.5)
    assert ok and excess > 0
    ok, excess = four_qp_floor_check(P, 0.5, scale=1e-8)
    assert ok and excess < 1e-7


def test_riemann_ladder_example():
    # k is moved onto each lattice; the gap to the continuum falls with L
    rows = riemann_convergence(P, 0.5, 3.0, 0.2j, [10.0, 20.0, 40.0])
    gaps = [r[4] for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[0] >= 4 * gaps[2]


def test_rabi_two_level():
    g = 0.05
    m = FriedrichsModel.from_arrays(1.0, [1.0], [g])
    t = np.linspace(0.0, 100.0, 41)
    a = survival_amplitude(m, t)
    assert np.max(np.abs(np.abs(a) ** 2 - np.cos(g * t) ** 2)) <= 1e-13


def test_uncoupled_resolvent():
    m = build_model(P, (3, 0, 0), 15.0, 3.0, 0.0)
    z = complex(m.head, 0.1)
    assert resolvent_head(m, z) == pytest.approx(10j, rel=1e-14)
