import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvot.continuum import (
    Atoms,
    PiecewiseConstantDensity,
    PiecewiseLinearDensity,
    SignedFunction1D,
    dual_action_1d,
    make_pdelta,
    parse_density,
    w2_1d,
    w2_geodesic_1d,
    w2_lp_oracle,
)
from fvot.errors import InvalidArgument

CATALOG = [
    ("affine", 0.0), ("affine", 1.5), ("affine", -1.0),
    ("sine", 0.5, 1), ("sine", 0.3, 2), ("sine", 0.9, 3),
    ("tent", 0.5, 0.2, 0.5), ("tent", 0.2, 0.2, 0.9), ("tent", 0.9, 0.1, 0.3),
]
RAMP = PiecewiseLinearDensity([0.0, 1.0], [0.0, 2.0])
UNIFORM = make_pdelta("affine", 0.0)


# ---- W2 -------------------------------------------------------------------------

def test_w2_identical_is_zero():
    mu = make_pdelta("sine", 0.4, 2)
    assert w2_1d(mu, mu) == 0.0


def test_w2_atoms():
    assert w2_1d([(0.2, 1.0)], [(0.9, 1.0)]) == pytest.approx(0.7, abs=1e-14)


def test_w2_ramp_to_uniform():
    assert w2_1d(RAMP, UNIFORM) == pytest.approx(1 / math.sqrt(30), abs=1e-10)


def test_w2_rejects_unnormalised_atoms():
    with pytest.raises(InvalidArgument):
        w2_1d([(0.0, 0.5)], [(1.0, 1.0)])


def test_w2_translation():
    pc0 = PiecewiseConstantDensity([0.0, 0.5], [2.0])
    pc1 = PiecewiseConstantDensity([0.3, 0.8], [2.0])
    assert w2_1d(pc0, pc1) == pytest.approx(0.3, abs=1e-12)


@pytest.mark.parametrize("pair", [(0, 3), (4, 7), (1, 8), (5, 6)])
def test_w2_symmetric_and_triangle(pair):
    a, b = (make_pdelta(*CATALOG[i]) for i in pair)
    c = make_pdelta(*CATALOG[2])
    ab = w2_1d(a, b)
    assert w2_1d(b, a) == pytest.approx(ab, abs=1e-12)
    assert ab <= w2_1d(a, c) + w2_1d(c, b) + 1e-12


# ---- geodesics -----------------------------------------------------------------------

@pytest.mark.parametrize("pair", [(1, 3), (6, 4)])
def test_geodesic_endpoints(pair):
    mu0, mu1 = (make_pdelta(*CATALOG[i]) for i in pair)
    x = np.linspace(0.01, 0.99, 37)
    assert np.allclose(w2_geodesic_1d(mu0, mu1, 0.0).pdf(x), mu0.pdf(x), atol=1e-8)
    assert np.allclose(w2_geodesic_1d(mu0, mu1, 1.0).pdf(x), mu1.pdf(x), atol=1e-8)


def test_geodesic_between_uniforms_is_uniform():
    for t in (0.2, 0.5, 0.9):
        assert np.allclose(w2_geodesic_1d(UNIFORM, UNIFORM, t).pdf(np.linspace(0.05, 0.95, 11)), 1.0)


def test_geodesic_change_of_variables():
    mu0, mu1 = make_pdelta("affine", 1.5), UNIFORM
    t = 0.5
    ut = w2_geodesic_1d(mu0, mu1, t)
    x = np.linspace(0.02, 0.98, 25)
    T = mu1.quantile(mu0.cdf(x))
    dT = mu0.pdf(x) / mu1.pdf(T)
    Tt, dTt = (1 - t) * x + t * T, (1 - t) + t * dT
    assert np.allclose(ut.pdf(Tt) * dTt, mu0.pdf(x), atol=1e-8)


def test_geodesic_needs_positive_density():
    with pytest.raises(InvalidArgument):
        w2_geodesic_1d(RAMP, UNIFORM, 0.5)
    with pytest.raises(InvalidArgument):
        w2_geodesic_1d(UNIFORM, UNIFORM, 1.5)


@given(s=st.floats(0, 1), t=st.floats(0, 1))
@settings(max_examples=15, deadline=None)
def test_geodesic_constant_speed(s, t):
    mu0, mu1 = make_pdelta("sine", 0.5, 1), make_pdelta("tent", 0.3, 0.2, 0.6)
    total = w2_1d(mu0, mu1)
    a, b = w2_geodesic_1d(mu0, mu1, s), w2_geodesic_1d(mu0, mu1, t)
    assert w2_1d(a, b) == pytest.approx(abs(t - s) * total, abs=1e-8)


def test_geodesic_on_grid_normalised():
    g = w2_geodesic_1d(make_pdelta("sine", 0.5, 1), make_pdelta("affine", 1.0), 0.4).on_grid()
    assert g.cdf(g.b) == pytest.approx(1.0, abs=1e-12)


# ---- dual action ---------------------------------------------------------------------------

def test_dual_action_zero_source():
    zero = SignedFunction1D(lambda x: 0 * x, lambda x: 0 * x)
    assert dual_action_1d(make_pdelta("sine", 0.5, 1), zero) == 0.0


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_dual_action_uniform_cosine(c):
    w = lambda x: c * np.pi * np.cos(np.pi * x)  # noqa: E731
    assert dual_action_1d(UNIFORM, w) == pytest.approx(c * c / 2, rel=1e-10)


def test_dual_action_uses_antiderivative_when_given():
    mu = make_pdelta("tent", 0.4, 0.3, 0.5)
    f = lambda x: np.cos(2 * np.pi * x)  # noqa: E731
    a = dual_action_1d(mu, f)
    b = dual_action_1d(mu, SignedFunction1D(f, lambda x: np.sin(2 * np.pi * x) / (2 * np.pi)))
    assert a == pytest.approx(b, rel=1e-10)


def test_dual_action_errors():
    with pytest.raises(InvalidArgument):
        dual_action_1d(RAMP, lambda x: np.cos(2 * np.pi * x))
    with pytest.raises(InvalidArgument):
        dual_action_1d(UNIFORM, lambda x: np.ones_like(x))


@pytest.mark.parametrize("pair", [(3, 1), (6, 4), (0, 8)])
def test_benamou_brenier(pair):
    mu0, mu1 = (make_pdelta(*CATALOG[i]) for i in pair)
    M = 128
    dt = 1.0 / M
    t = np.linspace(0, 1, M + 1)
    path = [w2_geodesic_1d(mu0, mu1, s).on_grid(801) for s in t]
    mids = [w2_geodesic_1d(mu0, mu1, s).on_grid(801) for s in (t[:-1] + t[1:]) / 2]
    energy = sum(
        dt * dual_action_1d(mids[i], SignedFunction1D.difference(path[i + 1], path[i], 1 / dt))
        for i in range(M)
    )
    exact = w2_1d(mu0, mu1) ** 2
    assert abs(energy - exact) <= 1e-3 * exact


# ---- LP oracle ---------------------------------------------------------------------------------

def test_lp_identical_atoms():
    atoms = [((0.1, 0.2), 0.3), ((0.5, 0.9), 0.7)]
    assert w2_lp_oracle(atoms, atoms) == pytest.approx(0.0, abs=1e-9)


def test_lp_unit_distance():
    assert w2_lp_oracle([((0.0, 0.0), 1.0)], [((1.0, 0.0), 1.0)]) == pytest.approx(1.0, abs=1e-9)


def test_lp_matches_quantile_coupling():
    rng = np.random.default_rng(4)
    for _ in range(5):
        x0, x1 = rng.random(7), rng.random(9)
        w0, w1 = rng.random(7), rng.random(9)
        a0 = list(zip(x0, w0 / w0.sum()))
        a1 = list(zip(x1, w1 / w1.sum()))
        assert w2_lp_oracle(a0, a1) == pytest.approx(w2_1d(a0, a1), abs=1e-9)


def test_lp_matches_w2_on_50_atom_discretisations():
    mu0, mu1 = make_pdelta("sine", 0.5, 1), make_pdelta("affine", 1.2)
    p = (np.arange(50) + 0.5) / 50
    a0 = [(x, 1 / 50) for x in mu0.quantile(p)]
    a1 = [(x, 1 / 50) for x in mu1.quantile(p)]
    assert w2_lp_oracle(a0, a1) == pytest.approx(w2_1d(Atoms(*zip(*a0)), Atoms(*zip(*a1))), abs=1e-6)


def test_lp_size_limit():
    atoms = [(i / 300, 1 / 300) for i in range(300)]
    with pytest.raises(InvalidArgument):
        w2_lp_oracle(atoms, [(0.5, 1.0)])


# ---- catalogue ------------------------------------------------------------------------------------

def test_affine_zero_is_uniform():
    mu = make_pdelta("affine", 0.0)
    assert mu.delta == 1.0
    assert np.allclose(mu.pdf(np.linspace(0, 1, 7)), 1.0)


def test_sine_constants():
    mu = make_pdelta("sine", 0.5, 1)
    assert mu.delta == 0.5
    assert mu.lipschitz == pytest.approx(math.pi)


@pytest.mark.parametrize("desc", CATALOG)
def test_catalogue_normalised_and_bounded(desc):
    mu = make_pdelta(*desc)
    x = np.linspace(0, 1, 20_001)
    u = mu.pdf(x)
    assert mu.cdf(1.0) - mu.cdf(0.0) == pytest.approx(1.0, abs=1e-12)
    assert np.sum((u[1:] + u[:-1]) / 2) / 20_000 == pytest.approx(1.0, abs=1e-7)
    assert u.min() >= mu.delta - 1e-12
    assert np.max(np.abs(np.diff(u))) / (x[1] - x[0]) <= mu.lipschitz * (1 + 1e-9) + 1e-9


@pytest.mark.parametrize("desc", CATALOG)
def test_quantile_inverts_cdf(desc):
    mu = make_pdelta(*desc)
    x = np.linspace(0, 1, 101)
    assert np.allclose(mu.quantile(mu.cdf(x)), x, atol=1e-10)


@pytest.mark.parametrize("args", [("affine", 2.0), ("sine", 1.0, 1), ("sine", 0.5, 1.5), ("tent", 0.05, 0.1, 0.5), ("blob", 1.0), ("affine",)])
def test_catalogue_rejects_bad_parameters(args):
    with pytest.raises(InvalidArgument):
        make_pdelta(*args)


def test_parse_density():
    assert parse_density("sine:0.5,1").label == "sine:0.5,1"
    with pytest.raises(InvalidArgument):
        parse_density("sine:a,b")


def test_pdelta_membership():
    mu = make_pdelta("sine", 0.5, 1)
    assert mu.in_pdelta(0.3) and not mu.in_pdelta(0.6)


def test_piecewise_linear_rejects_unnormalised():
    with pytest.raises(InvalidArgument):
        PiecewiseLinearDensity([0.0, 1.0], [1.0, 2.0])
