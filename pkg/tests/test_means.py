import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvot.errors import InvalidArgument
from fvot.isotropy import center_of_mass_weights
from fvot.means import (
    MeanFamily,
    MeanSpec,
    WeightFunction,
    check_admissible,
    compatibility_check,
    eval_mean,
    mean_partials,
    weight_of,
)
from fvot.mesh import build_periodic_1d, build_rectangular

KINDS = ["arith", "geom", "harm"]
SPECS = [MeanSpec(k, lam) for k in KINDS for lam in (0.0, 0.2, 0.5, 0.9, 1.0)] + [MeanSpec("log")]
INTERIOR = [s for s in SPECS if 0 < s.lam < 1]

pos = st.floats(1e-3, 1e3)


# ---- closed forms -------------------------------------------------------------

@pytest.mark.parametrize("spec, a, b, want", [
    (MeanSpec("arith"), 2, 4, 3.0),
    (MeanSpec("geom"), 1, 4, 2.0),
    (MeanSpec("log"), 1, math.e, math.e - 1),
    (MeanSpec("harm"), 1, 3, 1.5),
])
def test_closed_forms(spec, a, b, want):
    assert eval_mean(spec, a, b) == pytest.approx(want, rel=1e-14)


def test_logarithmic_matches_integral_definition():
    a, b = 0.3, 7.0
    p = np.linspace(0, 1, 200_001)
    integrand = a ** (1 - p) * b**p
    trapezoid = np.sum((integrand[1:] + integrand[:-1]) / 2) / (len(p) - 1)
    assert eval_mean(MeanSpec("log"), a, b) == pytest.approx(trapezoid, rel=1e-9)


def test_logarithmic_near_diagonal_is_smooth():
    a = 1.0 + np.array([0.0, 1e-12, 1e-8, 1e-4])
    got = eval_mean(MeanSpec("log"), a, 1.0)
    assert np.allclose(got, (a + 1) / 2, rtol=1e-8)


@pytest.mark.parametrize("spec, want", [
    (MeanSpec("geom", 0.3), 0.3),
    (MeanSpec("arith", 0.25), 0.25),
    (MeanSpec("arith"), 0.5),
    (MeanSpec("geom"), 0.5),
    (MeanSpec("harm"), 0.5),
    (MeanSpec("log"), 0.5),
])
def test_weight_of(spec, want):
    assert weight_of(spec) == pytest.approx(want, abs=1e-15)


def test_weight_of_custom_uses_finite_difference():
    spec = MeanSpec.custom(lambda a, b: np.sqrt(a * b), validate=False)
    assert weight_of(spec) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("bad", [(-1.0, 1.0), (1.0, float("nan"))])
def test_rejects_negative_and_nan(bad):
    with pytest.raises(InvalidArgument):
        eval_mean(MeanSpec("arith"), *bad)


@pytest.mark.parametrize("kwargs", [dict(kind="max"), dict(kind="arith", lam=1.5), dict(kind="log", lam=0.3)])
def test_spec_validation(kwargs):
    with pytest.raises(InvalidArgument):
        MeanSpec(**kwargs)


@pytest.mark.parametrize("text, kind, lam", [
    ("arith:0.25", "arithmetic", 0.25), ("geom:0.3", "geometric", 0.3), ("harm", "harmonic", 0.5), ("log", "logarithmic", 0.5),
])
def test_descriptor_parse(text, kind, lam):
    spec = MeanSpec.parse(text)
    assert (spec.kind, spec.lam) == (kind, lam)
    assert MeanSpec.parse(spec.descriptor) == spec


@pytest.mark.parametrize("text", ["mid", "arith:x", "arith:2"])
def test_descriptor_parse_errors(text):
    with pytest.raises(InvalidArgument):
        MeanSpec.parse(text)


# ---- boundary extension ----------------------------------------------------------

@pytest.mark.parametrize("spec", INTERIOR, ids=str)
def test_zero_extension(spec):
    a = 2.5
    want = spec.lam * a if spec.kind == "arithmetic" else 0.0
    assert eval_mean(spec, a, 0.0) == pytest.approx(want, abs=1e-15)
    b = np.geomspace(1e-2, 1e-200, 12)
    naive = {
        "arithmetic": spec.lam * a + (1 - spec.lam) * b,
        "geometric": a**spec.lam * b ** (1 - spec.lam),
        "harmonic": 1 / (spec.lam / a + (1 - spec.lam) / b),
        "logarithmic": (a - b) / (np.log(a) - np.log(b)),
    }[spec.kind]
    near = eval_mean(spec, a, b)
    assert np.allclose(near, naive, rtol=1e-12)
    assert np.all(np.diff(near - want) <= 0)


# ---- admissibility ----------------------------------------------------------------

@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_catalogue_is_admissible(spec):
    report = check_admissible(spec, sample_count=2000)
    assert report.passed, report.failures()


def test_max_is_not_concave():
    report = check_admissible(lambda a, b: np.maximum(a, b))
    assert not report.passed
    assert "concavity" in report.failures()


def test_custom_rejects_inadmissible():
    with pytest.raises(InvalidArgument):
        MeanSpec.custom(lambda a, b: np.maximum(a, b))


def test_custom_accepts_admissible():
    spec = MeanSpec.custom(lambda a, b: (np.sqrt(a) + np.sqrt(b)) ** 2 / 4)
    assert eval_mean(spec, 1.0, 1.0) == pytest.approx(1.0)


def test_check_admissible_needs_samples():
    with pytest.raises(InvalidArgument):
        check_admissible(MeanSpec("arith"), sample_count=10)


@pytest.mark.parametrize("spec", INTERIOR, ids=str)
@given(a=pos, b=pos, c=st.floats(1e-3, 1e3))
@settings(max_examples=40, deadline=None)
def test_homogeneity_and_lower_bound(spec, a, b, c):
    t = eval_mean(spec, a, b)
    assert eval_mean(spec, c * a, c * b) == pytest.approx(c * t, rel=1e-12)
    assert t >= min(a, b) * (1 - 1e-14)
    assert t <= max(a, b) * (1 + 1e-14)


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_partials_sum_to_one(spec):
    h = 1e-6
    d1 = (eval_mean(spec, 1 + h, 1.0) - eval_mean(spec, 1 - h, 1.0)) / (2 * h)
    d2 = (eval_mean(spec, 1.0, 1 + h) - eval_mean(spec, 1.0, 1 - h)) / (2 * h)
    assert d1 + d2 == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("spec", INTERIOR, ids=str)
def test_analytic_partials_match_finite_differences(spec):
    rng = np.random.default_rng(1)
    a, b = 10 ** rng.uniform(-1, 1, 20), 10 ** rng.uniform(-1, 1, 20)
    _, d1, d2, d11, d12, d22 = mean_partials(spec, a, b)
    h = 1e-5
    fd1 = (eval_mean(spec, a + h, b) - eval_mean(spec, a - h, b)) / (2 * h)
    fd2 = (eval_mean(spec, a, b + h) - eval_mean(spec, a, b - h)) / (2 * h)
    assert np.allclose(d1, fd1, atol=1e-8) and np.allclose(d2, fd2, atol=1e-8)
    _, p1, _, _, _, _ = mean_partials(spec, a + h, b)
    _, m1, _, _, _, _ = mean_partials(spec, a - h, b)
    assert np.allclose(d11, (p1 - m1) / (2 * h), atol=1e-6)
    # Euler relations from 1-homogeneity
    assert np.allclose(a * d11 + b * d12, 0, atol=1e-10)
    assert np.allclose(a * d12 + b * d22, 0, atol=1e-10)


@pytest.mark.parametrize("spec", INTERIOR, ids=str)
def test_monotone_in_each_argument(spec):
    grid = np.geomspace(1e-3, 1e3, 60)
    a, b = np.meshgrid(grid, grid)
    t = eval_mean(spec, a, b)
    assert np.all(np.diff(t, axis=0) >= -1e-12)
    assert np.all(np.diff(t, axis=1) >= -1e-12)


@pytest.mark.parametrize("spec", INTERIOR, ids=str)
def test_compatible_oscillation_is_critical(spec):
    lam = weight_of(spec)
    h = 1e-5
    for a in (0.1, 1.0, 7.0):
        f = lambda eta: eval_mean(spec, a + (1 - lam) * eta, a - lam * eta)  # noqa: E731
        assert abs((f(h) - f(-h)) / (2 * h)) <= 1e-8


def test_reversed_swaps_arguments():
    spec = MeanSpec("geom", 0.3)
    assert eval_mean(spec.reversed(), 2.0, 5.0) == pytest.approx(eval_mean(spec, 5.0, 2.0))


# ---- weight functions and families ---------------------------------------------------

def test_weight_function_orientation():
    mesh = build_periodic_1d(0.25, 2)
    w = WeightFunction(np.linspace(0.1, 0.4, mesh.n_edges))
    for (k, l), lam in zip(mesh.edges, w.lam):
        assert w.ordered(mesh, k, l) + w.ordered(mesh, l, k) == pytest.approx(1.0, abs=1e-12)
        assert w.ordered(mesh, k, l) == lam
    assert WeightFunction.from_json(mesh, w.to_json(mesh)).lam.tolist() == w.lam.tolist()


def test_weight_function_json_other_orientation():
    mesh = build_periodic_1d(0.25, 1)
    items = [{"edge": [1, 0], "lambda": 0.2}]
    assert WeightFunction.from_json(mesh, items).lam[0] == pytest.approx(0.8)


def test_weight_function_json_missing_edge():
    mesh = build_periodic_1d(0.25, 2)
    with pytest.raises(InvalidArgument):
        WeightFunction.from_json(mesh, [{"edge": [0, 1], "lambda": 0.5}])


def test_weight_function_range():
    with pytest.raises(InvalidArgument):
        WeightFunction([0.5, 1.2])


def test_family_symmetry_by_storage():
    mesh = build_rectangular(3, 1)
    fam = MeanFamily([MeanSpec("geom", 0.3), MeanSpec("harm", 0.7)])
    a, b = np.array([1.0, 2.0]), np.array([4.0, 0.5])
    forward = fam.evaluate(a, b)
    for e, s in enumerate(fam.specs):
        assert forward[e] == eval_mean(s.reversed(), b[e], a[e])
    assert len(fam) == mesh.n_edges


def test_log_family_compatible_with_half():
    mesh = build_periodic_1d(0.25, 4)
    fam = MeanFamily.uniform(mesh, "log")
    assert compatibility_check(fam, WeightFunction.constant(mesh, 0.5)).compatible


def test_weighted_family_compatible_with_own_weights():
    mesh = build_periodic_1d(0.1, 4)
    w = center_of_mass_weights(mesh).weights
    for kind in ("geom", "arith", "harm"):
        assert compatibility_check(MeanFamily.from_weights(kind, w), w).compatible


def test_symmetric_arith_incompatible_with_r():
    mesh = build_periodic_1d(0.1, 4)
    w = center_of_mass_weights(mesh).weights
    report = compatibility_check(MeanFamily.uniform(mesh, "arith"), w)
    assert not report.compatible
    assert report.weight_errors.max() == pytest.approx(0.4)


def test_compatibility_edge_mismatch():
    mesh = build_periodic_1d(0.25, 2)
    with pytest.raises(InvalidArgument):
        compatibility_check(MeanFamily.uniform(mesh, "log"), WeightFunction([0.5]))


def test_log_family_requires_half():
    with pytest.raises(InvalidArgument):
        MeanFamily.from_weights("log", WeightFunction([0.3]))
