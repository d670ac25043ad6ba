"""Scalar fields, adaptive quadrature, oscillations, and distribution tails."""

import math

import numpy as np
import pytest

import oracles
from gaussjn import kernels
from gaussjn.fields import (
    QuadratureError,
    QuadratureSpec,
    ScalarField,
    StepField,
    abs_power_field,
    corpus,
    corpus_by_id,
    corpus_manifest,
    gauss_average,
    growth_tail_bound,
    integral_gamma,
    l1_gamma_norm,
    lq_norm,
    make_random_step,
    oscillation,
    product_field,
    restrict_field,
    shift_field,
    step_average,
    step_lq_norm,
    step_oscillation,
    step_tail,
    step_weak_lp_norm,
    tail_measure,
    tail_profile,
    truncate,
    weak_lp_norm,
)
from gaussjn.geometry import Cube, gaussian_measure

P1 = Cube((0.0,), 2.0)
OFFSET = Cube((0.7,), 1.1)


def _rsq(d=1):
    return corpus_by_id(d)["radius_sq"]


def _sign(d=1):
    return corpus_by_id(d)["sign0"]


# ---------------------------------------------------------------------------
# spec and field plumbing
# ---------------------------------------------------------------------------


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(nodes_per_axis=1)
    with pytest.raises(ValueError):
        QuadratureSpec(refinement_levels=0)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)


def test_scalar_field_dimension_guard():
    f = ScalarField("flat", lambda p: p[:, 0] * 0.0, dim=2)
    with pytest.raises(ValueError):
        f(np.zeros((3, 1)))
    assert f(np.zeros((3, 2))).shape == (3,)


def test_scalar_field_breaks_sorted():
    f = ScalarField("s", lambda p: p[:, 0], breaks={0: (0.5, -0.5, 0.0)})
    assert f.breaks[0] == (-0.5, 0.0, 0.5)


def test_combinators_pointwise():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, size=(50, 1))
    f = _rsq()
    g = _sign()
    np.testing.assert_allclose(shift_field(f, 0.3)(pts), f(pts) - 0.3, rtol=1e-15)
    np.testing.assert_allclose(
        abs_power_field(f, 1.5)(pts), np.abs(f(pts)) ** 1.5, rtol=1e-15
    )
    np.testing.assert_allclose(product_field(f, g)(pts), f(pts) * g(pts), rtol=1e-15)
    r = restrict_field(f, P1)
    inside = P1.contains_points(pts)
    np.testing.assert_allclose(r(pts)[inside], f(pts)[inside], rtol=1e-15)
    assert np.all(r(pts)[~inside] == 0.0)


def test_truncate_clips_and_records_growth():
    f = _rsq()
    t = truncate(f, 0.5)
    pts = np.linspace(-2, 2, 41).reshape(-1, 1)
    np.testing.assert_allclose(t(pts), np.clip(f(pts), -0.5, 0.5), rtol=1e-15)
    assert t.growth == (0.5, 0.0)
    # level-set solver feeds the truncation hyperplanes into the break set
    assert any(abs(b - math.sqrt(0.5)) < 1e-12 for b in t.breaks.get(0, ()))
    with pytest.raises(ValueError):
        truncate(f, 0.0)


def test_corpus_well_formed():
    for d in (1, 2):
        fields = corpus(d)
        ids = [f.id for f in fields]
        assert len(ids) == len(set(ids))
        assert {"const_one", "coord0", "radius_sq", "sign0", "step0"} <= set(ids)
        byid = corpus_by_id(d)
        assert set(byid) == set(ids)
        manifest = corpus_manifest(d)
        assert [row["id"] for row in manifest] == ids
        pts = np.zeros((2, d))
        for f in fields:
            out = f(pts)
            assert out.shape == (2,)
            assert np.all(np.isfinite(out))


# ---------------------------------------------------------------------------
# averages against high-precision oracles
# ---------------------------------------------------------------------------


def test_average_of_constant_is_exact(spec):
    one = corpus_by_id(1)["const_one"]
    assert gauss_average(one, P1, spec) == 1.0
    assert gauss_average(one, OFFSET, spec) == 1.0
    assert oscillation(one, P1, 2.0, spec) == 0.0


def test_average_radius_sq_matches_antiderivative(spec):
    for cube in (P1, OFFSET, Cube((-1.3,), 0.4)):
        ref = oracles.t2_average_mp(cube.lo[0], cube.hi[0])
        got = gauss_average(_rsq(), cube, spec)
        assert got == pytest.approx(ref, abs=2e-12), cube


def test_average_radius_sq_2d(spec):
    # additivity of coordinates: E(x^2 + y^2) = E(x^2) + E(y^2) per box axis
    cube = Cube((0.5, -0.25), 1.5)
    ref = oracles.t2_average_mp(-0.25, 1.25) + oracles.t2_average_mp(-1.0, 0.5)
    got = gauss_average(_rsq(2), cube, spec)
    assert got == pytest.approx(ref, abs=5e-12)


def test_integral_gamma_consistent(spec):
    f = _rsq()
    got = integral_gamma(f, OFFSET, spec)
    ref = oracles.t2_integral_mp(OFFSET.lo[0], OFFSET.hi[0])
    assert got == pytest.approx(ref, abs=2e-12)


def test_average_smooth_transcendental(spec):
    f = ScalarField("cosx", lambda p: np.cos(p[:, 0]))
    ref = oracles.gauss_quad_mp(lambda t: mp_cos(t), -1.0, 1.0) / oracles.gauss1d_mp(
        -1.0, 1.0
    )
    got = gauss_average(f, P1, spec)
    assert got == pytest.approx(ref, abs=1e-11)


def mp_cos(t):
    return oracles.mp.cos(t)


# ---------------------------------------------------------------------------
# oscillation and Lq norms
# ---------------------------------------------------------------------------


def test_oscillation_radius_sq_vs_mp(spec):
    f = _rsq()
    a, b = P1.lo[0], P1.hi[0]
    c = oracles.t2_average_mp(a, b)
    root = math.sqrt(c)
    mass = oracles.gauss1d_mp(a, b)
    # split the kink |t^2 - c| at +-sqrt(c) and integrate each smooth piece
    pieces = [(a, -root), (-root, root), (root, b)]
    total = 0.0
    for lo_, hi_ in pieces:
        total += oracles.gauss_quad_mp(lambda t: abs(t * t - c), lo_, hi_)
    ref = total / mass
    got = oscillation(f, P1, 1.0, spec)
    assert got == pytest.approx(ref, abs=5e-11)


def test_oscillation_q2_is_variance(spec):
    # q = 2 oscillation squared equals E(f^2) - (E f)^2 on the cube
    f = _rsq()
    for cube in (P1, OFFSET):
        a, b = cube.lo[0], cube.hi[0]
        m1 = oracles.t2_average_mp(a, b)
        m2 = oracles.gauss_quad_mp(lambda t: t**4, a, b) / oracles.gauss1d_mp(a, b)
        ref = math.sqrt(m2 - m1 * m1)
        got = oscillation(f, cube, 2.0, spec)
        assert got == pytest.approx(ref, abs=1e-10)


def test_oscillation_rejects_bad_exponent(spec):
    with pytest.raises(ValueError):
        oscillation(_rsq(), P1, 0.5, spec)


def test_lq_norm_coord_vs_mp(spec):
    f = corpus_by_id(1)["coord0"]
    ref = oracles.gauss_quad_mp(lambda t: abs(t) ** 3, -1.0, 1.0) ** (1.0 / 3.0)
    got = lq_norm(f, P1, 3.0, spec)
    assert got == pytest.approx(ref, abs=1e-10)


# ---------------------------------------------------------------------------
# step fields: quadrature vs closed forms
# ---------------------------------------------------------------------------


def test_step_field_validation():
    with pytest.raises(ValueError):
        StepField("bad", 0, (0.5, 0.5), (1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        StepField("bad", 0, (0.0,), (1.0,))


def test_step_closed_forms_match_mp_oracle():
    f = StepField("s3", 0, (-0.4, 0.3), (1.5, -0.5, 2.0), dim=1)
    cube = Cube((0.1,), 1.6)
    lo, hi = cube.lo, cube.hi
    ref_pairs = oracles.step_masses_mp(f.edges, f.values, lo, hi, 0)
    ref_mass = math.fsum(m for _, m in ref_pairs)
    ref_avg = math.fsum(v * m for v, m in ref_pairs) / ref_mass
    assert step_average(f, cube) == pytest.approx(ref_avg, rel=1e-13)
    assert step_lq_norm(f, cube, 2.5) == pytest.approx(
        oracles.step_lq_mp(f.edges, f.values, lo, hi, 0, 2.5), rel=1e-13
    )
    assert step_weak_lp_norm(f, cube, 3.0) == pytest.approx(
        oracles.step_weak_lp_mp(f.edges, f.values, lo, hi, 0, 3.0), rel=1e-13
    )


def test_step_quadrature_matches_closed_forms(spec):
    f = StepField("s4", 0, (-0.2, 0.1, 0.6), (0.5, -1.0, 2.0, 0.25), dim=1)
    cube = Cube((0.2,), 1.8)
    assert gauss_average(f, cube, spec) == pytest.approx(
        step_average(f, cube), abs=1e-12
    )
    for q in (1.0, 2.0, 3.0):
        assert oscillation(f, cube, q, spec) == pytest.approx(
            step_oscillation(f, cube, q), abs=1e-10
        )
        assert lq_norm(f, cube, q, spec) == pytest.approx(
            step_lq_norm(f, cube, q), abs=1e-10
        )


def test_step_quadrature_matches_closed_forms_2d(spec):
    f = StepField("s2d", 1, (0.0,), (-1.0, 1.0), dim=2)
    cube = Cube((0.3, -0.1), 1.2)
    assert gauss_average(f, cube, spec) == pytest.approx(
        step_average(f, cube), abs=1e-12
    )
    assert oscillation(f, cube, 2.0, spec) == pytest.approx(
        step_oscillation(f, cube, 2.0), abs=1e-10
    )


def test_make_random_step_reproducible():
    cube = Cube((0.0, 0.0), 2.0)
    f1 = make_random_step(np.random.default_rng(42), cube, cells=5, tag="x")
    f2 = make_random_step(np.random.default_rng(42), cube, cells=5, tag="x")
    assert f1.edges == f2.edges
    assert f1.values == f2.values
    assert all(cube.lo[0] < e < cube.hi[0] for e in f1.edges)
    with pytest.raises(ValueError):
        make_random_step(np.random.default_rng(0), cube, cells=1)


# ---------------------------------------------------------------------------
# distribution tails
# ---------------------------------------------------------------------------


def test_tail_profile_sign_field(spec):
    f = _sign()
    # on the symmetric cube the mean is 0 and |f| = 1 a.e.:
    # the tail is the whole mass below sigma = 1 and empty above
    prof = tail_profile(f, P1, [0.5, 1.5], spec)
    g = gaussian_measure(P1)
    assert prof.tails[0] == pytest.approx(g, abs=1e-12)
    assert prof.tails[1] == pytest.approx(0.0, abs=1e-12)


def test_tail_profile_radius_sq_analytic(spec):
    f = _rsq()
    c = gauss_average(f, P1, spec)
    sigmas = [0.05, 0.1, 0.2, 0.4]
    prof = tail_profile(f, P1, sigmas, spec)
    for s, t in zip(prof.sigmas, prof.tails):
        # {|t^2 - c| > s} inside (-1,1): inner component |t| < sqrt(c-s)
        # plus outer component |t| > sqrt(c+s)
        ref = 0.0
        if c - s > 0:
            r = math.sqrt(c - s)
            ref += kernels.gauss1d(-r, r)
        if c + s < 1.0:
            r = math.sqrt(c + s)
            ref += kernels.gauss1d(r, 1.0) + kernels.gauss1d(-1.0, -r)
        assert t == pytest.approx(ref, abs=1e-10), s


def test_tail_profile_monotone_and_validated(spec):
    f = _rsq()
    prof = tail_profile(f, P1, np.linspace(0.01, 1.0, 25), spec)
    assert all(b <= a + 1e-15 for a, b in zip(prof.tails, prof.tails[1:]))
    with pytest.raises(ValueError):
        tail_profile(f, P1, [], spec)
    with pytest.raises(ValueError):
        tail_profile(f, P1, [-0.1, 0.5], spec)


def test_tail_measure_step_exact(spec):
    f = StepField("s5", 0, (0.0,), (0.0, 1.0), dim=1)
    got = tail_measure(f, P1, 0.4, spec)
    assert got == pytest.approx(step_tail(f, P1, 0.4), abs=1e-12)


def test_uncentered_tail(spec):
    f = _sign()
    got = tail_measure(f, P1, 0.5, spec, center=0.0)
    assert got == pytest.approx(gaussian_measure(P1), abs=1e-12)


# ---------------------------------------------------------------------------
# weak Lp norms
# ---------------------------------------------------------------------------


def test_weak_lp_half_step_closed_form(spec):
    # f = 1 on (0,1), 0 elsewhere: ||f||_{p,weak} = gamma((0,1))^(1/p)
    f = StepField("half", 0, (0.0,), (0.0, 1.0), dim=1)
    exact = (0.5 * kernels.erf(1.0)) ** 0.5
    got = weak_lp_norm(f, P1, 2.0, spec)
    assert got == pytest.approx(step_weak_lp_norm(f, P1, 2.0), rel=1e-12)
    assert got == pytest.approx(exact, rel=1e-12)


def test_weak_lp_generic_vs_step_oracle(spec):
    # panels align with the step edges, so the node measure reproduces the
    # exact cell masses and the generic weak norm must hit the closed form
    rng = np.random.default_rng(99)
    cube = Cube((0.25,), 1.5)
    for _ in range(5):
        f = make_random_step(rng, cube, cells=4)
        for p in (2.0, 3.0):
            exact = step_weak_lp_norm(f, cube, p)
            got = weak_lp_norm(f, cube, p, spec)
            assert got == pytest.approx(exact, rel=1e-11)


def test_weak_lp_continuous_certified_lower_bound(spec):
    # |x| on (-1,1): sup_s s * gamma(|x| > s)^(1/p) computed exactly with
    # the error function; the node-measure sup approaches it from below
    f = corpus_by_id(1)["coord0"]
    p = 2.0
    s_grid = np.linspace(1e-4, 1.0 - 1e-4, 20001)
    tails = np.array([kernels.gauss1d(s, 1.0) + kernels.gauss1d(-1.0, -s) for s in s_grid])
    exact = float(np.max(s_grid * tails ** (1.0 / p)))
    got = weak_lp_norm(f, P1, p, spec)
    # stabilized to rel_tol, so the estimate sits within a few parts in 1e3
    assert got == pytest.approx(exact, rel=5e-3)
    tighter = weak_lp_norm(f, P1, p, spec, rel_tol=1e-5)
    assert abs(tighter - exact) < abs(got - exact) + 1e-12


def test_weak_lp_rejects_bad_exponent(spec):
    with pytest.raises(ValueError):
        weak_lp_norm(_rsq(), P1, 0.5, spec)


# ---------------------------------------------------------------------------
# global L1 norms and growth bounds
# ---------------------------------------------------------------------------


def test_l1_gamma_norm_brackets_exact_value(spec):
    # E exp(|x|^2/2) under gamma_1 is sqrt(2): the box integral plus its
    # logged tail allowance must bracket the true value
    f = corpus_by_id(1)["exp_half_sq"]
    est, slack = l1_gamma_norm(f, 1, 6.0, spec)
    exact = math.sqrt(2.0)
    assert est <= exact <= est + slack + 1e-12
    assert slack < 1e-6


def test_l1_gamma_norm_sign(spec):
    est, slack = l1_gamma_norm(_sign(), 1, 6.0, spec)
    assert est == pytest.approx(kernels.erf(6.0), abs=1e-9)
    assert slack <= 1.0 - kernels.erf(6.0) + 1e-15


def test_growth_tail_bound_dominates_exact_tail():
    # integrand A + B|x|^2 outside (-R, R), exact in one dimension
    a_coef, b_coef, radius = 0.7, 1.3, 2.5
    outside = 1.0 - kernels.erf(radius)
    second_moment_tail = 2.0 * (
        oracles.t2_integral_mp(radius, 40.0) + 0.0
    )
    exact = a_coef * outside + b_coef * second_moment_tail
    bound = growth_tail_bound(a_coef, b_coef, radius, 1)
    assert bound >= exact - 1e-15
    assert bound <= 50.0 * max(exact, 1e-300)  # not absurdly loose
    assert growth_tail_bound(a_coef, b_coef, 4.0, 1) < bound  # shrinks with R


# ---------------------------------------------------------------------------
# failure paths
# ---------------------------------------------------------------------------


def test_quadrature_error_on_undeclared_kink():
    # a kink strictly inside panels, with no break metadata and no budget:
    # the refinement loop must refuse to certify rather than return junk
    f = ScalarField("hidden-kink", lambda p: np.abs(p[:, 0] - 0.377))
    tight = QuadratureSpec(nodes_per_axis=2, refinement_levels=1, abs_tol=1e-15)
    with pytest.raises(QuadratureError):
        gauss_average(f, P1, tight)


def test_declared_kink_converges(spec):
    f = ScalarField(
        "kink", lambda p: np.abs(p[:, 0] - 0.377), breaks={0: (0.377,)}
    )
    ref = oracles.gauss_quad_mp(lambda t: abs(t - 0.377), -1.0, 0.377)
    ref += oracles.gauss_quad_mp(lambda t: abs(t - 0.377), 0.377, 1.0)
    ref /= oracles.gauss1d_mp(-1.0, 1.0)
    assert gauss_average(f, P1, spec) == pytest.approx(ref, abs=1e-11)
