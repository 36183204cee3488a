from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from helpers import random_interior_points
from hypothesis import given, settings
from hypothesis import strategies as st

from gcpmotion.errors import DomainError
from gcpmotion.geometry import DirectionSet, position_from_times
from gcpmotion.law import (
    GRID_COLUMNS,
    MotionParams,
    decay_check,
    density,
    edge_mass,
    edge_mass_quad,
    evaluate_points,
    face_mass,
    face_mass_closed,
    face_mass_quad,
    interior_density_closed,
    interior_density_general,
    interior_integral,
    limiting_density,
    singular_masses,
    vertex_mass,
)

REG = MotionParams.regular()
DET = 16 * np.sqrt(3) / 9


def perturbed(dphi=0.1, lambdas=(1, 1, 1, 1)):
    ds = DirectionSet.regular()
    phi = list(ds.phi)
    phi[1] += dphi
    return MotionParams(DirectionSet(ds.theta, phi, 1.0), lambdas)


def test_params_validation():
    with pytest.raises(DomainError):
        MotionParams.regular((1, 1, 1))
    with pytest.raises(DomainError):
        MotionParams.regular((1, 1, 0, 1))
    bad = DirectionSet((0, 2, 4, 1), (np.pi / 2,) * 4)
    with pytest.raises(DomainError):
        MotionParams(bad, (1, 1, 1, 1))


# --- singular masses -----------------------------------------------------------


def test_vertex_mass():
    assert vertex_mass(REG, 1.0) == 0.5
    assert vertex_mass(MotionParams.regular((2, 1, 1, 1)), 1.0) == pytest.approx(1 / 3, rel=1e-15)
    assert vertex_mass(REG, 0.0) == 1.0
    ts = np.linspace(0, 10, 50)
    assert np.all(np.diff([vertex_mass(REG, t) for t in ts]) < 0)


def test_edge_mass_values():
    mp12 = MotionParams.regular((1, 2, 1, 1))
    assert edge_mass(mp12, 1.0) == pytest.approx((2.5 + 2 * np.log(6)) / 25, rel=1e-14)
    assert edge_mass(mp12, 1.0) == pytest.approx(0.24334, abs=5e-6)
    assert edge_mass(REG, 1.0) == pytest.approx((1.5 + np.log(4)) / 9, rel=1e-14)
    assert edge_mass(REG, 1.0) == pytest.approx(0.32070, abs=5e-6)
    assert edge_mass(mp12, 0.0) == 0.0


@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.01, 30))
@settings(max_examples=40)
def test_edge_mass_matches_quadrature(l1, l2, t):
    mp_ = MotionParams.regular((l1, l2, 1, 1))
    assert edge_mass(mp_, t) == pytest.approx(edge_mass_quad(mp_, t), abs=1e-10)


def _face_oracle(lam, t):
    # independent mpmath evaluation of P{D11 + D21 < t <= D11 + D21 + D31}
    f = lambda s: lam / (1 + lam * s) ** 2  # noqa: E731
    with mp.workdps(25):
        return float(mp.quad(lambda u: mp.quad(lambda v: f(u) * f(v) / (1 + lam * (t - u - v)), [0, t - u]), [0, t]))


def test_face_mass_reference_values():
    assert face_mass(REG, 0.0) == 0.0
    assert face_mass_closed(1.0, 1.0) == pytest.approx(_face_oracle(1.0, 1.0), abs=1e-12)
    assert face_mass_closed(1.0, 1.0) == pytest.approx(0.13019129861207845, abs=1e-14)


def test_face_mass_closed_vs_quadrature_dual():
    mp2 = MotionParams.regular((2, 2, 2, 1))
    assert face_mass_closed(2.0, 0.7) == pytest.approx(face_mass_quad(mp2, 0.7), abs=1e-7)


def test_face_mass_closed_vs_quadrature_twenty_pairs():
    rng = np.random.default_rng(8)
    for _ in range(20):
        lam = float(np.exp(rng.uniform(np.log(0.05), np.log(50))))
        t = float(np.exp(rng.uniform(np.log(0.05), np.log(20))))
        mp_ = MotionParams.regular((lam, lam, lam, 1))
        assert face_mass_closed(lam, t) == pytest.approx(face_mass_quad(mp_, t), abs=1e-7)


def test_face_mass_depends_on_product_only():
    assert face_mass_closed(2.0, 1.5) == pytest.approx(face_mass_closed(1.0, 3.0), rel=1e-14)


def test_face_mass_unequal_uses_quadrature():
    mp_ = MotionParams.regular((1, 2, 3, 1))
    assert face_mass(mp_, 1.2) == face_mass_quad(mp_, 1.2)


@given(st.tuples(*[st.floats(0.1, 10)] * 4), st.floats(0.01, 20))
@settings(max_examples=25)
def test_singular_masses_are_probabilities(lams, t):
    m = singular_masses(MotionParams.regular(lams), t)
    for v in (m.eta1, m.eta2, m.eta3, m.interior_mass):
        assert -1e-12 <= v <= 1
    assert m.eta1 + m.eta2 + m.eta3 <= 1 + 1e-12
    assert m.eta1 + m.eta2 + m.eta3 + m.interior_mass == pytest.approx(1.0, abs=1e-9)


def test_masses_reject_negative_time():
    with pytest.raises(DomainError):
        vertex_mass(REG, -1.0)


# --- interior density, closed form ---------------------------------------------


def test_centre_value_against_exact_arithmetic():
    tau = Fraction(1, 4)
    A, B, C, D = 4 * tau, 6 * tau**2, 4 * tau**3, tau**4
    S = 1 + A + B + C
    r = D / S
    p11 = tau * (1 + 6 * r * (1 + r)) / S**2
    p14 = p11 / tau * (1 + tau)
    p12 = 2 * tau**2 * (1 + tau) ** 3 * (1 + 3 * r) / S**3
    p13 = 2 * tau**3 * (1 + tau) ** 2 * (2 + 3 * r) / S**3
    exact = np.array([float(v) for v in (p11, p12, p13, p14)]) / DET
    ev = interior_density_closed(REG, np.zeros(3), 1.0)
    np.testing.assert_allclose(ev.p, exact, rtol=1e-14)
    assert ev.total == pytest.approx(exact.sum(), rel=1e-14)
    assert not ev.near_singular


def test_closed_form_rejects_boundary_and_exterior():
    with pytest.raises(DomainError, match="boundary"):
        interior_density_closed(REG, [1.0, 0, 0], 1.0)
    with pytest.raises(DomainError, match="exterior"):
        interior_density_closed(REG, [-0.5, 0, 0], 1.0)


def test_sub_densities_nonnegative_and_additive():
    rng = np.random.default_rng(9)
    for lams in ((1, 1, 1, 1), (0.2, 5, 1, 30)):
        mp_ = MotionParams.regular(lams)
        x = random_interior_points(mp_, 1.0, 10_000, rng)
        ev = interior_density_closed(mp_, x, 1.0)
        assert np.all(ev.p >= 0) and np.all(np.isfinite(ev.p))
        np.testing.assert_allclose(ev.total, ev.p.sum(axis=1), rtol=1e-15)


def test_near_singular_flag():
    # one residence time between the interior cut (1e-9 t) and the flag level (1e-8 t)
    tau = np.array([0.97, 0.01, 0.02 - 5e-9, 5e-9])
    ev = interior_density_closed(REG, position_from_times(REG.ctx, tau), 1.0)
    assert ev.near_singular
    assert np.all(np.isfinite(ev.p))


@pytest.mark.parametrize("lams", [(1, 1, 1, 1), (0.5, 2, 3, 7), (10, 0.3, 1, 2)])
def test_mass_conservation(lams):
    mp_ = MotionParams.regular(lams)
    val, err = interior_integral(mp_, 1.0)
    assert val == pytest.approx(singular_masses(mp_, 1.0).interior_mass, abs=1e-3)
    assert val == pytest.approx(singular_masses(mp_, 1.0).interior_mass, abs=1e-8)


def test_mass_conservation_irregular_set():
    mp_ = perturbed(0.1)
    val, _ = interior_integral(mp_, 1.0)
    assert val == pytest.approx(singular_masses(mp_, 1.0).interior_mass, abs=5e-3)


# --- interior density, series form -------------------------------------------


def test_series_matches_closed_at_centre():
    a = interior_density_general(REG, np.zeros(3), 1.0, tol=1e-10)
    b = interior_density_closed(REG, np.zeros(3), 1.0)
    np.testing.assert_allclose(a.p, b.p, rtol=1e-6)


@pytest.mark.parametrize("lams", [(1, 1, 1, 1), (0.5, 2, 3, 7)])
def test_series_matches_closed_random_points(lams):
    mp_ = MotionParams.regular(lams)
    rng = np.random.default_rng(10)
    for x in random_interior_points(mp_, 1.0, 5, rng, margin=0.02):
        a = interior_density_general(mp_, x, 1.0, tol=1e-10)
        b = interior_density_closed(mp_, x, 1.0)
        np.testing.assert_allclose(a.p, b.p, rtol=1e-7)


def test_series_matches_closed_on_irregular_set():
    mp_ = perturbed(0.1, (1.5, 0.7, 2, 1))
    x = mp_.ctx.vectors.T @ np.array([0.3, 0.2, 0.25, 0.25])
    a = interior_density_general(mp_, x, 1.0, tol=1e-10)
    b = interior_density_closed(mp_, x, 1.0)
    np.testing.assert_allclose(a.p, b.p, rtol=1e-7)


def test_series_argument_checks():
    with pytest.raises(DomainError):
        interior_density_general(REG, np.zeros((2, 3)), 1.0)
    with pytest.raises(DomainError):
        interior_density_general(REG, np.zeros(3), 1.0, tol=0.0)
    with pytest.raises(DomainError):
        interior_density_general(REG, [2.0, 0, 0], 1.0)


# --- limiting density and decay -------------------------------------------------


def test_limiting_centre_value():
    # 6 t (t/4)^8 / (detA (4 (t/4)^3)^4) = 6 / detA at t = 1
    assert limiting_density(REG.ctx, np.zeros(3), 1.0) == pytest.approx(6 / DET, rel=1e-14)
    assert limiting_density(REG.ctx, np.zeros(3), 1.0) == pytest.approx(9 * np.sqrt(3) / 8, rel=1e-14)


def test_limiting_is_density():
    val, _ = interior_integral(REG, 1.0, "limiting")
    assert val == pytest.approx(1.0, abs=1e-3)
    val2, _ = interior_integral(perturbed(0.1), 2.0, "limiting")
    assert val2 == pytest.approx(1.0, abs=1e-3)


def test_limiting_nonnegative_and_rejects_boundary():
    rng = np.random.default_rng(11)
    x = random_interior_points(REG, 1.0, 2000, rng)
    assert np.all(limiting_density(REG.ctx, x, 1.0) >= 0)
    with pytest.raises(DomainError):
        limiting_density(REG.ctx, [1.0, 0, 0], 1.0)


def test_limiting_scaling_in_time():
    w = np.array([0.1, 0.2, 0.3, 0.4])
    vals = []
    for t in (0.5, 1, 4, 20):
        x = t * w @ REG.ctx.vectors
        vals.append(limiting_density(REG.ctx, x, t) * t**3)
    np.testing.assert_allclose(vals, vals[0], rtol=1e-12)


def test_density_approaches_limit():
    rng = np.random.default_rng(12)
    x = random_interior_points(REG, 1.0, 20, rng, margin=0.03)
    xi = limiting_density(REG.ctx, x, 1.0)
    errs = []
    for lam in (1e2, 1e3, 1e4):
        p = density(MotionParams.regular((lam,) * 4), x, 1.0)
        errs.append(np.max(np.abs(p / xi - 1)))
    assert errs[0] > errs[1] > errs[2]


def test_decay_report():
    rep = decay_check(REG, np.zeros(3), [10, 20, 40, 80])
    assert rep.bounded
    np.testing.assert_allclose(rep.ratios, rep.scaled[1:] / rep.scaled[:-1])
    assert np.all(np.diff(np.abs(rep.ratios - 1)) < 0)
    late = decay_check(REG, np.zeros(3), [160, 320, 640, 1280])
    assert late.passed
    # the limit of p1 t^3 at the origin is 6 / detA
    assert late.scaled[-1] == pytest.approx(6 / DET, rel=0.01)
    with pytest.raises(DomainError):
        decay_check(REG, np.zeros(3), [2, 1])


def test_density_decreases_for_large_t():
    vals = [density(REG, np.zeros(3), t) for t in (5, 10, 20, 40, 80, 160)]
    assert np.all(np.diff(vals) < 0)


# --- grid rows ----------------------------------------------------------------


def test_evaluate_points_rows():
    pts = np.array([[0, 0, 0], [0.2, 0.1, 0.05], [-0.5, 0, 0], [1, 0, 0]], dtype=float)
    rows = evaluate_points(REG, pts, 1.0)
    assert rows.shape == (2, len(GRID_COLUMNS))
    ev = interior_density_closed(REG, pts[:2], 1.0)
    np.testing.assert_allclose(rows[:, 4:8], ev.p)
    np.testing.assert_allclose(rows[:, 8], ev.total)
    np.testing.assert_allclose(rows[:, 9], limiting_density(REG.ctx, pts[:2], 1.0))
