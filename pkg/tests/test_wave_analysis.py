"""Phase-plane machinery: classification, certificates, shooting, assembly."""

import math

import numpy as np
import pytest

from wavekit.model_core import (
    DiffusivityProfile,
    KineticProfile,
    ModelParams,
    beta_node_threshold,
    eval_D,
    eval_R,
)
from wavekit.wave_analysis import (
    BudgetExceededError,
    DivergenceError,
    Equilibrium,
    NoWaveConnectionError,
    PhaseOrbit,
    PhasePoint,
    RegionCertificate,
    WaveProfile,
    _cumtrapz0,
    assemble_wave,
    classify_equilibria,
    nullcline_p,
    nullcline_slope,
    region_certificates,
    shoot_segment,
    slope_comparisons,
    vector_field_desingularised,
)

BASE = ModelParams.logistic(0.25, 0.05, 0.75)
CSTAR = math.sqrt(3.0) / 2.0
ALPHA, BETA = 0.5, 5.0 / 6.0
DHAT = DiffusivityProfile.from_roots(0.1, 0.3)
KIN = KineticProfile.logistic(0.75)


def random_rates(rng):
    D_i = rng.uniform(0.05, 2.0)
    D_g = D_i * rng.uniform(1e-3, 0.2499)
    lam = rng.uniform(0.05, 2.0)
    return ModelParams.logistic(D_i, D_g, lam)


class TestTypes:
    def test_phase_point_must_be_finite(self):
        with pytest.raises(ValueError):
            PhasePoint(float("nan"), 0.0)

    def test_equilibrium_rejects_inconsistent_kind(self):
        with pytest.raises(ValueError):
            Equilibrium(
                location=PhasePoint(0.0, 0.0),
                eigenvalues=(complex(0.5), complex(-1.0)),
                eigenvectors=(np.array([1.0, 0.5]), np.array([1.0, -1.0])),
                kind="StableNode",
            )

    def test_orbit_requires_ordered_samples(self):
        xi = np.array([0.0, 2.0, 1.0])
        with pytest.raises(ValueError):
            PhaseOrbit(
                xi=xi,
                u=np.zeros(3),
                p=np.zeros(3),
                origin=PhasePoint(1.0, 0.0),
                target=PhasePoint(0.0, 0.0),
                segment_id="OneToBeta",
                monotone_u=True,
                u_nonnegative=True,
                entered_spiral=False,
                endpoint_error=0.0,
            )

    def test_wave_profile_tail_invariant(self):
        z = np.linspace(-1.0, 1.0, 5)
        with pytest.raises(ValueError, match="tails"):
            WaveProfile(z=z, u=np.full(5, 0.5), dudz=np.zeros(5), speed=1.0, regime="OscillatoryTail")

    def test_wave_profile_monotone_invariant(self):
        z = np.linspace(-1.0, 1.0, 5)
        u = np.array([1.0, 0.75, 0.5, 0.25, 0.0])
        dudz = np.array([-0.2, -0.2, 0.1, -0.2, -0.2])
        with pytest.raises(ValueError, match="monotone"):
            WaveProfile(z=z, u=u, dudz=dudz, speed=1.0, regime="SmoothMonotone")

    def test_certificate_validity(self):
        assert RegionCertificate("R1", -0.4, 0.0).valid
        assert not RegionCertificate("R1", -0.4, -1e-15).valid

    def test_divergence_error_carries_exit_point(self):
        err = DivergenceError("OneToBeta", 3.0, 1.6, 0.2)
        assert err.exit_point == (1.6, 0.2)
        assert "1.6" in str(err)


class TestFieldAndNullclines:
    def test_equilibria_are_fixed_points(self):
        from wavekit.model_core import roots_alpha_beta

        a, b = roots_alpha_beta(BASE.diffusivity())
        for u0 in (0.0, a, b, 1.0):
            du, dp = vector_field_desingularised(BASE, CSTAR, PhasePoint(u0, 0.0))
            assert du == 0.0
            assert dp == pytest.approx(0.0, abs=1e-15)

    def test_interior_point_value(self):
        du, dp = vector_field_desingularised(BASE, CSTAR, (0.9, 0.0))
        D = eval_D(BASE.diffusivity(), 0.9)
        R = eval_R(BASE.kinetics(), 0.9)
        assert du == 0.0
        assert dp == pytest.approx(-D * R, rel=1e-15)
        assert dp < 0.0  # D > 0 and R > 0 above beta

    def test_nullcline_zeros_and_sign(self):
        assert nullcline_p(BASE, CSTAR, np.array([0.0, ALPHA, BETA, 1.0])) == pytest.approx(
            [0.0] * 4, abs=1e-15
        )
        assert nullcline_p(BASE, CSTAR, 0.9) < 0.0

    def test_nullcline_slope_is_its_derivative(self):
        u = np.linspace(0.05, 0.95, 19)
        h = 1e-6
        fd = (nullcline_p(BASE, CSTAR, u + h) - nullcline_p(BASE, CSTAR, u - h)) / (2.0 * h)
        assert np.allclose(nullcline_slope(BASE, CSTAR, u), fd, atol=1e-8)

    def test_chi_at_zero_closed_form(self):
        assert nullcline_slope(BASE, CSTAR, 0.0) == pytest.approx(
            -0.75 * 0.25 / CSTAR, rel=1e-14
        )

    def test_speed_must_be_positive(self):
        with pytest.raises(ValueError):
            nullcline_p(BASE, 0.0, 0.5)
        with pytest.raises(ValueError):
            vector_field_desingularised(BASE, -1.0, (0.5, 0.0))


class TestClassification:
    def test_flagship_at_cstar(self):
        eqs = classify_equilibria(BASE, CSTAR)
        kinds = {k: v.kind for k, v in eqs.items()}
        assert kinds == {
            "one": "Saddle",
            "beta": "StableNode",
            "alpha": "Saddle",
            "zero": "StableNode",
        }
        # c = c* is the boundary double root at (0,0)
        lp, lm = eqs["zero"].eigenvalues
        assert lp == pytest.approx(lm, abs=1e-12)
        assert lp.real == pytest.approx(-CSTAR / 2.0, abs=1e-12)

    def test_flagship_below_cstar(self):
        eqs = classify_equilibria(BASE, 0.4)
        assert eqs["zero"].kind == "StableSpiral"
        assert eqs["beta"].kind == "StableNode"
        assert eqs["zero"].eigenvalues[0].real == pytest.approx(-0.2, abs=1e-14)

    def test_shifted_root_shock_window(self):
        eqs = classify_equilibria(DHAT, 0.32, kin=KIN)
        kinds = {k: v.kind for k, v in eqs.items()}
        assert kinds == {
            "one": "Saddle",
            "beta": "StableSpiral",
            "alpha": "Saddle",
            "zero": "StableNode",
        }

    def test_eigenvectors_satisfy_jacobian(self):
        eqs = classify_equilibria(BASE, 1.1)
        for eq in eqs.values():
            u0 = eq.location.u
            prof, kin = BASE.diffusivity(), BASE.kinetics()
            h = 1e-7
            F = (
                eval_D(prof, u0 + h) * eval_R(kin, u0 + h)
                - eval_D(prof, u0 - h) * eval_R(kin, u0 - h)
            ) / (2.0 * h)
            J = np.array([[0.0, 1.0], [-F, -1.1]])
            for lam, vec in zip(eq.eigenvalues, eq.eigenvectors):
                assert np.allclose(J @ vec, lam * vec, atol=1e-6)

    def test_against_generic_eigensolver(self):
        rng = np.random.default_rng(20240817)
        for _ in range(1000):
            m = random_rates(rng)
            c = rng.uniform(0.05, 3.0)
            prof, kin = m.diffusivity(), m.kinetics()
            for eq in classify_equilibria(m, c).values():
                u0 = eq.location.u
                from wavekit.model_core import eval_D_prime, eval_R_prime

                F = eval_D_prime(prof, u0) * eval_R(kin, u0) + eval_D(prof, u0) * eval_R_prime(
                    kin, u0
                )
                ref = np.linalg.eigvals(np.array([[0.0, 1.0], [-F, -c]]))
                got = sorted(eq.eigenvalues, key=lambda s: (s.real, s.imag))
                ref = sorted(ref.tolist(), key=lambda s: (s.real, s.imag))
                for a, b in zip(got, ref):
                    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))

    def test_positive_diffusivity_rejected(self):
        with pytest.raises(ValueError, match="sign-changing"):
            classify_equilibria(ModelParams.logistic(0.25, 0.20, 0.75), 1.0)


class TestRegionCertificates:
    def test_flagship_boundary_case(self):
        r1, r2, r3 = region_certificates(BASE, CSTAR)
        assert r1.margin == pytest.approx(0.0, abs=1e-12)
        # R3 peaks at u = beta where the slack is c*^2/4 - F(beta) = 1/6
        assert r3.margin == pytest.approx(1.0 / 6.0, rel=1e-9)
        up = (3.0 + math.sqrt(3.0)) / 6.0
        g_max = 0.45 * (up - 0.5) * up * (1.0 - up)
        assert r2.margin == pytest.approx(0.75 / 4.0 - g_max, rel=1e-9)
        assert all(c.mu == -CSTAR / 2.0 for c in (r1, r2, r3))

    def test_supercritical_strictly_positive(self):
        assert all(c.margin > 0.0 for c in region_certificates(BASE, 1.2))

    def test_subcritical_r1_fails(self):
        r1, r2, r3 = region_certificates(BASE, 0.5)
        assert r1.margin < 0.0 and not r1.valid
        assert r1.margin == pytest.approx(0.25 / 4.0 - 0.1875, rel=1e-9)

    def test_margins_increase_with_speed(self):
        lo = region_certificates(BASE, 1.0)
        hi = region_certificates(BASE, 1.2)
        assert all(h.margin > l.margin for h, l in zip(hi, lo))

    def test_shifted_root_shock_window_fails_honestly(self):
        # at c = c* = 0.3 the R1 slack vanishes but the (alpha,1) inequalities
        # fail: consistent with the absence of a smooth wave below 0.355
        r1, r2, r3 = region_certificates(DHAT, 0.3, kin=KIN)
        assert r1.margin == pytest.approx(0.0, abs=1e-12)
        assert r2.margin < 0.0 and r3.margin < 0.0
        assert all(c.valid for c in region_certificates(DHAT, 0.7, kin=KIN))

    def test_r1_margin_zero_at_cstar_for_random_rates(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            m = random_rates(rng)
            c = 2.0 * math.sqrt(m.lambda_i * m.D_i)
            r1 = region_certificates(m, c)[0]
            assert abs(r1.margin) <= 1e-12 * max(1.0, c * c)


class TestSlopeComparisons:
    def test_all_negative_at_cstar(self):
        rep = slope_comparisons(BASE, CSTAR)
        assert rep.all_negative
        assert [e.u0 for e in rep.entries] == pytest.approx([1.0, ALPHA, 0.0, BETA])
        for e in rep.entries:
            # closed form: difference = -(c - s)^2 / (4c), s^2 = c^2 - 4F
            s = e.lambda_plus.real * 2.0 + CSTAR
            assert e.difference == pytest.approx(-((CSTAR - s) ** 2) / (4.0 * CSTAR), abs=1e-14)

    def test_random_supercritical_sweep(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            m = random_rates(rng)
            c = 2.0 * math.sqrt(m.lambda_i * m.D_i) * rng.uniform(1.0, 2.5)
            assert slope_comparisons(m, c).all_negative

    def test_spiral_case_reports_nan(self):
        rep = slope_comparisons(BASE, 0.4)
        one, alpha, zero, _ = rep.entries
        assert math.isnan(zero.difference)
        assert one.difference < 0.0 and alpha.difference < 0.0
        assert not rep.all_negative


class TestShooting:
    def test_three_segments_connect(self):
        ranges = {
            "OneToBeta": (BETA, 1.0),
            "AlphaToBeta": (ALPHA, BETA),
            "AlphaToZero": (0.0, ALPHA),
        }
        for seg, (lo, hi) in ranges.items():
            o = shoot_segment(BASE, CSTAR, seg)
            assert o.endpoint_error <= 1e-6 + 1e-9
            assert o.monotone_u and o.u_nonnegative and not o.entered_spiral
            assert o.u.min() >= lo - 1e-6 and o.u.max() <= hi + 1e-6

    def test_one_to_beta_p_negative_inside(self):
        o = shoot_segment(BASE, CSTAR, "OneToBeta")
        assert np.max(o.p[1:]) < 0.0

    def test_oscillatory_tail_below_cstar(self):
        o = shoot_segment(BASE, 0.4, "AlphaToZero")
        assert not o.u_nonnegative
        assert o.entered_spiral
        assert o.u.min() == pytest.approx(-0.0211, abs=2e-3)
        assert o.endpoint_error <= 1e-6 + 1e-9

    def test_orientation_of_z_per_segment(self):
        prof = BASE.diffusivity()
        a = shoot_segment(BASE, CSTAR, "OneToBeta")
        b = shoot_segment(BASE, CSTAR, "AlphaToBeta")
        c = shoot_segment(BASE, CSTAR, "AlphaToZero")
        assert np.all(np.diff(_cumtrapz0(eval_D(prof, a.u), a.xi)) > 0.0)  # D > 0
        assert np.all(np.diff(_cumtrapz0(eval_D(prof, b.u), b.xi)) < 0.0)  # D < 0
        assert np.all(np.diff(_cumtrapz0(eval_D(prof, c.u), c.xi)) > 0.0)  # D > 0

    def test_budget_is_a_distinct_diagnostic(self):
        with pytest.raises(BudgetExceededError):
            shoot_segment(BASE, CSTAR, "OneToBeta", xi_budget=10.0)

    def test_input_validation(self):
        with pytest.raises(ValueError, match="unknown segment"):
            shoot_segment(BASE, CSTAR, "ZeroToOne")
        with pytest.raises(ValueError):
            shoot_segment(BASE, -0.1, "OneToBeta")


@pytest.fixture(scope="module")
def wave():
    return assemble_wave(BASE, CSTAR)


class TestAssembly:
    def test_smooth_monotone_profile(self, wave):
        assert wave.regime == "SmoothMonotone"
        assert wave.speed == CSTAR
        assert wave.u.min() >= -1e-12 and wave.u.max() <= 1.0
        assert np.max(wave.dudz) <= 1e-10
        assert np.interp(0.0, wave.z, wave.u) == pytest.approx(0.5, abs=1e-9)

    def test_z_reconstruction_consistency(self, wave):
        grad = np.gradient(wave.u, wave.z)
        mask = (
            (np.abs(wave.u - ALPHA) > 0.02)
            & (np.abs(wave.u - BETA) > 0.02)
            & (wave.u > 1e-4)
            & (wave.u < 1.0 - 1e-4)
        )
        assert np.max(np.abs(grad[mask] - wave.dudz[mask])) <= 1e-4

    def test_halving_eps_reproduces_profile(self, wave):
        other = assemble_wave(BASE, CSTAR, eps=5e-7)
        lo = max(wave.z.min(), other.z.min())
        hi = min(wave.z.max(), other.z.max())
        zz = np.linspace(lo, hi, 50001)
        diff = np.abs(np.interp(zz, wave.z, wave.u) - np.interp(zz, other.z, other.u))
        assert diff.max() < 1e-6

    def test_oscillatory_regime_below_cstar(self):
        w = assemble_wave(BASE, 0.4)
        assert w.regime == "OscillatoryTail"
        assert w.u.min() < 0.0

    def test_shock_regime_detection_only(self):
        w = assemble_wave(DHAT, 0.32, kin=KIN)
        assert w.regime == "ShockRegime"
        assert w.z.size == 0

    def test_shifted_root_smooth_above_threshold(self):
        thr = beta_node_threshold(DHAT, KIN)
        assert thr == pytest.approx(2.0 * math.sqrt(0.0315), rel=1e-12)
        w = assemble_wave(DHAT, 0.7, kin=KIN)
        assert w.regime == "SmoothMonotone"

    def test_no_connection_below_both_thresholds(self):
        with pytest.raises(NoWaveConnectionError):
            assemble_wave(BASE, 0.2)
