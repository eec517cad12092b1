import math

import numpy as np
import pytest

from iwkb.errors import DomainError, ExtrapolationError, SingularityError
from iwkb.potentials import (
    REFERENCE_PARAMS,
    ConstantPotential,
    ExponentialPotential,
    KerrDiracPotential,
    PhysicalParams,
    QuadraticPotential,
    RectangularBarrier,
    TabulatedPotential,
    eval_potential,
    horizon_radius,
    inverse_tortoise,
    kerr_dirac_potential,
    sample_potential,
    tortoise_coordinate,
    tortoise_derivative,
)


class TestHorizon:
    def test_schwarzschild(self):
        assert horizon_radius(PhysicalParams(a=0.0)) == pytest.approx(2.0, abs=1e-14)

    def test_reference_spin_matches_quadratic_root(self):
        # independent oracle: larger root of r^2 - 2 M r + a^2
        a, M = 0.5, 1.0
        root = (2 * M + math.sqrt(4 * M * M - 4 * a * a)) / 2
        rp = horizon_radius(REFERENCE_PARAMS)
        assert rp == pytest.approx(root, abs=1e-14)
        assert rp == pytest.approx(1.8660254, abs=1e-7)
        assert abs(REFERENCE_PARAMS.delta(rp)) < 1e-12

    def test_near_extremal_still_defined(self):
        rp = horizon_radius(PhysicalParams(a=1.0 - 1e-12))
        assert rp == pytest.approx(1.0, abs=2e-6)

    def test_extremal_rejected(self):
        with pytest.raises(DomainError):
            PhysicalParams(a=1.0)
        with pytest.raises(DomainError):
            PhysicalParams(a=1.5)


class TestPhysicalParams:
    def test_zero_frequency_rejected(self):
        with pytest.raises(DomainError):
            PhysicalParams(a=0.5, sigma=0.0)

    def test_negative_mass_rejected(self):
        with pytest.raises(DomainError):
            PhysicalParams(a=0.5, m_p=-0.1)


class TestKerrDiracPotential:
    def test_vanishes_at_horizon(self):
        rp = horizon_radius(REFERENCE_PARAMS)
        v = kerr_dirac_potential(REFERENCE_PARAMS, rp + 1e-10)
        assert 0 < v < 1e-5

    def test_near_horizon_sqrt_scaling(self):
        # every surviving term carries Delta^(1/2); V ~ C sqrt(eps)
        rp = horizon_radius(REFERENCE_PARAMS)
        v1 = kerr_dirac_potential(REFERENCE_PARAMS, rp + 1e-8)
        v2 = kerr_dirac_potential(REFERENCE_PARAMS, rp + 4e-8)
        assert v2 / v1 == pytest.approx(2.0, rel=1e-3)

    def test_large_r_limit_is_particle_mass_squared(self):
        # leading order of the formula at large r is m_p^2 = 0.64;
        # verified numerically by the 1e4 -> 1e5 trend
        v4 = kerr_dirac_potential(REFERENCE_PARAMS, 1e4)
        v5 = kerr_dirac_potential(REFERENCE_PARAMS, 1e5)
        assert abs(v4 - 0.64) <= 1e-3
        assert abs(v5 - 0.64) < abs(v4 - 0.64)

    def test_large_r_empirical_bound(self):
        for r in (1e3, 2e3, 5e3, 1e4):
            assert abs(kerr_dirac_potential(REFERENCE_PARAMS, r) - 0.64) <= 10.0 / r

    def test_value_at_310(self):
        # frozen from direct evaluation; the five-segment replacement's
        # asymptote 0.63543098 + tail gives 0.6356578, within 3e-4
        v = kerr_dirac_potential(REFERENCE_PARAMS, 310.0)
        assert v == pytest.approx(0.635881050673589, rel=1e-12)
        assert abs(v - 0.6356578) < 3e-4

    def test_inside_horizon_rejected(self):
        with pytest.raises(DomainError):
            kerr_dirac_potential(REFERENCE_PARAMS, 1.5)

    def test_alternative_omega_reading_changes_values(self):
        v_sq = kerr_dirac_potential(REFERENCE_PARAMS, 310.0, omega_squared=True)
        v_lin = kerr_dirac_potential(REFERENCE_PARAMS, 310.0, omega_squared=False)
        assert v_lin != pytest.approx(v_sq, rel=1e-3)

    def test_vanishing_denominator_reported(self):
        # a tiny negative frequency drives the denominator through zero
        from scipy.optimize import brentq

        params = PhysicalParams(a=0.0, M=1.0, m_p=1.0, sigma=-1e-3, lam=1.0, m=-0.5)

        def den(r):
            return params.omega_sq(r) * (1.0 + r * r) + 1.0 * params.delta(r) / (
                2.0 * params.sigma
            )

        root = brentq(den, 2.0001, 2.1, xtol=1e-15)
        with pytest.raises(SingularityError) as err:
            kerr_dirac_potential(params, root)
        assert f"{root:.3f}"[:4] in str(err.value)


class TestTortoise:
    def test_monotone_on_random_pairs(self):
        rng = np.random.default_rng(20260809)
        rp = horizon_radius(REFERENCE_PARAMS)
        for _ in range(100):
            r1, r2 = sorted(rng.uniform(rp + 1e-6, 1e3, size=2))
            if r1 == r2:
                continue
            assert tortoise_coordinate(REFERENCE_PARAMS, r1) < tortoise_coordinate(
                REFERENCE_PARAMS, r2
            )

    def test_derivative_matches_finite_difference(self):
        rng = np.random.default_rng(7)
        rp = horizon_radius(REFERENCE_PARAMS)
        for r in rng.uniform(rp + 0.05, 100.0, size=50):
            h = 1e-6 * max(1.0, r)
            fd = (
                tortoise_coordinate(REFERENCE_PARAMS, r + h)
                - tortoise_coordinate(REFERENCE_PARAMS, r - h)
            ) / (2 * h)
            assert fd == pytest.approx(
                tortoise_derivative(REFERENCE_PARAMS, r), rel=1e-6
            )

    def test_derivative_at_10_is_omega_sq_over_delta(self):
        params = REFERENCE_PARAMS
        expected = params.omega_sq(10.0) / params.delta(10.0)
        assert tortoise_derivative(params, 10.0) == pytest.approx(expected, rel=1e-14)

    def test_diverges_at_horizon(self):
        rp = horizon_radius(REFERENCE_PARAMS)
        assert tortoise_coordinate(REFERENCE_PARAMS, rp + 1e-10) < -40.0

    def test_log_growth_at_infinity(self):
        # x - r grows only logarithmically
        for r in (1e3, 1e5, 1e7):
            x = tortoise_coordinate(REFERENCE_PARAMS, r)
            assert abs(x - r) < 10.0 * math.log(r)

    def test_inverse_round_trip(self):
        rp = horizon_radius(REFERENCE_PARAMS)
        for r in (rp + 1e-3, 3.0, 10.0, 250.0):
            x = tortoise_coordinate(REFERENCE_PARAMS, r)
            assert inverse_tortoise(REFERENCE_PARAMS, x) == pytest.approx(r, rel=1e-10)


class TestAnalyticVariants:
    def test_constant(self):
        spec = ConstantPotential(0.5)
        assert eval_potential(spec, 12.3) == 0.5
        assert np.all(eval_potential(spec, np.array([-1.0, 0.0, 4.0])) == 0.5)

    def test_rectangular(self):
        spec = RectangularBarrier(2.0, -1.0, 1.0)
        assert spec.evaluate(0.0) == 2.0
        assert spec.evaluate(1.5) == 0.0

    def test_exponential_row_value(self):
        # second range of the built-in table: V(0) = a + b
        spec = ExponentialPotential(0.603, 0.415646, 8.79)
        assert spec.evaluate(0.0) == pytest.approx(1.018646, abs=1e-12)

    def test_quadratic(self):
        spec = QuadraticPotential(1.0, -2.0, 0.5)
        assert spec.evaluate(2.0) == pytest.approx(1.0 - 4.0 + 2.0, abs=1e-14)

    def test_exponential_requires_nonzero_scale(self):
        with pytest.raises(DomainError):
            ExponentialPotential(0.0, 1.0, 0.0)


class TestTabulated:
    def test_reproduces_constant(self):
        xs = np.linspace(0, 10, 11)
        spec = TabulatedPotential(xs, np.full(11, 0.5))
        mids = 0.5 * (xs[:-1] + xs[1:])
        assert np.allclose(spec.evaluate(mids), 0.5, atol=1e-14)

    def test_no_extrapolation(self):
        spec = TabulatedPotential([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
        with pytest.raises(ExtrapolationError):
            spec.evaluate(2.5)

    def test_needs_increasing_x(self):
        with pytest.raises(DomainError):
            TabulatedPotential([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])

    def test_interpolation_order(self):
        # halving the spacing must shrink the max error by >= 4x
        target = ExponentialPotential(0.2, 0.5, 3.0)
        probe = np.linspace(0.05, 9.95, 400)
        errs = []
        for n in (41, 81):
            xs = np.linspace(0, 10, n)
            tab = TabulatedPotential(xs, target.evaluate(xs))
            errs.append(np.max(np.abs(tab.evaluate(probe) - target.evaluate(probe))))
        assert errs[0] / errs[1] >= 4.0


class TestKerrDiracSpec:
    def test_identity_map_sampling(self):
        spec = KerrDiracPotential(REFERENCE_PARAMS, coord_map="identity")
        grid = np.linspace(2.0, 310.0, 1000)
        xs, vs = sample_potential(spec, grid)
        assert xs.shape == vs.shape == (1000,)
        assert np.all(vs > 0)
        assert np.all(np.diff(vs) > 0)
        assert vs[-1] == pytest.approx(0.6358810506735, rel=1e-10)

    def test_tortoise_map(self):
        spec = KerrDiracPotential(REFERENCE_PARAMS, coord_map="tortoise")
        r = 10.0
        x = tortoise_coordinate(REFERENCE_PARAMS, r)
        assert spec.evaluate(x) == pytest.approx(
            kerr_dirac_potential(REFERENCE_PARAMS, r), rel=1e-9
        )

    def test_user_table_map(self):
        rs = np.linspace(2.0, 300.0, 500)
        xs = tortoise_coordinate(REFERENCE_PARAMS, rs)
        spec = KerrDiracPotential(REFERENCE_PARAMS, coord_map=(rs, xs))
        mid = 0.5 * (xs[10] + xs[11])
        direct = KerrDiracPotential(REFERENCE_PARAMS, coord_map="tortoise")
        assert spec.evaluate(mid) == pytest.approx(direct.evaluate(mid), rel=1e-6)

    def test_constant_rows(self):
        xs, vs = sample_potential(ConstantPotential(0.5), [0.0, 1.0, 2.0])
        assert list(xs) == [0.0, 1.0, 2.0]
        assert list(vs) == [0.5, 0.5, 0.5]

    def test_empty_grid_rejected(self):
        spec = ConstantPotential(0.5)
        with pytest.raises(DomainError):
            sample_potential(spec, [])
