import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditpool import (
    DegenerateMeasureError,
    DiscreteTypeMeasure,
    FirmType,
    NoConvergenceError,
    TimeGrid,
    TypeAtom,
    compute_f,
    effective_contagion_weight,
    f_derivative,
    homogeneous_measure,
    riccati_for_measure,
    solve_homogeneous_f,
    solve_limit,
    solve_q,
)

from conftest import BASE, BASE_LAMBDA_INIT


def solve_pool(measure, grid, **kw):
    riccati = riccati_for_measure(measure, grid)
    picard = solve_q(measure, riccati, grid, **kw)
    return riccati, picard


class TestSolveQ:
    def test_zero_contagion_sensitivity(self, grid_coarse):
        m = homogeneous_measure(FirmType(4.0, 0.5, 0.9, beta_c=0.0), 0.5)
        _, picard = solve_pool(m, grid_coarse)
        assert picard.iterations == 1
        assert np.all(picard.q.values == 0.0)

    def test_zero_forcing(self, grid_coarse):
        m = homogeneous_measure(FirmType(4.0, 0.0, 0.9, beta_c=2.0), 0.0)
        _, picard = solve_pool(m, grid_coarse)
        assert picard.iterations == 1
        assert np.all(picard.q.values == 0.0)

    def test_base_case_fixed_point(self, base_measure, grid_1k):
        _, picard = solve_pool(base_measure, grid_1k)
        # at t=0 the convolutions vanish: q(0) = beta_c * b_dot(0) * lam0
        assert picard.q.values[0] == pytest.approx(1.0, abs=1e-12)
        assert picard.residual <= 1e-10
        assert picard.iterations <= 200
        assert np.all(picard.q.values >= 0.0)

    def test_residuals_eventually_decreasing(self, base_measure, grid_1k):
        _, picard = solve_pool(base_measure, grid_1k)
        h = picard.residual_history
        assert len(h) >= 4
        assert all(h[i + 1] <= h[i] for i in range(2, len(h) - 1))

    def test_under_relaxation_reaches_same_point(self, base_measure, grid_coarse):
        _, plain = solve_pool(base_measure, grid_coarse, tol=1e-11)
        _, damped = solve_pool(base_measure, grid_coarse, tol=1e-11, relaxation=0.5)
        assert plain.q.sup_distance(damped.q) < 1e-9
        assert damped.iterations > plain.iterations

    def test_no_convergence_reported(self, base_measure, grid_coarse):
        with pytest.raises(NoConvergenceError) as err:
            solve_pool(base_measure, grid_coarse, max_iter=2)
        assert err.value.iterations == 2
        assert err.value.residual > err.value.tol

    def test_input_validation(self, base_measure, grid_coarse):
        riccati = riccati_for_measure(base_measure, grid_coarse)
        with pytest.raises(ValueError):
            solve_q(base_measure, riccati, grid_coarse, tol=0.0)
        with pytest.raises(ValueError):
            solve_q(base_measure, riccati, grid_coarse, relaxation=1.5)
        with pytest.raises(ValueError):
            solve_q(base_measure, riccati, TimeGrid(1.0, 100))
        with pytest.raises(ValueError):
            solve_q(base_measure, (), grid_coarse)


class TestComputeF:
    def test_starts_at_zero_monotone_bounded(self, base_measure, grid_1k):
        riccati, picard = solve_pool(base_measure, grid_1k)
        f = compute_f(base_measure, riccati, picard.q)
        assert f.values[0] == 0.0
        assert np.all(np.diff(f.values) >= 0.0)
        assert np.all((f.values >= 0.0) & (f.values <= 1.0 + 1e-12))

    def test_contagion_free_explicit_formula(self, grid_1k):
        # independent oracle: F = 1 - exp(-alpha lbar int_0^t b - b(t) lam0)
        p = FirmType(4.0, 0.5, 0.9, beta_c=0.0)
        m = homogeneous_measure(p, 0.5)
        riccati, picard = solve_pool(m, grid_1k)
        f = compute_f(m, riccati, picard.q)
        b = riccati[0].b.values
        dt = grid_1k.dt
        running = np.concatenate(([0.0], np.cumsum(0.5 * dt * (b[1:] + b[:-1]))))
        expected = 1.0 - np.exp(-4.0 * 0.5 * running - b * 0.5)
        assert np.max(np.abs(f.values - expected)) < 1e-10

    def test_constant_intensity_exponential(self, grid_1k):
        # alpha = sigma = beta_c = 0: b(t) = t, so F = 1 - exp(-c t) exactly
        c = 0.5
        m = homogeneous_measure(FirmType(0.0, 0.0, 0.0, 0.0), c)
        riccati, picard = solve_pool(m, grid_1k)
        f = compute_f(m, riccati, picard.q)
        expected = 1.0 - np.exp(-c * grid_1k.points())
        assert np.max(np.abs(f.values - expected)) < 1e-12

    def test_slope_decomposition_matches_finite_differences(self, base_measure, grid_1k):
        riccati, picard = solve_pool(base_measure, grid_1k)
        f = compute_f(base_measure, riccati, picard.q)
        slope = f_derivative(base_measure, riccati, picard.q)
        dt = grid_1k.dt
        central = (f.values[2:] - f.values[:-2]) / (2.0 * dt)
        assert np.max(np.abs(slope.values[1:-1] - central)) < 1e-4
        assert np.all(slope.values >= 0.0)


class TestHomogeneousRoute:
    def test_zero_contagion_equals_explicit_formula(self, grid_1k):
        p = FirmType(4.0, 0.5, 0.9, beta_c=0.0)
        f = solve_homogeneous_f(p, 0.5, grid_1k)
        m = homogeneous_measure(p, 0.5)
        riccati, picard = solve_pool(m, grid_1k)
        via_q = compute_f(m, riccati, picard.q)
        assert f.sup_distance(via_q) < 1e-12

    def test_zero_start_zero_level(self, grid_coarse):
        f = solve_homogeneous_f(FirmType(4.0, 0.0, 0.9, 2.0), 0.0, grid_coarse)
        assert np.all(f.values == 0.0)

    def test_two_route_consistency_scales_quadratically(self):
        # the routes share b and the trapezoid rule but discretize different
        # equations; their gap is discretization error, O(dt^2)
        gaps = []
        for n_steps in (500, 1000, 2000):
            grid = TimeGrid(1.0, n_steps)
            m = homogeneous_measure(BASE, BASE_LAMBDA_INIT)
            riccati, picard = solve_pool(m, grid)
            via_q = compute_f(m, riccati, picard.q)
            direct = solve_homogeneous_f(BASE, BASE_LAMBDA_INIT, grid)
            gaps.append(via_q.sup_distance(direct))
        assert gaps[1] < 1e-6
        assert gaps[0] / gaps[1] > 3.0
        assert gaps[1] / gaps[2] > 3.0

    def test_no_convergence(self, grid_coarse):
        with pytest.raises(NoConvergenceError):
            solve_homogeneous_f(BASE, BASE_LAMBDA_INIT, grid_coarse, max_iter=2)


class TestEffectiveContagionWeight:
    def test_homogeneous_equals_sensitivity(self, base_measure, grid_coarse):
        riccati, picard = solve_pool(base_measure, grid_coarse)
        for k in (0, 100, 200):
            b = effective_contagion_weight(base_measure, riccati, picard.q, k)
            assert b == pytest.approx(2.0, abs=1e-12)

    def test_symmetric_two_atom_mixture(self, grid_coarse):
        shared = dict(alpha=4.0, lambda_bar=0.5, sigma=0.9)
        m = DiscreteTypeMeasure(
            (
                TypeAtom(FirmType(beta_c=0.0, **shared), 0.5, 0.5),
                TypeAtom(FirmType(beta_c=2.0, **shared), 0.5, 0.5),
            )
        )
        riccati, picard = solve_pool(m, grid_coarse)
        assert effective_contagion_weight(m, riccati, picard.q, 0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_bounded_by_max_sensitivity(self, grid_coarse):
        m = DiscreteTypeMeasure(
            (
                TypeAtom(FirmType(2.0, 0.3, 0.5, beta_c=0.0), 0.2, 0.3),
                TypeAtom(FirmType(6.0, 0.8, 1.2, beta_c=3.0), 0.9, 0.7),
            )
        )
        riccati, picard = solve_pool(m, grid_coarse)
        for k in range(0, grid_coarse.n_points, 20):
            b = effective_contagion_weight(m, riccati, picard.q, k)
            assert 0.0 <= b <= 3.0

    def test_degenerate_measure(self, grid_coarse):
        m = homogeneous_measure(FirmType(4.0, 0.0, 0.9, 2.0), 0.0)
        riccati, picard = solve_pool(m, grid_coarse)
        with pytest.raises(DegenerateMeasureError):
            effective_contagion_weight(m, riccati, picard.q, 0)


class TestSolveLimit:
    def test_bundles_everything(self, base_measure, grid_1k):
        sol = solve_limit(base_measure, grid_1k)
        assert sol.grid == grid_1k
        assert len(sol.riccati) == 1
        assert sol.residual <= 1e-10
        assert sol.q.values[0] == pytest.approx(1.0, abs=1e-12)
        assert sol.f.values[0] == 0.0

    @given(
        alpha=st.floats(0.0, 6.0),
        sigma=st.floats(0.0, 2.0),
        lambda_bar=st.floats(0.0, 1.5),
        lam0=st.floats(0.0, 1.5),
        beta_c=st.floats(0.0, 4.0),
    )
    @settings(max_examples=30, deadline=None)
    def test_limit_curves_well_formed(self, alpha, sigma, lambda_bar, lam0, beta_c):
        m = homogeneous_measure(FirmType(alpha, lambda_bar, sigma, beta_c), lam0)
        sol = solve_limit(m, TimeGrid(0.5, 100), tol=1e-8)
        assert np.all(sol.q.values >= 0.0)
        assert sol.f.values[0] == 0.0
        assert np.all(np.diff(sol.f.values) >= -1e-12)
        assert np.all(sol.f.values <= 1.0 + 1e-12)
