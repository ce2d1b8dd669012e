import math

import numpy as np
import pytest

from netamp.rs_potential import GridSpec, minimize, optimality_check, rs_value
from netamp.state_evolution import fixed_point, predicted_errors

# frozen MC value for the scalar-channel MI at (mu, xi) = (1, 1),
# five-atom prior, kappa = 1.5, Delta = 2 (1e6 draws, seed 20240817)
MI_SPOT_MC, MI_SPOT_TOL = 0.234843, 1.9e-3


class TestRsValue:
    def test_constant_b_at_origin(self, b_zero, quad):
        # B = 0 prior at (0, 0): only the lam rho^2 / 4 term survives
        val = rs_value(0.0, 0.0, b_zero, lam=2.0, kappa=1.0, Delta=1.0, quad=quad)
        assert val == pytest.approx(2.0 * b_zero.rho**2 / 4.0, abs=1e-12)

    def test_spot_value_vs_mc_composite(self, five_atom, quad):
        got = rs_value(1.0, 1.0, five_atom, lam=2.0, kappa=1.5, Delta=2.0, quad=quad)
        closed = (2.0 * 0.4**2 / 4.0 + 1.0 / (4.0 * 2.0)
                  + 0.75 * (math.log(2.0) - 0.5) - 0.5 * 0.4)
        assert got == pytest.approx(closed + MI_SPOT_MC, abs=MI_SPOT_TOL)

    def test_lambda_zero_branch(self, five_atom, quad):
        val = rs_value(0.0, 0.5, five_atom, lam=0.0, kappa=1.5, Delta=1.0, quad=quad)
        assert np.isfinite(val)
        with pytest.raises(ValueError):
            rs_value(0.1, 0.5, five_atom, lam=0.0, kappa=1.5, Delta=1.0, quad=quad)

    def test_domain(self, five_atom, quad):
        with pytest.raises(ValueError):
            rs_value(-0.1, 0.0, five_atom, 1.0, 1.0, 1.0, quad)


class TestMinimize:
    def test_constant_b_minimizer_at_zero_xi(self, b_zero, quad):
        ev = minimize(b_zero, 2.0, 1.0, 1.0, quad=quad)
        assert ev.xi_bar == pytest.approx(0.0, abs=1e-6)

    def test_stationarity_at_minimizer(self, five_atom, quad):
        ev = minimize(five_atom, 2.0, 1.5, 1.0, quad=quad)
        assert ev.stationarity_residual <= 1e-4

    def test_matches_fixed_point_here(self, five_atom, quad):
        ev = minimize(five_atom, 2.0, 1.5, 1.0, quad=quad)
        fp = fixed_point(five_atom, 2.0, 1.5, 1.0, quad=quad)
        assert abs(ev.mu_bar - fp.mu_star) <= 1e-6
        assert abs(ev.xi_bar - fp.xi_star) <= 1e-6

    def test_value_below_candidates(self, five_atom, quad):
        ev = minimize(five_atom, 1.0, 1.5, 1.0, quad=quad)
        assert all(ev.value <= v + 1e-12 for _, _, v in ev.candidates)

    def test_lambda_zero(self, five_atom, quad):
        ev = minimize(five_atom, 0.0, 1.5, 1.0, quad=quad)
        fp = fixed_point(five_atom, 0.0, 1.5, 1.0, quad=quad)
        assert ev.mu_bar == 0.0
        assert abs(ev.xi_bar - fp.xi_star) <= 1e-6

    def test_grid_refinement_stability(self, five_atom, quad):
        a = minimize(five_atom, 2.0, 1.5, 1.0, quad=quad, grid=GridSpec(n_mu=20, n_xi=20))
        b = minimize(five_atom, 2.0, 1.5, 1.0, quad=quad, grid=GridSpec(n_mu=40, n_xi=40))
        assert abs(a.mu_bar - b.mu_bar) <= 1e-6
        assert abs(a.xi_bar - b.xi_bar) <= 1e-6

    def test_mi_nonnegative(self, five_atom, b_zero, quad):
        assert minimize(five_atom, 1.0, 1.5, 2.0, quad=quad).value >= -1e-12
        # degenerate-ish prior: tiny mutual information
        ev = minimize(b_zero, 1e-6, 1.0, 1.0, quad=quad)
        assert -1e-12 <= ev.value <= 1e-6


class TestOptimalityCheck:
    def test_constant_b_coincides(self, b_zero):
        rep = optimality_check(b_zero, 2.0, 1.0, 1.0)
        assert rep.coincide

    def test_reference_config_coincides(self, pm7):
        rep = optimality_check(pm7, 3.0, 1.0, 1.0)
        assert rep.coincide
        mse_sig, mse_beta = predicted_errors(rep.fixed_point, pm7, 3.0, 1.0)
        assert rep.mmse_pred == pytest.approx(mse_sig, abs=1e-6)
        assert rep.y_mmse_pred == pytest.approx(mse_beta, abs=1e-6)

    def test_lambda_zero_coincides(self, pm1):
        rep = optimality_check(pm1, 0.0, 1.0, 1.0)
        assert rep.coincide
        assert rep.mu_bar == 0.0
        assert rep.fixed_point.mu_star == 0.0
