import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netamp.errors import DegenerateChannel, InconsistentObservation
from netamp.priors import (PriorSpec, QuadratureRule, ScalarChannelParams,
                           denoise_beta, denoise_sigma, denoiser_partials,
                           joint_atoms, mmse1, mmse2, scalar_mi, spike_slab)

# Frozen Monte-Carlo oracle values.  Windowed kernel average of the latent
# given observations in a shrinking window (2e8 draws, bandwidths 0.06/0.03,
# Richardson-extrapolated in h^2); seeds 1234/5678.
DENOISE_SIGMA_MC = 0.3892     # E[Sigma | sig-obs 0.5, B-obs 0.3], eta=nu=tau=1
DENOISE_BETA_MC = 0.1139      # E[B | B-obs 0.3, sig-obs 0.5], same channels
DENOISE_MC_TOL = 2.5e-3       # ~1.5 oracle standard errors

# Direct MC (1e6 draws, analytic inner posterior over atoms), seed 20240817.
MMSE1_MC, MMSE1_TOL = 0.193106, 5.6e-4          # 3 standard errors
MMSE2_MC, MMSE2_TOL = 0.356206, 1.6e-3
SCALAR_MI_MC, SCALAR_MI_TOL = 0.408401, 2.4e-3  # five-atom, mu=2 xi=1 k=1.5 D=1

CH = ScalarChannelParams(eta=1.0, nu=1.0, tau=1.0)


class TestPriorSpec:
    def test_joint_atoms_product_law(self):
        pr = spike_slab(0.5, [1.0])
        assert joint_atoms(pr) == [(0, 0.0, 0.5), (1, 1.0, 0.5)]

    def test_joint_atoms_pm1_slab(self):
        pr = spike_slab(0.7, [-1.0, 1.0])
        atoms = joint_atoms(pr)
        weights = {(s, b): w for s, b, w in atoms}
        assert weights[(0, 0.0)] == pytest.approx(0.3)
        assert weights[(1, -1.0)] == pytest.approx(0.35)
        assert weights[(1, 1.0)] == pytest.approx(0.35)

    def test_joint_atoms_five_atom(self, five_atom):
        atoms = joint_atoms(five_atom)
        assert len(atoms) == 6
        slab = [w for s, _, w in atoms if s == 1]
        assert np.allclose(slab, 0.08)
        assert sum(w for _, _, w in atoms) == pytest.approx(1.0)
        assert sum(w for s, _, w in atoms if s == 1) == pytest.approx(0.4)

    def test_validation(self):
        with pytest.raises(ValueError):
            PriorSpec(rho=0.0, atoms0=((0.0, 1.0),), atoms1=((1.0, 1.0),))
        with pytest.raises(ValueError):
            PriorSpec(rho=0.5, atoms0=(), atoms1=((1.0, 1.0),))
        with pytest.raises(ValueError):
            PriorSpec(rho=0.5, atoms0=((0.0, 0.7),), atoms1=((1.0, 1.0),))
        with pytest.raises(ValueError):
            PriorSpec(rho=0.5, atoms0=((0.0, 1.5), (1.0, -0.5)), atoms1=((1.0, 1.0),))

    def test_spike_slab_predicates(self, pm1, b_indep):
        assert pm1.is_spike_slab()
        assert pm1.slab_separation() == 1.0
        assert not b_indep.is_spike_slab()
        assert pm1.s_max == 1.0

    def test_quadrature_rule(self):
        q = QuadratureRule.gauss_hermite(41)
        assert q.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(q.nodes, -q.nodes[::-1])
        assert q.order == 41


class TestDenoisers:
    def test_no_information_returns_rho(self, b_indep):
        ch = ScalarChannelParams(eta=0.0, nu=1.0, tau=1.0)
        for x, y in [(0.3, -2.0), (5.0, 0.0), (-1.0, 1.0)]:
            assert denoise_sigma(x, y, ch, b_indep) == pytest.approx(b_indep.rho)

    def test_exact_conditioning_on_b(self, pm1):
        ch = ScalarChannelParams(eta=1.0, nu=1.0, tau=0.0)
        assert denoise_sigma(0.2, 1.0, ch, pm1) == pytest.approx(1.0)
        assert denoise_sigma(0.2, 0.0, ch, pm1) == pytest.approx(0.0)

    def test_exact_conditioning_inconsistent(self, pm1):
        ch = ScalarChannelParams(eta=1.0, nu=1.0, tau=0.0)
        with pytest.raises(InconsistentObservation):
            denoise_sigma(0.2, 0.5, ch, pm1)

    def test_denoise_beta_exact_atom(self, five_atom):
        ch = ScalarChannelParams(eta=1.0, nu=1.0, tau=0.0)
        assert denoise_beta(2.0, 0.3, ch, five_atom) == pytest.approx(2.0)
        assert denoise_beta(-1.0, 0.3, ch, five_atom) == pytest.approx(-1.0)

    def test_denoise_beta_uninformative_is_prior_mean(self, five_atom):
        ch = ScalarChannelParams(eta=0.0, nu=1.0, tau=1e6)
        val = denoise_beta(0.3, 0.1, ch, five_atom)
        assert val == pytest.approx(five_atom.mean_b(), abs=1e-4)

    def test_sigma_denoiser_matches_mc_oracle(self, pm1):
        assert denoise_sigma(0.5, 0.3, CH, pm1) == pytest.approx(
            DENOISE_SIGMA_MC, abs=DENOISE_MC_TOL)

    def test_beta_denoiser_matches_mc_oracle(self, pm1):
        assert denoise_beta(0.3, 0.5, CH, pm1) == pytest.approx(
            DENOISE_BETA_MC, abs=DENOISE_MC_TOL)

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(-30, 30), y=st.floats(-30, 30),
           eta=st.floats(0, 5), nu=st.floats(0.05, 5), tau=st.floats(0.05, 5))
    def test_bounds(self, five_atom, x, y, eta, nu, tau):
        ch = ScalarChannelParams(eta=eta, nu=nu, tau=tau)
        f = denoise_sigma(x, y, ch, five_atom)
        z = denoise_beta(y, x, ch, five_atom)
        assert 0.0 <= f <= 1.0
        assert -five_atom.s_max <= z <= five_atom.s_max

    def test_vectorized_matches_scalar(self, pm1, rng):
        xs, ys = rng.normal(size=8), rng.normal(size=8)
        vec = denoise_sigma(xs, ys, CH, pm1)
        for i in range(8):
            assert vec[i] == pytest.approx(denoise_sigma(xs[i], ys[i], CH, pm1))


class TestPartials:
    def test_independence_kills_cross_partials(self, b_indep):
        for x, y in [(0.1, 0.2), (-1.5, 2.0)]:
            _, dfy, _, dzy = denoiser_partials(x, y, CH, b_indep)
            assert dfy == pytest.approx(0.0, abs=1e-14)
            assert dzy == pytest.approx(0.0, abs=1e-14)

    def test_sign_of_sigma_partial(self, five_atom, rng):
        xs, ys = rng.normal(size=50), rng.normal(size=50)
        dfx, _, dzx, _ = denoiser_partials(xs, ys, CH, five_atom)
        assert np.all(dfx >= 0.0)      # eta/nu^2 * posterior variance
        assert np.all(dzx >= 0.0)

    def test_matches_finite_differences_on_grid(self, five_atom, rng):
        """All four partials vs central differences at 100 random points."""
        h = 1e-5
        xs = rng.normal(size=100) * 2
        ys = rng.normal(size=100) * 2
        ch = ScalarChannelParams(eta=0.8, nu=1.3, tau=0.9)
        dfx, dfy, dzx, dzy = denoiser_partials(xs, ys, ch, five_atom)
        f = lambda a, b: denoise_sigma(a, b, ch, five_atom)
        z = lambda a, b: denoise_beta(a, b, ch, five_atom)
        fd_fx = (f(xs + h, ys) - f(xs - h, ys)) / (2 * h)
        fd_fy = (f(xs, ys + h) - f(xs, ys - h)) / (2 * h)
        fd_zx = (z(ys + h, xs) - z(ys - h, xs)) / (2 * h)
        fd_zy = (z(ys, xs + h) - z(ys, xs - h)) / (2 * h)
        scale = lambda fd: np.maximum(np.abs(fd), 1e-3)
        assert np.max(np.abs(dfx - fd_fx) / scale(fd_fx)) < 1e-6
        assert np.max(np.abs(dfy - fd_fy) / scale(fd_fy)) < 1e-6
        assert np.max(np.abs(dzx - fd_zx) / scale(fd_zx)) < 1e-6
        assert np.max(np.abs(dzy - fd_zy) / scale(fd_zy)) < 1e-6

    def test_degenerate_channel_raises(self, pm1):
        with pytest.raises(DegenerateChannel):
            denoiser_partials(0.1, 0.0, ScalarChannelParams(1.0, 0.0, 1.0), pm1)
        with pytest.raises(DegenerateChannel):
            denoiser_partials(0.1, 0.0, ScalarChannelParams(1.0, 1.0, 0.0), pm1)


class TestMmse:
    def test_mmse1_infinite_snr(self, pm1, quad):
        assert mmse1(1e8, 0.5, pm1, 1.0, 1.0, quad) <= 1e-6

    def test_mmse1_no_information(self, b_indep, quad):
        # mu = 0 and B carrying nothing about Sigma: Var(Sigma) exactly
        rho = b_indep.rho
        val = mmse1(0.0, 1.0, b_indep, 1.0, 1.0, quad)
        assert val == pytest.approx(rho * (1 - rho), abs=1e-12)

    def test_mmse1_matches_mc(self, pm1, quad):
        assert mmse1(1.0, 0.5, pm1, 1.0, 1.0, quad) == pytest.approx(
            MMSE1_MC, abs=MMSE1_TOL)

    def test_mmse2_zero_for_constant_b(self, b_zero, quad):
        assert mmse2(1.0, 1.0, b_zero, 1.0, 1.0, quad) == pytest.approx(0.0, abs=1e-14)

    def test_mmse2_matches_mc(self, pm1, quad):
        assert mmse2(1.0, 0.5, pm1, 1.0, 1.0, quad) == pytest.approx(
            MMSE2_MC, abs=MMSE2_TOL)

    def test_mmse2_approaches_var_b(self, pm1, quad):
        var_b = pm1.var_b()
        vals = [mmse2(0.0, xi, pm1, 1.0, 1.0, quad) for xi in (1.0, 10.0, 100.0, 1000.0)]
        assert all(np.diff(vals) > 0)
        assert vals[-1] == pytest.approx(var_b, rel=2e-2)
        assert vals[-1] <= var_b + 1e-12

    def test_bounds(self, five_atom, quad):
        rho = five_atom.rho
        for mu, xi in [(0.0, 0.0), (0.5, 0.3), (2.0, 1.5)]:
            m1 = mmse1(mu, xi, five_atom, 1.0, 1.5, quad)
            m2 = mmse2(mu, xi, five_atom, 1.0, 1.5, quad)
            assert -1e-12 <= m1 <= rho * (1 - rho) + 1e-12
            assert -1e-12 <= m2 <= five_atom.var_b() + 1e-12

    def test_monotone_in_mu_and_xi(self, five_atom, quad):
        mus = [0.0, 0.3, 1.0, 3.0]
        xis = [0.0, 0.5, 2.0, 8.0]
        for xi in xis:
            v1 = [mmse1(mu, xi, five_atom, 1.0, 1.5, quad) for mu in mus]
            v2 = [mmse2(mu, xi, five_atom, 1.0, 1.5, quad) for mu in mus]
            assert all(np.diff(v1) <= 1e-12)
            assert all(np.diff(v2) <= 1e-12)
        for mu in mus:
            v1 = [mmse1(mu, xi, five_atom, 1.0, 1.5, quad) for xi in xis]
            v2 = [mmse2(mu, xi, five_atom, 1.0, 1.5, quad) for xi in xis]
            assert all(np.diff(v1) >= -1e-12)
            assert all(np.diff(v2) >= -1e-12)

    def test_quadrature_doubling_stability(self, five_atom, quad, quad_double):
        for mu, xi in [(0.5, 0.5), (2.0, 1.0)]:
            for fn in (mmse1, mmse2, scalar_mi):
                a = fn(mu, xi, five_atom, 1.0, 1.5, quad)
                b = fn(mu, xi, five_atom, 1.0, 1.5, quad_double)
                assert abs(a - b) <= 1e-8

    def test_identity_with_posterior_second_moment(self, pm1, quad):
        """E[E[Sigma|obs]^2] = rho - mmse1 under the same quadrature."""
        from netamp.priors import _atom_arrays, _posterior

        mu, xi, Delta, kappa = 1.0, 0.5, 1.0, 1.0
        eta, nu, tau = math.sqrt(mu), 1.0, math.sqrt(Delta * (1 + xi) / kappa)
        sig, b, w = _atom_arrays(pm1)
        zs, wq = quad.nodes, quad.weights
        X = eta * sig[:, None, None] + nu * zs[None, None, :]
        Y = b[:, None, None] + tau * zs[None, :, None]
        X, Y = np.broadcast_arrays(X, Y)
        post = _posterior(X, Y, ScalarChannelParams(eta, nu, tau), pm1)
        fs = post @ sig
        wg = w[:, None, None] * wq[None, :, None] * wq[None, None, :]
        ef2 = float(np.sum(wg * fs**2))
        m1 = mmse1(mu, xi, pm1, Delta, kappa, quad)
        assert abs(ef2 - (pm1.rho - m1)) <= 1e-8

    def test_order_precondition(self, pm1):
        with pytest.raises(ValueError):
            mmse1(1.0, 1.0, pm1, 1.0, 1.0, QuadratureRule.gauss_hermite(11))


class TestScalarMi:
    def test_degenerate_prior_zero(self, quad):
        pr = PriorSpec(rho=1.0 - 1e-12, atoms0=((1.0, 1.0),), atoms1=((1.0, 1.0),))
        assert scalar_mi(1.0, 1.0, pr, 1.0, 1.0, quad) == pytest.approx(0.0, abs=1e-9)

    def test_pure_noise_zero(self, b_zero, quad):
        assert scalar_mi(0.0, 1.0, b_zero, 1.0, 1.0, quad) == pytest.approx(0.0, abs=1e-12)

    def test_matches_mc(self, five_atom, quad):
        assert scalar_mi(2.0, 1.0, five_atom, 1.0, 1.5, quad) == pytest.approx(
            SCALAR_MI_MC, abs=SCALAR_MI_TOL)

    def test_nonnegative(self, five_atom, quad):
        for mu, xi in [(0.0, 0.0), (0.1, 5.0), (3.0, 0.2)]:
            assert scalar_mi(mu, xi, five_atom, 2.0, 1.5, quad) >= -1e-12
