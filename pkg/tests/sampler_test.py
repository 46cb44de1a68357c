"""Tests for the data-augmentation sampler.

Copyright © 2018 The bvs developers

This file is part of bvs.

bvs is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

bvs is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with bvs.  If not, see <http://www.gnu.org/licenses/>.
"""
import math
import logging
import itertools

import numpy as np
import pytest
from scipy import stats

from bvs.exceptions import FileParseError, InputError, StatusError
from bvs.prior import (
    DIAGONAL, ModelIndicator, PriorConfig, build_slab_covariance,
    log_prior_model)
from bvs.sampler import (
    NEGATIVE, POSITIVE, SWAP, ChainConfig, ModelScorer, _mh_step,
    conditional_beta_draw, gibbs_latent_update, log_marginal_z,
    mh_model_update, propose_model_move, read_draws, run_chain,
    sample_truncated_normal, truncated_standard_normal, write_draws)

SHORT_CHAIN = ChainConfig(iterations=60, burn_in=10, thin=2, seed=7)


@pytest.fixture
def bound_z(simulated):
    rng = np.random.default_rng(11)
    return simulated.design[:, 1] + rng.standard_normal(simulated.n)


class TestTruncatedNormal:
    def test_half_normal_mean(self):
        """Truncating at zero gives the half-normal mean."""
        rng = np.random.default_rng(1)
        draws = truncated_standard_normal(np.zeros(200000), rng)

        assert draws.min() > 0
        assert draws.mean() == pytest.approx(math.sqrt(2 / math.pi), abs=0.01)

    def test_deep_tail(self):
        """Far tails are sampled by rejection and stay in the support."""
        rng = np.random.default_rng(2)
        draws = truncated_standard_normal(np.full(50000, 8.0), rng)
        expected = stats.norm.pdf(8.0) / stats.norm.sf(8.0)

        assert draws.min() > 8.0
        assert draws.mean() == pytest.approx(expected, abs=0.01)

    def test_sides(self):
        """Draws land on the requested side of zero."""
        rng = np.random.default_rng(3)
        positive = [
            sample_truncated_normal(-3.0, 0.5, POSITIVE, rng)
            for _ in range(200)]
        negative = [
            sample_truncated_normal(3.0, 0.5, NEGATIVE, rng)
            for _ in range(200)]

        assert min(positive) > 0
        assert max(negative) < 0

    def test_invalid_arguments(self):
        """Nonpositive scales and unknown sides are rejected."""
        rng = np.random.default_rng(4)
        with pytest.raises(InputError):
            sample_truncated_normal(0.0, 0.0, POSITIVE, rng)
        with pytest.raises(InputError):
            sample_truncated_normal(0.0, 1.0, "up", rng)

    @pytest.mark.parametrize("lower", [-8.0, -2.0, 2.0])
    def test_moments(self, lower):
        """Draws match the truncated normal mean and variance."""
        rng = np.random.default_rng(12)
        count = 200000
        draws = truncated_standard_normal(np.full(count, lower), rng)
        mean, var, kurtosis = stats.truncnorm.stats(
            lower, np.inf, moments="mvk")
        mean_se = math.sqrt(var / count)
        var_se = var * math.sqrt((kurtosis + 2) / count)

        assert abs(draws.mean() - mean) < 4 * mean_se
        assert abs(draws.var(ddof=1) - var) < 4 * var_se

    @pytest.mark.parametrize("mu,sigma", [(4.0, 0.5), (1.0, 0.5), (-1.0, 0.5)])
    def test_upper_truncated_moments(self, mu, sigma):
        """The negative side mirrors the positive one."""
        rng = np.random.default_rng(13)
        count = 20000
        draws = np.array([
            sample_truncated_normal(mu, sigma, NEGATIVE, rng)
            for _ in range(count)])
        mean, var, kurtosis = stats.truncnorm.stats(
            -np.inf, -mu / sigma, loc=mu, scale=sigma, moments="mvk")
        mean_se = math.sqrt(var / count)
        var_se = var * math.sqrt((kurtosis + 2) / count)

        assert draws.max() < 0
        assert abs(draws.mean() - mean) < 4 * mean_se
        assert abs(draws.var(ddof=1) - var) < 4 * var_se

    def test_no_bounds(self):
        """An empty set of bounds gives no draws."""
        rng = np.random.default_rng(14)
        assert truncated_standard_normal(np.empty(0), rng).shape == (0,)

    def test_latent_signs(self, simulated):
        """Latent utilities agree in sign with the outcome."""
        rng = np.random.default_rng(5)
        beta = np.array([0.0, 40.0, 0.0, 0.0])
        z = gibbs_latent_update(simulated, beta, rng)

        assert np.all((z > 0) == (simulated.outcome == 1))

    def test_null_coefficients(self, make_dataset):
        """With no signal each latent utility is half-normal."""
        rng = np.random.default_rng(15)
        n = 20000
        ds = make_dataset(rng.standard_normal((n, 1)), rng.integers(0, 2, n))
        z = gibbs_latent_update(ds, np.zeros(2), rng)
        se = math.sqrt((1 - 2 / math.pi) / n)

        assert abs(np.abs(z).mean() - math.sqrt(2 / math.pi)) < 4 * se
        assert np.all((z > 0) == (ds.outcome == 1))

    def test_no_individuals(self, make_dataset):
        """An empty dataset gives no latent utilities."""
        ds = make_dataset(np.empty((0, 2)), np.empty(0, dtype=int))
        z = gibbs_latent_update(ds, np.zeros(3), np.random.default_rng(16))
        assert z.shape == (0,)


class TestModelScorer:
    @pytest.mark.parametrize("policy", ["gprior", DIAGONAL])
    def test_dense_formula(self, simulated, bound_z, policy):
        """The marginal likelihood matches the dense Gaussian density."""
        cfg = PriorConfig.for_dataset(simulated.P, 1, slab_policy=policy)
        for bits in itertools.product((0, 1), repeat=simulated.P):
            gamma = ModelIndicator(bits)
            X = simulated.design[:, gamma.columns]
            covariance = np.eye(simulated.n) + X @ build_slab_covariance(
                simulated, gamma, cfg) @ X.T
            expected = stats.multivariate_normal.logpdf(
                bound_z, np.zeros(simulated.n), covariance)

            assert log_marginal_z(
                bound_z, gamma, simulated, cfg) == pytest.approx(
                    expected, abs=1e-8)

    def test_beta_draws(self, simulated, bound_z):
        """Coefficient draws center on the conditional posterior mean."""
        cfg = PriorConfig.for_dataset(simulated.P, 1)
        gamma = ModelIndicator((1, 0, 1))
        X = simulated.design[:, gamma.columns]
        precision = np.linalg.inv(
            build_slab_covariance(simulated, gamma, cfg)) + X.T @ X
        expected = np.linalg.solve(precision, X.T @ bound_z)

        scorer = ModelScorer(simulated, cfg).bind(bound_z)
        rng = np.random.default_rng(6)
        draws = np.array([scorer.draw_beta(gamma, rng) for _ in range(4000)])

        assert np.all(draws[:, 2] == 0.0)
        assert draws[:, [0, 1, 3]].mean(axis=0) == pytest.approx(
            expected, abs=0.02)

    def test_single_draw(self, simulated, bound_z):
        """Excluded coefficients are exactly zero."""
        cfg = PriorConfig.for_dataset(simulated.P, 1)
        beta = conditional_beta_draw(
            bound_z, ModelIndicator((0, 1, 0)), simulated, cfg,
            np.random.default_rng(8))

        assert beta.shape == (4,)
        assert beta[1] == 0.0 and beta[3] == 0.0

    def test_unbound(self, simulated):
        """Models can't be scored before z is bound."""
        scorer = ModelScorer(simulated, PriorConfig.for_dataset(3, 1))
        with pytest.raises(StatusError):
            scorer.log_marginal(ModelIndicator.empty(3))

    def test_prior_size_mismatch(self, simulated):
        """The prior must cover every factor."""
        with pytest.raises(InputError):
            ModelScorer(simulated, PriorConfig.for_dataset(2, 1))


class TestModelMoves:
    def test_flip_from_null(self):
        """Leaving the null model accounts for the swap mix."""
        rng = np.random.default_rng(9)
        proposal, log_ratio = propose_model_move(
            ModelIndicator.empty(3), (0.5, 0.5), rng)

        assert proposal.size == 1
        assert log_ratio == pytest.approx(math.log(0.5))

    def test_flip_from_full(self):
        """Leaving the full model accounts for the swap mix."""
        rng = np.random.default_rng(10)
        proposal, log_ratio = propose_model_move(
            ModelIndicator((1, 1, 1)), (0.5, 0.5), rng)

        assert proposal.size == 2
        assert log_ratio == pytest.approx(math.log(0.5))

    def test_swap(self, simulated, bound_z):
        """Swaps keep the model size and are symmetric."""
        scorer = ModelScorer(
            simulated, PriorConfig.for_dataset(3, 1)).bind(bound_z)
        rng = np.random.default_rng(12)
        gamma = ModelIndicator((1, 0, 0))
        for _ in range(50):
            proposal, log_ratio = propose_model_move(gamma, (0.0, 1.0), rng)
            assert proposal.size == 1
            assert log_ratio == 0.0
            _, move, _ = _mh_step(scorer, gamma, (0.0, 1.0), rng)
            assert move == SWAP

    def test_fixed_z_stationary(self, make_dataset):
        """Model moves given z leave the exact model posterior invariant."""
        rng = np.random.default_rng(13)
        factors = rng.standard_normal((30, 3))
        z = 0.4 * factors[:, 0] + rng.standard_normal(30)
        ds = make_dataset(factors, (z > 0).astype(int))
        cfg = PriorConfig.for_dataset(3, 1.5)
        scorer = ModelScorer(ds, cfg).bind(z)

        models = [
            ModelIndicator(bits)
            for bits in itertools.product((0, 1), repeat=3)]
        log_weights = np.array([
            scorer.log_marginal(gamma) + log_prior_model(gamma, cfg)
            for gamma in models])
        exact = np.exp(log_weights - log_weights.max())
        exact /= exact.sum()

        counts = dict.fromkeys((gamma.bits for gamma in models), 0)
        gamma = ModelIndicator.empty(3)
        steps = 100000
        for _ in range(steps):
            gamma, _, _ = _mh_step(scorer, gamma, (0.5, 0.5), rng)
            counts[gamma.bits] += 1
        visited = np.array([counts[model.bits] for model in models]) / steps

        assert 0.5 * np.abs(visited - exact).sum() < 0.02

    def test_excluded_by_prior(self, simulated, bound_z):
        """Factors with zero prior probability never enter."""
        cfg = PriorConfig((0.0, 0.5, 0.5), expected_model_size=1.0)
        scorer = ModelScorer(simulated, cfg).bind(bound_z)
        rng = np.random.default_rng(14)
        gamma = ModelIndicator.empty(3)
        for _ in range(300):
            gamma = mh_model_update(
                bound_z, gamma, simulated, cfg, rng, scorer=scorer)
            assert gamma.bits[0] == 0

    def test_collinear_proposal_rejected(self, make_dataset, caplog):
        """Proposals with an undefined g-prior are rejected with a warning."""
        x = np.linspace(-1.0, 1.0, 20)
        ds = make_dataset(
            np.column_stack([x, 2 * x]), (x > 0).astype(int))
        cfg = PriorConfig((0.5, 0.5), expected_model_size=1.0)
        z = x + 0.1
        rng = np.random.default_rng(15)
        gamma = ModelIndicator((1, 0))
        with caplog.at_level(logging.WARNING):
            for _ in range(100):
                gamma = mh_model_update(z, gamma, ds, cfg, rng)
                assert gamma.bits != (1, 1)

        assert "rejecting model 11" in caplog.text


class TestChainConfig:
    def test_draw_count(self):
        """Stored draws are counted after burn-in and thinning."""
        assert SHORT_CHAIN.draw_count == 25
        assert ChainConfig(iterations=10, burn_in=0).draw_count == 10

    def test_invalid(self):
        """Every invalid setting is reported."""
        with pytest.raises(InputError) as error:
            ChainConfig(
                iterations=10, burn_in=10, thin=0, move_mix=(0.5, 0.6))
        assert len(error.value.args) == 3


class TestRunChain:
    def test_deterministic(self, simulated):
        """The same seed gives the same draws."""
        cfg = PriorConfig.for_dataset(simulated.P, 1)
        first = run_chain(simulated, cfg, SHORT_CHAIN)
        second = run_chain(simulated, cfg, SHORT_CHAIN)
        other = run_chain(simulated, cfg, SHORT_CHAIN.with_seed(8))

        assert len(first) == 25
        assert np.array_equal(first.gammas, second.gammas)
        assert np.array_equal(first.betas, second.betas)
        assert not np.array_equal(first.betas, other.betas)

    def test_spike(self, simulated):
        """Excluded factors have exactly zero coefficients."""
        draws = run_chain(
            simulated, PriorConfig.for_dataset(simulated.P, 1), SHORT_CHAIN)
        assert np.all(draws.betas[:, 1:][draws.gammas == 0] == 0.0)

    def test_telemetry(self, simulated):
        """Every proposed move is counted."""
        draws = run_chain(
            simulated, PriorConfig.for_dataset(simulated.P, 1), SHORT_CHAIN)
        telemetry = draws.telemetry

        assert sum(telemetry.proposed.values()) == 60 * 5
        assert all(
            telemetry.accepted[move] <= telemetry.proposed[move]
            for move in telemetry.proposed)
        assert telemetry.seed == 7

    def test_certain_weights(self, simulated):
        """Weights of 0 and 1 pin factors out and in."""
        cfg = PriorConfig((1.0, 0.0, 0.5), expected_model_size=1.5)
        draws = run_chain(simulated, cfg, SHORT_CHAIN)

        assert np.all(draws.gammas[:, 0] == 1)
        assert np.all(draws.gammas[:, 1] == 0)

    def test_finds_signal(self, simulated):
        """The factor that drives the outcome is almost always included."""
        chain = ChainConfig(iterations=600, burn_in=100, seed=3)
        draws = run_chain(
            simulated, PriorConfig.for_dataset(simulated.P, 1), chain)
        inclusion = draws.gammas.mean(axis=0)

        assert inclusion[0] > 0.9
        assert inclusion[1:].mean() < 0.5

    def test_recovers_sparse_signal(self, make_dataset):
        """Three true factors stand out among twenty."""
        rng = np.random.default_rng(20)
        factors = rng.standard_normal((500, 20))
        latent = factors[:, :3] @ np.ones(3) + rng.standard_normal(500)
        ds = make_dataset(factors, (latent > 0).astype(int))
        chain = ChainConfig(iterations=3000, burn_in=500, seed=9)
        draws = run_chain(ds, PriorConfig.for_dataset(ds.P, 3), chain)
        inclusion = draws.gammas.mean(axis=0)

        assert np.all(inclusion[:3] > 0.9)
        assert np.median(inclusion[3:]) < 0.1


class TestDrawsArtifact:
    @pytest.fixture(autouse=True)
    def out_dir(self, fs):
        fs.create_dir("/out")

    def test_round_trip(self, fs, simulated):
        """Draws read back exactly as they were written."""
        draws = run_chain(
            simulated, PriorConfig.for_dataset(simulated.P, 1), SHORT_CHAIN)
        paths = write_draws(draws, "/out/draws")
        loaded = read_draws("/out/draws")

        assert paths == ["/out/draws.json", "/out/draws.csv"]
        assert loaded.factor_names == draws.factor_names
        assert np.array_equal(loaded.gammas, draws.gammas)
        assert np.array_equal(loaded.betas, draws.betas)
        assert loaded.telemetry.proposed == draws.telemetry.proposed

    def test_identical_bytes(self, fs, simulated):
        """Equal seeds give byte-identical artifacts."""
        cfg = PriorConfig.for_dataset(simulated.P, 1)
        write_draws(run_chain(simulated, cfg, SHORT_CHAIN), "/out/a")
        write_draws(run_chain(simulated, cfg, SHORT_CHAIN), "/out/b")

        for ext in (".json", ".csv"):
            with open("/out/a" + ext, "rb") as first, \
                    open("/out/b" + ext, "rb") as second:
                assert first.read() == second.read()

    def test_missing(self, fs):
        """Reading a missing artifact is a status error."""
        with pytest.raises(StatusError):
            read_draws("/out/draws")

    def test_malformed(self, fs, simulated):
        """An artifact with missing columns is a parse error."""
        draws = run_chain(
            simulated, PriorConfig.for_dataset(simulated.P, 1), SHORT_CHAIN)
        write_draws(draws, "/out/draws")
        with open("/out/draws.csv", "w") as file:
            file.write("gamma:x1\n1\n")

        with pytest.raises(FileParseError):
            read_draws("/out/draws")
