"""Tests for leverage and chain diagnostics.

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

import numpy as np
import pytest

from bvs.data import CATEGORICAL, ColumnEncoding, Dataset, EncodingLog
from bvs.diagnostics import (
    acceptance_rate, chain_health, correlation_screen, effective_sample_size,
    leverage, write_ess_csv, write_leverage_csv)
from bvs.exceptions import InputError
from bvs.sampler import ChainTelemetry, PosteriorDraws


class TestLeverage:
    def test_three_points(self, make_dataset):
        """The middle point of a symmetric design has the least leverage."""
        report = leverage(make_dataset([-1.0, 0.0, 1.0], [0, 1, 0]))

        assert report.h == pytest.approx([5 / 6, 1 / 3, 5 / 6])
        assert report.threshold == pytest.approx(4 / 3)
        assert report.flagged.size == 0
        assert not report.ridge

    def test_threshold(self, make_dataset):
        """Individuals above the threshold are flagged."""
        report = leverage(
            make_dataset([-1.0, 0.0, 1.0], [0, 1, 0]), threshold=0.5)
        assert report.flagged.tolist() == [0, 2]

    def test_trace(self, simulated):
        """The leverages sum to the number of design columns."""
        report = leverage(simulated)
        assert report.h.sum() == pytest.approx(simulated.P + 1)

    def test_intercept_only(self, simulated):
        """Every individual has leverage 1/n without factors."""
        report = leverage(simulated.select_factors([]))
        assert report.h == pytest.approx(np.full(simulated.n, 1 / simulated.n))

    def test_trace_is_rank(self, make_dataset):
        """With a ridge the leverages still sum to the design rank."""
        x = np.array([-1.0, 0.0, 1.0, 2.0, 4.0])
        ds = make_dataset(np.column_stack([x, 3 * x]), [0, 1, 0, 1, 1])
        report = leverage(ds)

        assert report.ridge
        assert report.h.sum() == pytest.approx(2.0, abs=1e-6)

    def test_affine_invariance(self, simulated, make_dataset):
        """Shifting and scaling the factors leaves the leverages alone."""
        factors = simulated.factors * np.array([3.0, 0.5, -2.0]) + 7.0
        rescaled = make_dataset(factors, simulated.outcome)

        assert leverage(rescaled).h == pytest.approx(
            leverage(simulated).h, abs=1e-10)

    def test_ridge(self, make_dataset, caplog):
        """A rank-deficient design gets a ridge and a warning."""
        x = np.array([-1.0, 0.0, 1.0, 2.0])
        ds = make_dataset(np.column_stack([x, 3 * x]), [0, 1, 0, 1])
        with caplog.at_level(logging.WARNING):
            report = leverage(ds)

        assert report.ridge
        assert np.all((report.h >= 0) & (report.h <= 1))
        assert "ridge" in caplog.text

    def test_groups(self, fs):
        """Individuals are labelled by their categorical level."""
        site = ColumnEncoding(
            "site", CATEGORICAL, ("site1",), ("a", "b"), "a")
        ds = Dataset(
            [[1.0, 0.0], [1.0, 1.0], [1.0, 1.0], [1.0, 0.0]], [0, 1, 0, 1],
            ("site1",), EncodingLog((site,), "y"))
        report = leverage(ds, group="site")
        write_leverage_csv(report, "/leverage.csv")
        with open("/leverage.csv") as file:
            lines = file.read().splitlines()

        assert report.group_labels.tolist() == ["a", "site1", "site1", "a"]
        assert lines[0] == "observation,leverage,flagged,group"
        observation, h, flagged, group = lines[1].split(",")
        assert (observation, flagged, group) == ("0", "0", "a")
        assert float(h) == pytest.approx(0.5)


class TestEffectiveSampleSize:
    def test_independent(self):
        """Independent draws are worth about their number."""
        series = np.random.default_rng(1).standard_normal(4000)
        assert 0.7 * 4000 < effective_sample_size(series) <= 4000

    def test_autocorrelated(self):
        """An AR(1) chain is worth (1 - φ) / (1 + φ) of its length."""
        rng = np.random.default_rng(2)
        phi = 0.9
        series = np.empty(40000)
        series[0] = 0.0
        for index in range(1, series.size):
            series[index] = phi * series[index - 1] + rng.standard_normal()
        expected = series.size * (1 - phi) / (1 + phi)

        assert effective_sample_size(series) == pytest.approx(
            expected, rel=0.3)

    def test_constant(self):
        """A constant series is given its own length."""
        assert effective_sample_size(np.ones(50)) == 50.0

    def test_too_short(self):
        """Short series are rejected."""
        with pytest.raises(InputError):
            effective_sample_size(np.arange(5.0))


class TestChainHealth:
    @pytest.fixture
    def draws(self) -> PosteriorDraws:
        rng = np.random.default_rng(3)
        gammas = np.column_stack([
            np.ones(40, dtype=int), (rng.random(40) < 0.5).astype(int)])
        betas = np.column_stack([np.zeros(40), gammas * 0.5])
        telemetry = ChainTelemetry(
            proposed={"add": 10, "delete": 10, "swap": 0},
            accepted={"add": 4, "delete": 5, "swap": 0})
        return PosteriorDraws(("a", "b"), gammas, betas, telemetry)

    def test_acceptance(self, draws):
        """Moves that were never proposed have no acceptance rate."""
        rates = acceptance_rate(draws)

        assert rates["add"] == 0.4
        assert rates["delete"] == 0.5
        assert math.isnan(rates["swap"])

    def test_degenerate(self, draws):
        """Factors that never change are reported."""
        health = chain_health(draws)

        assert health.degenerate == ["a"]
        assert health.factor_ess["a"] == 40.0
        assert 0 < health.size_ess <= 40

    def test_ess_csv(self, fs, draws):
        """Every series gets a row, model size last."""
        write_ess_csv(chain_health(draws), "/ess.csv")
        with open("/ess.csv") as file:
            lines = file.read().splitlines()

        assert lines[0] == "series,ess,degenerate"
        assert lines[1] == "a,40.0,1"
        assert lines[-1].startswith("(model size),")


class TestCorrelationScreen:
    def test_share(self, make_dataset):
        """Each factor reports the share of others it is correlated with."""
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        noise = np.array([1.0, -1.0, 0.0, -1.0, 1.0])
        ds = make_dataset(
            np.column_stack([x, x + 0.1 * noise, noise]), [0, 1, 0, 1, 0])
        shares = correlation_screen(ds, threshold=0.5)

        assert shares["x1"] == 0.5
        assert shares["x3"] == 0.0
