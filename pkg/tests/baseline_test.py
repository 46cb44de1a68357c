"""Tests for the frequentist baseline.

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
from scipy import stats

from bvs.baseline import (
    ADD, DROP, GlmFit, StepDecision, baseline_table, fit_logistic_irls,
    replay_trace, single_factor_screen, stepwise_select, wald_pvalues)
from bvs.exceptions import (
    DataError, InputError, NumericalError, RankDeficiencyError)


@pytest.fixture
def two_by_two():
    """A binary factor with outcome rates of 1/4 and 3/4."""
    x = np.array([0.0] * 8 + [1.0] * 8)
    y = np.array([1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0])
    return np.column_stack([np.ones(16), x]), y


class TestFitLogistic:
    def test_closed_form(self, two_by_two):
        """A 2×2 table has log-odds estimates in closed form."""
        fit = fit_logistic_irls(*two_by_two)

        assert fit.converged
        assert fit.coefficients == pytest.approx(
            [math.log(1 / 3), 2 * math.log(3)])
        assert fit.covariance[1, 1] == pytest.approx(
            1 / 2 + 1 / 6 + 1 / 6 + 1 / 2)

    def test_monotone_likelihood(self, two_by_two):
        """The log-likelihood never decreases between steps."""
        trace = np.array(fit_logistic_irls(*two_by_two).log_likelihood_trace)
        assert np.all(np.diff(trace) >= 0)

    def test_rank_deficient(self):
        """Collinear columns are rejected."""
        x = np.array([0.0, 1.0, 2.0, 3.0])
        X = np.column_stack([np.ones(4), x, 2 * x])
        with pytest.raises(RankDeficiencyError):
            fit_logistic_irls(X, [0, 1, 0, 1])

    def test_one_class(self):
        """The outcome needs both classes."""
        X = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]])
        with pytest.raises(DataError):
            fit_logistic_irls(X, [1, 1, 1, 1])

    def test_separation(self, caplog):
        """Separated outcomes are flagged."""
        X = np.column_stack([np.ones(4), [-2.0, -1.0, 1.0, 2.0]])
        with caplog.at_level(logging.WARNING):
            fit = fit_logistic_irls(X, [0, 0, 1, 1])

        assert fit.separated
        assert "separated" in caplog.text


class TestWaldPvalues:
    def test_known_values(self):
        """A z of 1.96 gives p of 0.05 and a zero coefficient gives 1."""
        fit = GlmFit(
            np.array([0.0, 1.96]), np.eye(2), -1.0, True, 3)
        test = wald_pvalues(fit)

        assert test.p[0] == 1.0
        assert test.p[1] == pytest.approx(0.05, abs=1e-3)
        assert not test.unreliable

    def test_not_converged(self):
        """Unconverged fits can't be tested."""
        fit = GlmFit(np.zeros(2), np.eye(2), -1.0, False, 50)
        with pytest.raises(NumericalError):
            wald_pvalues(fit)


class TestScreen:
    def test_threshold(self, simulated):
        """Only the driving factor passes a strict screen."""
        screen = single_factor_screen(simulated, threshold=0.003)

        assert screen.retained[0] == "x1"
        assert screen.pvalues["x1"] < 0.003
        assert set(screen.pvalues) == {"x1", "x2", "x3"}

    def test_keep_all(self, simulated):
        """A threshold of 1 retains every factor."""
        screen = single_factor_screen(simulated, threshold=1.0)
        assert screen.retained == ["x1", "x2", "x3"]

    def test_failed_fit(self, make_dataset, caplog):
        """A factor whose fit fails is excluded with a warning."""
        ds = make_dataset(
            [[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]], [0, 1, 0, 1])
        with caplog.at_level(logging.WARNING):
            screen = single_factor_screen(ds, threshold=1.0)

        assert screen.failed == ["x1"]
        assert screen.retained == ["x2"]
        assert math.isnan(screen.pvalues["x1"])
        assert "excluding factor 'x1'" in caplog.text

    def test_invalid_threshold(self, simulated):
        """The threshold must be a probability."""
        with pytest.raises(InputError):
            single_factor_screen(simulated, threshold=1.5)

    def test_null_calibration(self, make_dataset):
        """Without signal the screen keeps about the nominal share."""
        rng = np.random.default_rng(41)
        P = 200
        ds = make_dataset(
            rng.standard_normal((200, P)), rng.integers(0, 2, 200))
        screen = single_factor_screen(ds, threshold=0.05)
        low, high = stats.binom.interval(0.999, P, 0.05)

        assert not screen.failed
        assert low <= len(screen.retained) <= high
        assert stats.kstest(
            list(screen.pvalues.values()), "uniform").pvalue > 0.001


class TestStepwise:
    def test_selects_signal(self, simulated):
        """The driving factor enters first."""
        result = stepwise_select(simulated, ["x1", "x2", "x3"])

        assert "x1" in result.selected
        assert result.trace[0] == StepDecision(
            ADD, "x1", result.trace[0].p)
        assert result.fit.converged
        assert not result.stopped_by_cycle

    def test_replay(self, simulated):
        """Replaying the trace gives the selected factors."""
        result = stepwise_select(
            simulated, ["x1", "x2", "x3"], enter_p=0.5, exit_p=0.6)
        assert replay_trace(
            result.trace, simulated.factor_names) == result.selected

    def test_thresholds_warning(self, simulated, caplog):
        """An entry threshold above the exit threshold warns."""
        with caplog.at_level(logging.WARNING):
            stepwise_select(simulated, ["x1"], enter_p=0.2, exit_p=0.1)
        assert "may cycle" in caplog.text

    def test_no_candidates(self, simulated):
        """Selection needs candidates."""
        with pytest.raises(InputError):
            stepwise_select(simulated, [])

    def test_invalid_replay(self):
        """A trace can't drop a factor that isn't included."""
        with pytest.raises(InputError):
            replay_trace([StepDecision(DROP, "a", 0.5)], ("a", "b"))

    def test_refit_fails_after_drop(self, simulated, monkeypatch, caplog):
        """A drop whose model can't be refit is undone."""
        pvalues = {
            frozenset({0}): {0: 0.001},
            frozenset({2}): {2: 0.5},
            frozenset({0, 1}): {0: 0.5, 1: 0.01},
            frozenset({0, 2}): {0: 0.001, 2: 0.5},
            }

        def fake_pvalues(ds, indices):
            model = frozenset(indices)
            if model not in pvalues:
                raise NumericalError("the logistic fit didn't converge")
            return None, pvalues[model]

        monkeypatch.setattr("bvs.baseline._factor_pvalues", fake_pvalues)
        with caplog.at_level(logging.WARNING):
            result = stepwise_select(simulated, ["x1", "x2", "x3"])

        assert result.selected == ["x1", "x2"]
        assert [decision.action for decision in result.trace] == [ADD, ADD]
        assert "undoing the last step on 'x1'" in caplog.text


class TestBaselineTable:
    def test_rows(self, simulated):
        """Factors outside the final model have no multivariable p-value."""
        screen = single_factor_screen(simulated, threshold=1.0)
        stepwise = stepwise_select(simulated, screen.retained)
        rows = baseline_table(screen, stepwise)

        assert [row.factor for row in rows] == ["x1", "x2", "x3"]
        for row in rows:
            included = row.factor in stepwise.selected
            assert (row.p_multi is None) == (not included)

    def test_screen_only(self, simulated):
        """Without stepwise selection there are no multivariable p-values."""
        screen = single_factor_screen(simulated, threshold=1.0)
        assert all(row.p_multi is None for row in baseline_table(screen))
