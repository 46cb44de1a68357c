"""The frequentist baseline: logistic screening and stepwise selection.

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
import logging
import functools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import special, stats

from bvs.data import Dataset
from bvs.exceptions import (
    DataError, InputError, NumericalError, ProgramError, RankDeficiencyError)
from bvs.utils import parallel_map

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-8
MAX_ITERATIONS = 50
# Coefficients beyond this on a standardized scale indicate separation.
SEPARATION_BOUND = 15.0
MAX_HALVINGS = 30

ADD = "add"
DROP = "drop"


@dataclass(frozen=True)
class GlmFit:
    """A maximum-likelihood logistic regression fit.

    Attributes:
        coefficients: The estimates, intercept first.
        covariance: The inverse observed information at the estimates.
        log_likelihood: The log-likelihood at the estimates.
        converged: The gradient norm fell below the tolerance.
        iterations: The number of Newton steps taken.
        separated: Some coefficient is implausibly large, which happens when
            the outcome is (quasi-)separated by the factors.
        log_likelihood_trace: The log-likelihood after each accepted step,
            starting from the all-zero coefficients.
    """
    coefficients: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    separated: bool = False
    log_likelihood_trace: Tuple[float, ...] = ()


def _logistic_log_likelihood(
        X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic_irls(
        X: np.ndarray, y: np.ndarray, tolerance: float = GRADIENT_TOLERANCE,
        max_iterations: int = MAX_ITERATIONS) -> GlmFit:
    """Fit a logistic regression by iteratively reweighted least squares.

    Each Newton step is halved until the log-likelihood doesn't decrease.

    Args:
        X: The design matrix, including the intercept column.
        y: The outcomes, 0 or 1.
        tolerance: Stop once the norm of the score is below this.
        max_iterations: The maximum number of Newton steps.

    Raises:
        RankDeficiencyError: X doesn't have full column rank.
        DataError: The outcome has only one class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficiencyError(
            "the logistic regression design doesn't have full column rank")
    if y.min(initial=1.0) == y.max(initial=0.0):
        raise DataError("the logistic regression needs both outcome classes")

    beta = np.zeros(X.shape[1])
    log_likelihood = _logistic_log_likelihood(X, y, beta)
    trace = [log_likelihood]
    converged = False
    iterations = 0
    while True:
        probabilities = special.expit(X @ beta)
        score = X.T @ (y - probabilities)
        if np.linalg.norm(score) < tolerance:
            converged = True
            break
        if iterations == max_iterations:
            break
        weights = probabilities * (1 - probabilities)
        information = X.T @ (X * weights[:, None])
        try:
            step = scipy.linalg.solve(information, score, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            break

        scale = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = beta + scale * step
            candidate_ll = _logistic_log_likelihood(X, y, candidate)
            if candidate_ll >= log_likelihood:
                break
            scale /= 2
        else:
            break
        beta, log_likelihood = candidate, candidate_ll
        trace.append(log_likelihood)
        iterations += 1

    probabilities = special.expit(X @ beta)
    information = X.T @ (X * (probabilities * (1 - probabilities))[:, None])
    try:
        covariance = np.linalg.inv(information)
        covariance = (covariance + covariance.T) / 2
    except np.linalg.LinAlgError:
        covariance = np.full_like(information, np.nan)

    separated = bool(np.abs(beta).max() > SEPARATION_BOUND)
    if separated:
        logger.warning(
            "a logistic regression coefficient exceeds %g in magnitude; the "
            "outcome may be separated by the factors", SEPARATION_BOUND)
    return GlmFit(
        beta, covariance, log_likelihood, converged, iterations, separated,
        tuple(trace))


@dataclass(frozen=True)
class WaldTest:
    """Wald tests of the coefficients of a fit.

    Attributes:
        z: Each coefficient divided by its standard error.
        p: The two-sided p-values.
        unreliable: The fit is separated, so the p-values can't be trusted.
    """
    z: np.ndarray
    p: np.ndarray
    unreliable: bool


def wald_pvalues(fit: GlmFit) -> WaldTest:
    """Get two-sided normal-approximation p-values for each coefficient.

    Raises:
        NumericalError: The fit didn't converge.
    """
    if not fit.converged:
        raise NumericalError(
            "Wald tests need a converged fit, but IRLS stopped after {} "
            "iterations".format(fit.iterations))
    se = np.sqrt(np.diag(fit.covariance))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = fit.coefficients / se
    return WaldTest(z, 2 * stats.norm.sf(np.abs(z)), fit.separated)


def _fit_factors(ds: Dataset, indices: Sequence[int]) -> GlmFit:
    columns = [0] + [index + 1 for index in sorted(indices)]
    return fit_logistic_irls(ds.design[:, columns], ds.outcome)


def _factor_pvalues(
        ds: Dataset, indices: Sequence[int]
        ) -> Tuple[GlmFit, Dict[int, float]]:
    fit = _fit_factors(ds, indices)
    test = wald_pvalues(fit)
    return fit, {
        index: float(test.p[position + 1])
        for position, index in enumerate(sorted(indices))}


@dataclass(frozen=True)
class ScreenResult:
    """The outcome of single-factor screening.

    Attributes:
        pvalues: The Wald p-value of each factor in its own model, or NaN if
            the fit failed.
        retained: The factors that passed the screen, in factor order.
        failed: The factors whose fits failed.
        unreliable: The factors whose fits were separated.
        threshold: The p-value threshold.
    """
    pvalues: Dict[str, float]
    retained: List[str]
    failed: List[str]
    unreliable: List[str]
    threshold: float


def _screen_one(ds: Dataset, index: int) -> Tuple[float, bool, Optional[str]]:
    try:
        fit = _fit_factors(ds, [index])
        test = wald_pvalues(fit)
    except ProgramError as error:
        return float("nan"), False, str(error)
    return float(test.p[1]), test.unreliable, None


def single_factor_screen(
        ds: Dataset, threshold: float = 0.003, jobs: int = 1) -> ScreenResult:
    """Fit an intercept-plus-one-factor model for each factor.

    A factor is retained when its p-value is below the threshold. A threshold
    of 1 retains every factor whose fit converged, and a factor whose fit
    fails is excluded with a warning.

    Raises:
        InputError: The threshold isn't in [0, 1].
    """
    if not 0 <= threshold <= 1:
        raise InputError("the screening threshold must be between 0 and 1")

    results = parallel_map(
        functools.partial(_screen_one, ds), list(range(ds.P)), jobs)
    pvalues = {}
    retained = []
    failed = []
    unreliable = []
    for name, (p, separated, error) in zip(ds.factor_names, results):
        pvalues[name] = p
        if error is not None:
            logger.warning("excluding factor '%s': %s", name, error)
            failed.append(name)
            continue
        if separated:
            unreliable.append(name)
        if threshold >= 1 or p < threshold:
            retained.append(name)
    return ScreenResult(pvalues, retained, failed, unreliable, threshold)


@dataclass(frozen=True)
class StepDecision:
    """One decision made by stepwise selection.

    Attributes:
        action: "add" or "drop".
        factor: The factor added or dropped.
        p: The p-value that triggered the decision.
    """
    action: str
    factor: str
    p: float


@dataclass(frozen=True)
class StepwiseResult:
    """The outcome of stepwise selection.

    Attributes:
        selected: The factors in the final model, in factor order.
        fit: The fit of the final model.
        pvalues: The Wald p-value of each selected factor in the final fit.
        trace: Every add and drop decision in the order they were made.
        stopped_by_cycle: Selection stopped because a model repeated.
    """
    selected: List[str]
    fit: GlmFit
    pvalues: Dict[str, float]
    trace: List[StepDecision] = field(default_factory=list)
    stopped_by_cycle: bool = False


def stepwise_select(
        ds: Dataset, candidates: Sequence[str], enter_p: float = 0.05,
        exit_p: float = 0.10) -> StepwiseResult:
    """Select factors by bidirectional stepwise logistic regression.

    Each round adds the candidate with the smallest p-value below enter_p,
    ties going to the earlier factor, then repeatedly drops the included
    factor with the largest p-value above exit_p. Selection stops when a
    round changes nothing or returns to a model seen before. A step whose
    model can't be refit is undone and selection stops there.

    Raises:
        InputError: There are no candidates.
        NumericalError: Every candidate's fit failed.
    """
    if not candidates:
        raise InputError("stepwise selection needs at least one candidate")
    if enter_p > exit_p:
        logger.warning(
            "the entry threshold %g is above the exit threshold %g, so "
            "selection may cycle", enter_p, exit_p)
    pool = sorted(ds.factor_index(name) for name in set(candidates))

    included = []
    trace = []
    seen = {frozenset()}
    first_round = True
    stopped_by_cycle = False
    while True:
        changed = False

        best = None
        attempted = 0
        for index in pool:
            if index in included:
                continue
            try:
                _, pvalues = _factor_pvalues(ds, included + [index])
            except ProgramError as error:
                logger.warning(
                    "skipping '%s': %s", ds.factor_names[index], error)
                continue
            attempted += 1
            p = pvalues[index]
            if p < enter_p and (best is None or p < best[1]):
                best = (index, p)
        if first_round and attempted == 0:
            raise NumericalError("every candidate's logistic fit failed")
        first_round = False
        if best is not None:
            included.append(best[0])
            trace.append(StepDecision(ADD, ds.factor_names[best[0]], best[1]))
            changed = True

        failed = False
        while included:
            try:
                _, pvalues = _factor_pvalues(ds, included)
            except ProgramError as error:
                undone = trace.pop()
                logger.warning(
                    "undoing the last step on '%s': %s", undone.factor,
                    error)
                index = ds.factor_index(undone.factor)
                if undone.action == DROP:
                    included.append(index)
                else:
                    included.remove(index)
                failed = True
                break
            worst = max(sorted(pvalues), key=lambda index: pvalues[index])
            if not pvalues[worst] > exit_p:
                break
            included.remove(worst)
            trace.append(
                StepDecision(DROP, ds.factor_names[worst], pvalues[worst]))
            changed = True

        if failed:
            break
        if not changed:
            break
        state = frozenset(included)
        if state in seen:
            logger.warning("stopping stepwise selection at a repeated model")
            stopped_by_cycle = True
            break
        seen.add(state)

    fit, pvalues = _factor_pvalues(ds, included)
    return StepwiseResult(
        [ds.factor_names[index] for index in sorted(included)], fit,
        {ds.factor_names[index]: p for index, p in pvalues.items()},
        trace, stopped_by_cycle)


def replay_trace(
        trace: Sequence[StepDecision],
        factor_names: Sequence[str]) -> List[str]:
    """Apply recorded stepwise decisions to an empty model.

    Returns:
        The selected factors, in factor order.

    Raises:
        InputError: A decision adds an included factor or drops an absent
            one.
    """
    included = set()
    for decision in trace:
        if decision.action == ADD and decision.factor not in included:
            included.add(decision.factor)
        elif decision.action == DROP and decision.factor in included:
            included.remove(decision.factor)
        else:
            raise InputError(
                "can't {0} '{1}' at this point of the trace".format(
                    decision.action, decision.factor))
    return [name for name in factor_names if name in included]


@dataclass(frozen=True)
class BaselineRow:
    """One factor's row of the baseline table.

    Attributes:
        factor: The name of the factor.
        p_single: The factor's p-value in its own model.
        p_multi: The factor's p-value in the final stepwise model, or None if
            it isn't in that model.
    """
    factor: str
    p_single: float
    p_multi: Optional[float]


def baseline_table(
        screen: ScreenResult,
        stepwise: Optional[StepwiseResult] = None) -> List[BaselineRow]:
    """Join the screening and stepwise p-values of each factor."""
    multi = stepwise.pvalues if stepwise is not None else {}
    return [
        BaselineRow(name, p, multi.get(name))
        for name, p in screen.pvalues.items()]
