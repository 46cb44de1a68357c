"""Score predictions by ROC area under cross-validation.

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
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special, stats

from bvs.baseline import fit_logistic_irls
from bvs.data import Dataset, split_standardized
from bvs.exceptions import InputError, NumericalError, ProgramError
from bvs.prior import ModelIndicator, PriorConfig
from bvs.sampler import ChainConfig, PosteriorDraws, run_chain
from bvs.utils import derive_seed, parallel_map

logger = logging.getLogger(__name__)

BMA = "bma"
REFIT = "refit-subset"

POOLED = "pooled"
MEAN = "mean"
POOLING = (POOLED, MEAN)

# Draws scored at once by posterior_predictive_many().
DRAW_BLOCK = 4096


@dataclass(frozen=True)
class PredictionReport:
    """Cross-validated predictive performance.

    Attributes:
        auc: The headline AUC, from pooled scores or the mean fold AUC.
        roc_points: A k×2 array of (false positive rate, true positive rate)
            points for the pooled scores.
        per_fold_auc: The AUC within each fold. NaN marks a failed fold or a
            fold with only one class.
        fold_assignment: The fold of each individual.
        method: "bma" or "refit-subset".
        scores: The held-out score of each individual. NaN marks individuals
            in failed folds.
        failed_folds: The folds whose fits failed.
        pooling: "pooled" or "mean".
    """
    auc: float
    roc_points: np.ndarray
    per_fold_auc: Tuple[float, ...]
    fold_assignment: np.ndarray
    method: str
    scores: np.ndarray
    failed_folds: Tuple[int, ...] = ()
    pooling: str = POOLED

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "method": self.method,
            "pooling": self.pooling,
            "per_fold_auc": [
                None if np.isnan(value) else value
                for value in self.per_fold_auc],
            "failed_folds": list(self.failed_folds),
            "fold_assignment": self.fold_assignment.tolist(),
            }


def _design_row(x_star: np.ndarray, P: int) -> np.ndarray:
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape[-1] != P:
        raise InputError(
            "the row has {0} factors but the draws have {1}".format(
                x_star.shape[-1], P))
    ones = np.ones(x_star.shape[:-1] + (1,))
    return np.concatenate([ones, x_star], axis=-1)


def posterior_predictive(
        draws: PosteriorDraws, x_star: Sequence[float]) -> float:
    """Get the model-averaged probability that an individual's outcome is 1.

    Args:
        draws: The posterior draws.
        x_star: The individual's factor values, encoded like the training
            data, without the intercept.

    Raises:
        InputError: The row has the wrong number of factors or there are no
            draws.
    """
    return float(posterior_predictive_many(draws, np.atleast_2d(x_star))[0])


def posterior_predictive_many(
        draws: PosteriorDraws, rows: np.ndarray) -> np.ndarray:
    """Get model-averaged probabilities for many individuals at once.

    Args:
        draws: The posterior draws.
        rows: An m×P array of factor values without the intercept.

    Returns:
        A length-m vector of probabilities.
    """
    if len(draws) < 1:
        raise InputError("there are no posterior draws to predict with")
    design = _design_row(np.atleast_2d(rows), draws.P)
    total = np.zeros(design.shape[0])
    for start in range(0, len(draws), DRAW_BLOCK):
        block = draws.betas[start:start + DRAW_BLOCK]
        total += special.ndtr(design @ block.T).sum(axis=1)
    return np.clip(total / len(draws), 0.0, 1.0)


def _check_labels(scores: np.ndarray, labels: np.ndarray) -> None:
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("there must be one label per score")
    if not np.isin(labels, (0, 1)).all():
        raise InputError("labels must be 0 or 1")
    if labels.min(initial=1) == labels.max(initial=0):
        raise InputError("the AUC needs both outcome classes")


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Get the area under the ROC curve.

    This is the Mann-Whitney statistic: the fraction of (positive, negative)
    pairs where the positive scores higher, with ties counting half.

    Raises:
        InputError: The labels hold only one class.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    _check_labels(scores, labels)
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = labels.size - n_pos
    ranks = stats.rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> np.ndarray:
    """Get the points of the ROC curve.

    Tied scores give a single diagonal segment, so the trapezoidal area
    under the points equals auc().

    Returns:
        A k×2 array of (false positive rate, true positive rate) points from
        (0, 0) to (1, 1).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    _check_labels(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    true_positives = np.cumsum(sorted_labels == 1)
    false_positives = np.cumsum(sorted_labels == 0)
    # The last index of each group of tied scores.
    ends = np.flatnonzero(np.append(np.diff(sorted_scores) != 0, True))
    points = np.column_stack([
        false_positives[ends] / false_positives[-1],
        true_positives[ends] / true_positives[-1]])
    return np.vstack([[0.0, 0.0], points])


def trapezoid_area(points: np.ndarray) -> float:
    """Get the trapezoidal area under ROC points."""
    x, y = points[:, 0], points[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2))


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> np.ndarray:
    """Assign individuals to k folds with balanced outcome counts.

    Each class is shuffled and dealt round-robin, so the positive counts of
    any two folds differ by at most 1 and so do their sizes.

    Raises:
        InputError: k is below 2 or above the number of individuals.
    """
    labels = np.asarray(labels)
    if not 2 <= k <= labels.size:
        raise InputError(
            "the number of folds must be between 2 and the number of "
            "individuals")
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.size, dtype=int)
    dealt = 0
    for label in (1, 0):
        members = rng.permutation(np.flatnonzero(labels == label))
        folds[members] = (dealt + np.arange(members.size)) % k
        dealt += members.size
    return folds


def _assemble(
        ds: Dataset, folds: np.ndarray,
        fold_scores: List[Optional[np.ndarray]], method: str,
        pooling: str) -> PredictionReport:
    k = len(fold_scores)
    scores = np.full(ds.n, np.nan)
    per_fold = []
    failed = []
    for fold, fold_score in enumerate(fold_scores):
        if fold_score is None:
            failed.append(fold)
            per_fold.append(float("nan"))
            continue
        held_out = folds == fold
        scores[held_out] = fold_score
        labels = ds.outcome[held_out]
        per_fold.append(
            auc(fold_score, labels) if 0 < labels.sum() < labels.size
            else float("nan"))
    if len(failed) == k:
        raise NumericalError("every cross-validation fold failed")
    if failed:
        logger.warning(
            "%d of %d folds failed and were left out of the AUC",
            len(failed), k)

    scored = ~np.isnan(scores)
    roc_points = roc_curve(scores[scored], ds.outcome[scored])
    if pooling == POOLED:
        headline = auc(scores[scored], ds.outcome[scored])
    else:
        defined = [value for value in per_fold if not np.isnan(value)]
        if not defined:
            raise InputError(
                "no fold has both outcome classes, so fold AUCs can't be "
                "averaged")
        headline = float(np.mean(defined))
    return PredictionReport(
        headline, roc_points, tuple(per_fold), folds, method, scores,
        tuple(failed), pooling)


def _check_pooling(pooling: str) -> None:
    if pooling not in POOLING:
        raise InputError(
            "pooling must be one of {}".format(", ".join(POOLING)))


def _refit_fold(
        ds: Dataset, subset: ModelIndicator, folds: np.ndarray,
        fold: int) -> Optional[np.ndarray]:
    train = folds != fold
    columns = subset.columns
    X_train = ds.design[train][:, columns]
    try:
        fit = fit_logistic_irls(X_train, ds.outcome[train])
    except ProgramError as error:
        logger.warning("fold %d failed: %s", fold, error)
        return None
    if not fit.converged:
        logger.warning(
            "fold %d failed: the logistic fit didn't converge", fold)
        return None
    return special.expit(ds.design[~train][:, columns] @ fit.coefficients)


def kfold_refit_auc(
        ds: Dataset, subset: ModelIndicator, k: int = 5, seed: int = 0,
        pooling: str = POOLED, jobs: int = 1) -> PredictionReport:
    """Cross-validate a logistic regression on a fixed set of factors.

    Args:
        ds: The dataset.
        subset: The factors to use. An empty subset fits the intercept only.
        k: The number of stratified folds.
        seed: The seed of the fold assignment.
        pooling: Score the pooled held-out predictions or average the fold
            AUCs.
        jobs: The maximum number of folds fitted at once.

    Raises:
        NumericalError: Every fold's fit failed.
    """
    _check_pooling(pooling)
    if subset.P != ds.P:
        raise InputError("the subset doesn't match the factors of the data")
    folds = stratified_folds(ds.outcome, k, seed)
    fold_scores = parallel_map(
        functools.partial(_refit_fold, ds, subset, folds), list(range(k)),
        jobs)
    return _assemble(ds, folds, fold_scores, REFIT, pooling)


def _bma_fold(
        ds: Dataset, cfg: PriorConfig, chain: ChainConfig, folds: np.ndarray,
        fold: int) -> Optional[np.ndarray]:
    fold_chain = chain.with_seed(derive_seed(chain.seed, "cv", fold))
    try:
        train, held = split_standardized(ds, np.flatnonzero(folds != fold))
    except ProgramError as error:
        logger.warning("fold %d failed: %s", fold, error)
        return None
    draws = run_chain(train, cfg, fold_chain)
    logger.info("fold %d: ran %d draws", fold, len(draws))
    return posterior_predictive_many(draws, held.factors)


def bma_cv_auc(
        ds: Dataset, cfg: PriorConfig, chain: ChainConfig, k: int = 5,
        seed: int = 0, pooling: str = POOLED,
        jobs: int = 1) -> PredictionReport:
    """Cross-validate model-averaged predictions.

    Each fold runs its own chain on the training rows only, seeded from the
    chain seed and the fold number, and scores the held-out rows. The
    continuous columns are z-scored on each fold's training rows.

    Args:
        ds: The dataset.
        cfg: The prior.
        chain: The chain settings shared by every fold.
        k: The number of stratified folds.
        seed: The seed of the fold assignment.
        pooling: Score the pooled held-out predictions or average the fold
            AUCs.
        jobs: The maximum number of chains run at once.
    """
    _check_pooling(pooling)
    folds = stratified_folds(ds.outcome, k, seed)
    fold_scores = parallel_map(
        functools.partial(_bma_fold, ds, cfg, chain, folds),
        list(range(k)), jobs)
    return _assemble(ds, folds, fold_scores, BMA, pooling)


def nested_auc_curve(
        ds: Dataset, mpp_ranking: Sequence[str], k: int = 5, seed: int = 0,
        pooling: str = POOLED,
        jobs: int = 1) -> List[Tuple[int, float]]:
    """Get the refit AUC of the top s factors for every s.

    Every point uses the same folds.

    Args:
        ds: The dataset.
        mpp_ranking: Every factor, from the highest MPP to the lowest.
        k: The number of stratified folds.
        seed: The seed of the fold assignment.
        pooling: Score the pooled held-out predictions or average the fold
            AUCs.
        jobs: The maximum number of folds fitted at once.

    Returns:
        (model size, AUC) for sizes 1 to P.

    Raises:
        InputError: The ranking doesn't list every factor exactly once.
    """
    if sorted(mpp_ranking) != sorted(ds.factor_names):
        raise InputError("the ranking must list every factor exactly once")
    curve = []
    for size in range(1, len(mpp_ranking) + 1):
        subset = ModelIndicator.from_names(
            ds.factor_names, mpp_ranking[:size])
        report = kfold_refit_auc(ds, subset, k, seed, pooling, jobs)
        logger.debug("top %d factors: AUC %.4f", size, report.auc)
        curve.append((size, report.auc))
    return curve


def write_roc_csv(report: PredictionReport, path: str) -> None:
    frame = pd.DataFrame(
        report.roc_points,
        columns=["false_positive_rate", "true_positive_rate"])
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)


def write_curve_csv(curve: Sequence[Tuple[int, float]], path: str) -> None:
    frame = pd.DataFrame(curve, columns=["size", "auc"])
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)
