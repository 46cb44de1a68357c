"""Summarize posterior draws as inclusion probabilities and model rankings.

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
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from bvs.exceptions import InputError
from bvs.prior import ModelIndicator
from bvs.sampler import PosteriorDraws

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorSummary:
    """The posterior summary of one factor.

    Attributes:
        name: The name of the factor.
        mpp: The fraction of draws that include the factor.
        beta_mean_given_included: The mean coefficient over the draws that
            include the factor, or None if no draw does.
        beta_sd_given_included: The standard deviation of those
            coefficients, or None if no draw includes the factor.
        inclusion_count: The number of draws that include the factor.
    """
    name: str
    mpp: float
    beta_mean_given_included: Optional[float]
    beta_sd_given_included: Optional[float]
    inclusion_count: int

    @property
    def defined(self) -> bool:
        """The conditional statistics exist."""
        return self.inclusion_count > 0


@dataclass(frozen=True)
class ModelSummary:
    """The posterior summary of one visited model.

    Attributes:
        indicator: The model.
        jpp: The fraction of draws in the model.
        rank: The position of the model by descending jpp, starting at 1.
        count: The number of draws in the model.
    """
    indicator: ModelIndicator
    jpp: float
    rank: int
    count: int


def _require_draws(draws: PosteriorDraws) -> None:
    if len(draws) < 1:
        raise InputError("there are no posterior draws to summarize")


def _conditional_stats(values: np.ndarray) -> Tuple[float, float]:
    # Centring on the first value keeps a constant series exact.
    offset = values[0]
    deviations = values - offset
    mean = float(offset + deviations.mean())
    sd = float(deviations.std(ddof=1)) if values.size > 1 else 0.0
    return mean, sd


def mpp(draws: PosteriorDraws) -> List[FactorSummary]:
    """Get the marginal posterior inclusion probability of each factor.

    Returns:
        One summary per factor, in the order of the factor names.
    """
    _require_draws(draws)
    counts = draws.gammas.sum(axis=0, dtype=np.int64)
    summaries = []
    for index, name in enumerate(draws.factor_names):
        count = int(counts[index])
        mean = sd = None
        if count:
            included = draws.gammas[:, index] == 1
            mean, sd = _conditional_stats(draws.betas[included, index + 1])
        summaries.append(
            FactorSummary(name, count / len(draws), mean, sd, count))
    return summaries


def _model_counts(draws: PosteriorDraws) -> List[Tuple[ModelIndicator, int]]:
    patterns, counts = np.unique(draws.gammas, axis=0, return_counts=True)
    models = [
        (ModelIndicator(tuple(pattern)), int(count))
        for pattern, count in zip(patterns, counts)]
    models.sort(key=lambda item: (-item[1], item[0].key()))
    return models


def jpp(
        draws: PosteriorDraws,
        top_k: Optional[int] = None) -> List[ModelSummary]:
    """Rank the visited models by their joint posterior probability.

    Ties are ordered by the bit pattern of the model.

    Args:
        draws: The posterior draws.
        top_k: Keep only this many models. If None, keep them all.

    Returns:
        The models by descending jpp.
    """
    _require_draws(draws)
    models = _model_counts(draws)
    if top_k is not None:
        models = models[:top_k]
    return [
        ModelSummary(indicator, count / len(draws), rank, count)
        for rank, (indicator, count) in enumerate(models, start=1)]


def mpp_jpp_consistency(draws: PosteriorDraws) -> float:
    """Compare each MPP with the summed JPPs of the models containing it.

    Both are counts over the same draws, so the result is always 0.
    """
    _require_draws(draws)
    factor_counts = draws.gammas.sum(axis=0, dtype=np.int64)
    model_counts = np.zeros(draws.P, dtype=np.int64)
    for indicator, count in _model_counts(draws):
        model_counts[indicator.included] += count
    discrepancy = np.abs(factor_counts - model_counts).max(initial=0)
    return float(discrepancy) / len(draws)


@dataclass(frozen=True)
class InclusionMatrix:
    """Plot-ready data for an inclusion heatmap.

    Attributes:
        matrix: An M×P array whose row i is the bit pattern of the model
            ranked i+1.
        jpp: The jpp of each row.
    """
    matrix: np.ndarray
    jpp: np.ndarray


def inclusion_matrix(
        models: Sequence[ModelSummary],
        count: Optional[int] = None) -> InclusionMatrix:
    """Stack the bit patterns of the top-ranked models.

    Args:
        models: Ranked models, as returned by jpp().
        count: The number of rows wanted. If there are fewer models, every
            model is used and a warning is logged.

    Raises:
        InputError: There are no models.
    """
    if not models:
        raise InputError("the inclusion matrix needs at least one model")
    if count is not None and count > len(models):
        logger.warning(
            "only %d distinct models were visited, fewer than the %d asked "
            "for", len(models), count)
    kept = models[:count] if count is not None else models
    return InclusionMatrix(
        np.array([model.indicator.bits for model in kept], dtype=np.int8),
        np.array([model.jpp for model in kept]))


def top_model_factor_share(
        models: Sequence[ModelSummary], top: int) -> np.ndarray:
    """Get the fraction of the top-ranked models that contain each factor."""
    kept = models[:top]
    if not kept:
        raise InputError("there are no models to count factors in")
    bits = np.array([model.indicator.bits for model in kept])
    return bits.mean(axis=0)


def report_rows(
        summaries: Sequence[FactorSummary], focus: Sequence[str] = (),
        extra: Optional[int] = None) -> List[FactorSummary]:
    """Choose the factors to show in a summary table.

    Args:
        summaries: Every factor's summary.
        focus: Factors to show first, in the given order.
        extra: Also show this many other factors with the highest MPPs. If
            None, show every other factor.

    Raises:
        InputError: A focus factor doesn't exist.
    """
    by_name = {summary.name: summary for summary in summaries}
    for name in focus:
        if name not in by_name:
            raise InputError("there is no factor named '{}'".format(name))

    focused = [by_name[name] for name in focus]
    others = [summary for summary in summaries if summary.name not in focus]
    # sorted() is stable, so equal MPPs keep the factor order.
    others = sorted(others, key=lambda summary: -summary.mpp)
    if extra is not None:
        others = others[:extra]
    return focused + others


def _write_frame(frame: pd.DataFrame, path: str) -> None:
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)


def write_mpp_csv(summaries: Sequence[FactorSummary], path: str) -> None:
    """Write a factor table with blank cells for undefined statistics."""
    frame = pd.DataFrame({
        "factor": [summary.name for summary in summaries],
        "mpp": [summary.mpp for summary in summaries],
        "beta_mean": [
            summary.beta_mean_given_included for summary in summaries],
        "beta_sd": [
            summary.beta_sd_given_included for summary in summaries],
        "inclusion_count": [summary.inclusion_count for summary in summaries],
        })
    _write_frame(frame, path)


def write_jpp_csv(
        models: Sequence[ModelSummary], factor_names: Sequence[str],
        path: str, aucs: Optional[Sequence[Optional[float]]] = None) -> None:
    """Write a model table, optionally with a refit AUC for each model."""
    columns = {
        "rank": [model.rank for model in models],
        "factors": [
            ";".join(model.indicator.names(factor_names)) for model in models],
        "size": [model.indicator.size for model in models],
        "count": [model.count for model in models],
        "jpp": [model.jpp for model in models],
        }
    if aucs is not None:
        columns["auc"] = list(aucs)
    _write_frame(pd.DataFrame(columns), path)


def write_inclusion_csv(
        inclusion: InclusionMatrix, factor_names: Sequence[str],
        path: str) -> None:
    """Write an inclusion matrix with one row per model."""
    frame = pd.DataFrame(inclusion.matrix, columns=list(factor_names))
    frame.insert(0, "jpp", inclusion.jpp)
    frame.insert(0, "rank", np.arange(1, len(frame) + 1))
    _write_frame(frame, path)
