"""Leverage, chain health and correlation diagnostics.

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
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.fft
import scipy.linalg

from bvs.data import Dataset, correlation_matrix
from bvs.exceptions import InputError
from bvs.sampler import MOVES, PosteriorDraws

logger = logging.getLogger(__name__)

RIDGE = 1e-8
MIN_SERIES_LENGTH = 10


@dataclass(frozen=True)
class LeverageReport:
    """The leverage of each individual.

    Attributes:
        h: The diagonal of the hat matrix.
        flagged: The indices of individuals with leverage above threshold.
        threshold: The leverage above which individuals are flagged.
        group_labels: A label for each individual, such as their level of a
            categorical factor, or None.
        ridge: The design was rank deficient and a ridge was added.
    """
    h: np.ndarray
    flagged: np.ndarray
    threshold: float
    group_labels: Optional[np.ndarray] = None
    ridge: bool = False


def leverage(
        ds: Dataset, threshold: Optional[float] = None,
        group: Optional[str] = None) -> LeverageReport:
    """Get the hat-matrix diagonal of the design, intercept included.

    If the design doesn't have full column rank, a ridge of 1e-8 is added to
    X'X with a warning.

    Args:
        ds: The dataset.
        threshold: Flag leverage above this. Defaults to 2(P+1)/n.
        group: A categorical raw column to label individuals by.
    """
    X = ds.design
    columns = X.shape[1]
    if threshold is None:
        threshold = 2 * columns / ds.n if ds.n else np.inf

    ridge = np.linalg.matrix_rank(X) < columns
    if ridge:
        logger.warning(
            "the design doesn't have full column rank; adding a ridge of %g",
            RIDGE)
        gram = X.T @ X + RIDGE * np.eye(columns)
        solved = scipy.linalg.solve(gram, X.T, assume_a="pos")
        h = np.einsum("ij,ji->i", X, solved)
    else:
        q = np.linalg.qr(X, mode="reduced")[0]
        h = np.einsum("ij,ij->i", q, q)
    h = np.clip(h, 0.0, 1.0)

    labels = ds.group_labels(group) if group is not None else None
    return LeverageReport(
        h, np.flatnonzero(h > threshold), float(threshold), labels, ridge)


def write_leverage_csv(report: LeverageReport, path: str) -> None:
    frame = pd.DataFrame({
        "observation": np.arange(len(report.h)),
        "leverage": report.h,
        "flagged": np.isin(
            np.arange(len(report.h)), report.flagged).astype(int),
        })
    if report.group_labels is not None:
        frame["group"] = report.group_labels
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)


def acceptance_rate(draws: PosteriorDraws) -> Dict[str, float]:
    """Get the fraction of accepted proposals of each move type.

    Move types that were never proposed get NaN.
    """
    telemetry = draws.telemetry
    rates = {}
    for move in MOVES:
        proposed = telemetry.proposed.get(move, 0)
        rates[move] = (
            telemetry.accepted.get(move, 0) / proposed if proposed
            else float("nan"))
    return rates


def _autocorrelation(series: np.ndarray) -> np.ndarray:
    n = series.size
    centred = series - series.mean()
    size = scipy.fft.next_fast_len(2 * n)
    spectrum = scipy.fft.rfft(centred, size)
    power = spectrum * np.conjugate(spectrum)
    autocovariance = scipy.fft.irfft(power, size)[:n]
    return autocovariance / autocovariance[0]


def is_degenerate(series: Sequence[float]) -> bool:
    """The series is constant, so it has no autocorrelation."""
    series = np.asarray(series, dtype=float)
    return bool(np.ptp(series) == 0)


def effective_sample_size(series: Sequence[float]) -> float:
    """Estimate the number of independent draws a chain is worth.

    Autocorrelations are summed in adjacent pairs for as long as the pair
    sums stay positive, with the pair sums forced to be nonincreasing. A
    constant series has no autocorrelation and is given its own length.

    Raises:
        InputError: The series has fewer than 10 values.
    """
    series = np.asarray(series, dtype=float)
    n = series.size
    if n < MIN_SERIES_LENGTH:
        raise InputError(
            "the effective sample size needs at least {} values".format(
                MIN_SERIES_LENGTH))
    if is_degenerate(series):
        return float(n)

    rho = _autocorrelation(series)
    pair_sums = []
    for lag in range(0, n - 1, 2):
        pair = rho[lag] + rho[lag + 1]
        if pair <= 0:
            break
        pair_sums.append(pair)
    pair_sums = np.minimum.accumulate(np.array(pair_sums)) if pair_sums else (
        np.zeros(1))
    tau = -1.0 + 2.0 * pair_sums.sum()
    if tau <= 0:
        return float(n)
    return float(min(n / tau, n))


@dataclass(frozen=True)
class ChainHealth:
    """Mixing diagnostics of a chain.

    Attributes:
        factor_ess: The ESS of each factor's inclusion indicator series.
        degenerate: Factors whose indicator never changed.
        size_ess: The ESS of the model size series.
        acceptance: The acceptance rate of each move type.
    """
    factor_ess: Dict[str, float]
    degenerate: List[str]
    size_ess: float
    acceptance: Dict[str, float]


def chain_health(draws: PosteriorDraws) -> ChainHealth:
    factor_ess = {}
    degenerate = []
    for index, name in enumerate(draws.factor_names):
        series = draws.gammas[:, index]
        factor_ess[name] = effective_sample_size(series)
        if is_degenerate(series):
            degenerate.append(name)
    sizes = draws.gammas.sum(axis=1)
    return ChainHealth(
        factor_ess, degenerate, effective_sample_size(sizes),
        acceptance_rate(draws))


def write_ess_csv(health: ChainHealth, path: str) -> None:
    names = list(health.factor_ess) + ["(model size)"]
    frame = pd.DataFrame({
        "series": names,
        "ess": list(health.factor_ess.values()) + [health.size_ess],
        "degenerate": [
            int(name in health.degenerate) for name in health.factor_ess]
        + [0],
        })
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)


def correlation_screen(
        ds: Dataset, threshold: float = 0.08) -> Dict[str, float]:
    """Get the share of other factors each factor is correlated with.

    A pair counts when its absolute Pearson correlation exceeds threshold.
    """
    return correlation_matrix(ds, threshold).exceedance_share()
