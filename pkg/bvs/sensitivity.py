"""Measure how inclusion probabilities depend on the prior.

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

from bvs.data import Dataset
from bvs.exceptions import InputError, ProgramError
from bvs.prior import PriorConfig
from bvs.prediction import POOLED, bma_cv_auc
from bvs.sampler import ChainConfig, run_chain
from bvs.utils import derive_seed, parallel_map

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(step / 10 for step in range(11))
DEFAULT_FIXED_OTHER = 0.78

ROBUST_IN = "robust-in"
ROBUST_OUT = "robust-out"
PRIOR_DRIVEN = "prior-driven"

MIN_INTERIOR_POINTS = 3


@dataclass(frozen=True)
class SensitivityCurve:
    """The MPP of one factor across its prior inclusion probability.

    Attributes:
        factor: The name of the factor.
        grid: The prior inclusion probabilities, strictly increasing.
        mpp_at: The factor's MPP at each grid point. NaN marks a point whose
            chain failed.
        fixed_w_other: The prior inclusion probability of every other factor.
        seeds: The chain seed of each grid point.
    """
    factor: str
    grid: Tuple[float, ...]
    mpp_at: Tuple[float, ...]
    fixed_w_other: float
    seeds: Tuple[int, ...]

    @property
    def gaps(self) -> List[int]:
        """The indices of grid points whose chain failed."""
        return [
            index for index, value in enumerate(self.mpp_at)
            if np.isnan(value)]


def _check_grid(grid: Sequence[float]) -> None:
    if not grid:
        raise InputError("the grid is empty")
    if any(not 0.0 <= value <= 1.0 for value in grid):
        raise InputError("grid values must be between 0 and 1")
    if any(later <= earlier for earlier, later in zip(grid, grid[1:])):
        raise InputError("grid values must be strictly increasing")


def _sweep_point(
        ds: Dataset, prior: PriorConfig, chain: ChainConfig, index: int,
        point: Tuple[float, int]) -> float:
    w, seed = point
    weights = list(prior.w)
    weights[index] = w
    try:
        draws = run_chain(ds, prior.with_w(weights), chain.with_seed(seed))
    except ProgramError as error:
        logger.warning("the chain at w = %g failed: %s", w, error)
        return float("nan")
    return float(draws.gammas[:, index].mean())


def prior_sweep(
        ds: Dataset, factor: str, grid: Sequence[float] = DEFAULT_GRID,
        fixed_other: float = DEFAULT_FIXED_OTHER,
        chain: ChainConfig = ChainConfig(),
        prior: Optional[PriorConfig] = None,
        jobs: int = 1) -> SensitivityCurve:
    """Re-estimate one factor's MPP across a grid of its prior probability.

    Every other factor gets the prior inclusion probability fixed_other,
    except factors pinned by the prior, which keep their own.
    Each grid point runs a fresh chain whose seed is derived from the chain
    seed and the point's position. A grid point whose chain fails leaves a
    gap with a warning instead of ending the sweep.

    Args:
        ds: The dataset.
        factor: The factor to sweep.
        grid: The prior inclusion probabilities to try.
        fixed_other: The prior inclusion probability of every other factor.
        chain: The chain settings.
        prior: The slab settings and pinned inclusion probabilities to use.
            Inclusion probabilities that aren't pinned are replaced.
        jobs: The maximum number of chains run at once.

    Raises:
        DataError: There is no factor with that name.
        InputError: The grid or fixed_other is invalid.
    """
    index = ds.factor_index(factor)
    grid = tuple(float(value) for value in grid)
    _check_grid(grid)
    if not 0.0 < fixed_other < 1.0:
        raise InputError("the fixed prior probability must be in (0, 1)")

    if prior is None:
        prior = PriorConfig.for_dataset(ds.P)
    template = prior.with_w([
        value if position in prior.pinned else fixed_other
        for position, value in enumerate(prior.w)])
    seeds = tuple(
        derive_seed(chain.seed, "sensitivity", position)
        for position in range(len(grid)))
    mpps = parallel_map(
        functools.partial(_sweep_point, ds, template, chain, index),
        list(zip(grid, seeds)), jobs)
    curve = SensitivityCurve(factor, grid, tuple(mpps), fixed_other, seeds)
    if curve.gaps:
        logger.warning(
            "%d of %d grid points failed", len(curve.gaps), len(grid))
    return curve


def classify_sensitivity(
        curve: SensitivityCurve, robust_in: float = 0.5,
        robust_out: float = 0.1) -> str:
    """Classify a factor by how its MPP responds to its prior.

    Only grid points strictly between 0 and 1 count, since the endpoints are
    fixed by the prior alone.

    Returns:
        "robust-in" if every interior MPP is above robust_in, "robust-out" if
        every one is below robust_out and "prior-driven" otherwise.

    Raises:
        InputError: There are fewer than 3 interior points with an MPP.
    """
    interior = [
        value for w, value in zip(curve.grid, curve.mpp_at)
        if 0.0 < w < 1.0 and not np.isnan(value)]
    if len(interior) < MIN_INTERIOR_POINTS:
        raise InputError(
            "classification needs at least {} interior grid points".format(
                MIN_INTERIOR_POINTS))
    if min(interior) > robust_in:
        return ROBUST_IN
    if max(interior) < robust_out:
        return ROBUST_OUT
    return PRIOR_DRIVEN


def write_curve_csv(curve: SensitivityCurve, path: str) -> None:
    frame = pd.DataFrame({
        "w": curve.grid,
        "mpp": curve.mpp_at,
        "seed": [str(seed) for seed in curve.seeds],
        })
    with open(path, "w", newline="") as file:
        frame.to_csv(file, index=False)


@dataclass(frozen=True)
class ScanPoint:
    """The cross-validated AUC of one common prior inclusion probability.

    Attributes:
        w: The prior inclusion probability of every factor.
        auc: The model-averaged cross-validated AUC, or NaN if it failed.
    """
    w: float
    auc: float


def fixed_other_scan(
        ds: Dataset, values: Sequence[float], chain: ChainConfig,
        prior: Optional[PriorConfig] = None, k: int = 5, seed: int = 0,
        pooling: str = POOLED, jobs: int = 1) -> List[ScanPoint]:
    """Score common prior inclusion probabilities by cross-validated AUC.

    Every factor that isn't pinned by the prior gets the same probability.
    This is a coarse scan, not an optimisation.

    Args:
        ds: The dataset.
        values: The probabilities to try, each in (0, 1).
        chain: The chain settings.
        prior: The slab settings to use. Inclusion probabilities that
            aren't pinned are replaced.
        k: The number of folds.
        seed: The seed of the fold assignment, shared by every value.
        pooling: How fold scores are combined.
        jobs: The maximum number of chains run at once.
    """
    if any(not 0.0 < value < 1.0 for value in values):
        raise InputError("scanned probabilities must be in (0, 1)")
    if prior is None:
        prior = PriorConfig.for_dataset(ds.P)

    points = []
    for position, value in enumerate(values):
        point_chain = chain.with_seed(
            derive_seed(chain.seed, "scan", position))
        try:
            report = bma_cv_auc(
                ds, prior.with_w([
                    own if factor in prior.pinned else value
                    for factor, own in enumerate(prior.w)]),
                point_chain, k, seed, pooling, jobs)
            points.append(ScanPoint(value, report.auc))
        except ProgramError as error:
            logger.warning("the scan at w = %g failed: %s", value, error)
            points.append(ScanPoint(value, float("nan")))
        logger.info("w = %g: AUC %.4f", value, points[-1].auc)
    return points
