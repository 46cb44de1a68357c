"""The spike-and-slab prior over factor inclusion and coefficients.

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
import dataclasses
from dataclasses import dataclass
from typing import (
    Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple)

import numpy as np

from bvs.container import JSONFile
from bvs.data import Dataset
from bvs.exceptions import FileParseError, InputError, RankDeficiencyError

logger = logging.getLogger(__name__)

GPRIOR = "gprior"
DIAGONAL = "diag"
SLAB_POLICIES = (GPRIOR, DIAGONAL)

# Relative eigenvalue below which a Gram matrix counts as singular.
RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ModelIndicator:
    """The set of factors included in a model.

    The intercept is always included and isn't represented.

    Attributes:
        bits: One 0 or 1 for each factor.
    """
    bits: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(int(bit) for bit in self.bits))
        if any(bit not in (0, 1) for bit in self.bits):
            raise ValueError("indicator bits must be 0 or 1")

    @classmethod
    def empty(cls, P: int) -> "ModelIndicator":
        return cls((0,) * P)

    @classmethod
    def from_indices(cls, P: int, indices: Iterable[int]) -> "ModelIndicator":
        bits = [0] * P
        for index in indices:
            bits[index] = 1
        return cls(tuple(bits))

    @classmethod
    def from_names(
            cls, factor_names: Sequence[str],
            names: Iterable[str]) -> "ModelIndicator":
        """Build an indicator from factor names.

        Raises:
            InputError: A name isn't one of the factor names.
        """
        indices = []
        for name in names:
            if name not in factor_names:
                raise InputError("there is no factor named '{}'".format(name))
            indices.append(list(factor_names).index(name))
        return cls.from_indices(len(factor_names), indices)

    @property
    def P(self) -> int:
        return len(self.bits)

    @property
    def size(self) -> int:
        return sum(self.bits)

    @property
    def included(self) -> List[int]:
        """The indices of the included factors."""
        return [index for index, bit in enumerate(self.bits) if bit]

    @property
    def excluded(self) -> List[int]:
        return [index for index, bit in enumerate(self.bits) if not bit]

    @property
    def columns(self) -> List[int]:
        """The design columns of the model, intercept first."""
        return [0] + [index + 1 for index in self.included]

    def flip(self, index: int) -> "ModelIndicator":
        bits = list(self.bits)
        bits[index] = 1 - bits[index]
        return ModelIndicator(tuple(bits))

    def names(self, factor_names: Sequence[str]) -> List[str]:
        return [factor_names[index] for index in self.included]

    def key(self) -> str:
        """The bits as a string, such as "0110"."""
        return "".join(str(bit) for bit in self.bits)


def multiplicity_weights(P: int, m: float) -> np.ndarray:
    """Get prior inclusion probabilities with a fixed expected model size.

    Every factor gets the probability m/P, so the prior expected number of
    factors is m however many factors there are to choose from.

    Args:
        P: The number of candidate factors.
        m: The expected model size.

    Raises:
        InputError: m isn't in (0, P].
    """
    if not 0 < m <= P:
        raise InputError(
            "the expected model size must be above 0 and at most the number "
            "of factors ({})".format(P))
    return np.full(P, m / P)


@dataclass(frozen=True)
class PriorConfig:
    """The prior over models and coefficients.

    Attributes:
        w: The prior inclusion probability of each factor.
        slab_policy: "gprior" for g·(X'X)^-1 or "diag" for v·I.
        g: The g-prior scale. If None, the number of individuals is used.
        v: The diagonal slab variance.
        expected_model_size: The expected model size w was derived from.
        intercept_variance: The prior variance of the intercept under the
            diagonal slab.
        pinned: The indices of factors whose inclusion probability was set
            individually rather than derived from the expected model size.
    """
    w: Tuple[float, ...]
    slab_policy: str = GPRIOR
    g: Optional[float] = None
    v: float = 4.0
    expected_model_size: float = 5.0
    intercept_variance: float = 100.0
    pinned: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        w = tuple(float(value) for value in self.w)
        object.__setattr__(self, "w", w)
        pinned = tuple(sorted({int(index) for index in self.pinned}))
        object.__setattr__(self, "pinned", pinned)
        problems = []
        if any(not 0.0 <= value <= 1.0 for value in w):
            problems.append("inclusion probabilities must be between 0 and 1")
        if any(not 0 <= index < len(w) for index in self.pinned):
            problems.append("pinned factors must index the factors")
        if self.slab_policy not in SLAB_POLICIES:
            problems.append("the slab must be one of {}".format(
                ", ".join(SLAB_POLICIES)))
        if self.g is not None and not self.g > 0:
            problems.append("g must be positive")
        if not self.v > 0:
            problems.append("v must be positive")
        if not self.intercept_variance > 0:
            problems.append("the intercept variance must be positive")
        if not 0 < self.expected_model_size <= max(len(w), 1):
            problems.append(
                "the expected model size must be above 0 and at most the "
                "number of factors")
        if problems:
            raise InputError(*problems)

    @classmethod
    def for_dataset(
            cls, P: int, expected_model_size: float = 5.0,
            **kwargs: Any) -> "PriorConfig":
        """Build the default prior for P factors.

        An expected model size above P is lowered to P.
        """
        if expected_model_size > P:
            logger.warning(
                "lowering the expected model size from %g to the number of "
                "factors, %d", expected_model_size, P)
            expected_model_size = P
        return cls(
            tuple(multiplicity_weights(P, expected_model_size)),
            expected_model_size=expected_model_size, **kwargs)

    @property
    def w_array(self) -> np.ndarray:
        return np.asarray(self.w)

    def with_w(self, w: Sequence[float]) -> "PriorConfig":
        return dataclasses.replace(self, w=tuple(w))

    def with_overrides(
            self, factor_names: Sequence[str],
            overrides: Mapping[str, float]) -> "PriorConfig":
        """Replace the inclusion probabilities of some factors.

        The factors are marked as pinned, so sensitivity sweeps keep them.

        Raises:
            InputError: An override names an unknown factor.
        """
        w = list(self.w)
        pinned = set(self.pinned)
        for name, value in overrides.items():
            if name not in factor_names:
                raise InputError(
                    "the prior names an unknown factor '{}'".format(name))
            index = list(factor_names).index(name)
            w[index] = float(value)
            pinned.add(index)
        return dataclasses.replace(self, w=tuple(w), pinned=tuple(pinned))

    def g_for(self, n: int) -> float:
        return float(n) if self.g is None else self.g

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "PriorConfig":
        try:
            return cls(**doc)
        except TypeError as error:
            raise FileParseError("invalid prior: {}".format(error))

    @classmethod
    def from_json(cls, path: str) -> "PriorConfig":
        json_file = JSONFile(path)
        json_file.read()
        return cls.from_dict(json_file.vals)

    def write_json(self, path: str) -> None:
        json_file = JSONFile(path)
        json_file.vals = self.to_dict()
        json_file.write()


def slab_covariance_from_gram(
        gram: np.ndarray, cfg: PriorConfig, n: int) -> np.ndarray:
    """Build the slab covariance from the Gram matrix of a model's columns.

    Args:
        gram: X'X for the intercept and the included factors.
        cfg: The prior.
        n: The number of individuals, the default g.

    Raises:
        RankDeficiencyError: The g-prior is used and X'X is singular.
    """
    size = gram.shape[0]
    if cfg.slab_policy == DIAGONAL:
        covariance = cfg.v * np.eye(size)
        covariance[0, 0] = cfg.intercept_variance
        return covariance

    eigenvalues = np.linalg.eigvalsh(gram)
    if eigenvalues[0] <= RANK_TOLERANCE * max(eigenvalues[-1], 1.0):
        raise RankDeficiencyError(
            "the included columns are collinear, so the g-prior is "
            "undefined; use the diagonal slab or add ridge jitter")
    covariance = cfg.g_for(n) * np.linalg.inv(gram)
    return (covariance + covariance.T) / 2


def build_slab_covariance(
        ds: Dataset, gamma: ModelIndicator, cfg: PriorConfig) -> np.ndarray:
    """Get the prior covariance of the intercept and included coefficients.

    Returns:
        A (size+1)×(size+1) symmetric positive definite matrix.

    Raises:
        RankDeficiencyError: The g-prior is used and the included columns
            don't have full column rank.
    """
    columns = ds.design[:, gamma.columns]
    return slab_covariance_from_gram(columns.T @ columns, cfg, ds.n)


def log_prior_model(gamma: ModelIndicator, cfg: PriorConfig) -> float:
    """Get the log prior probability of a model.

    A factor whose inclusion probability is 0 or 1 contributes nothing when
    the indicator agrees with it and makes the result -inf otherwise.
    """
    bits = np.asarray(gamma.bits, dtype=bool)
    w = cfg.w_array
    with np.errstate(divide="ignore"):
        terms = np.where(bits, np.log(w), np.log1p(-w))
    return float(terms.sum())


def sample_prior_models(
        cfg: PriorConfig, count: int,
        rng: np.random.Generator) -> np.ndarray:
    """Draw models from the prior.

    Returns:
        A count×P array of 0s and 1s.
    """
    return (rng.random((count, len(cfg.w))) < cfg.w_array).astype(np.int8)
