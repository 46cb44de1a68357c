"""Sample the joint posterior of models and coefficients.

The sampler augments the probit model with latent Gaussian utilities z
(Albert and Chib), so that, given z, the model is linear and Gaussian. The
coefficients then integrate out in closed form, which lets the model
indicator move by Metropolis-Hastings add, delete and swap proposals before
the coefficients of the current model are drawn exactly.

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
import os
import math
import time
import logging
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import special

from bvs.container import JSONFile
from bvs.data import Dataset
from bvs.exceptions import (
    FileParseError, InputError, NumericalError, RankDeficiencyError,
    StatusError)
from bvs.prior import (
    ModelIndicator, PriorConfig, log_prior_model, slab_covariance_from_gram)

logger = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"

ADD = "add"
DELETE = "delete"
SWAP = "swap"
MOVES = (ADD, DELETE, SWAP)

# Standardized truncation points above this use exponential rejection.
DEEP_TAIL = 5.0

LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class ChainConfig:
    """The settings of one Markov chain.

    Attributes:
        iterations: The total number of sweeps, burn-in included.
        burn_in: The number of initial sweeps that aren't stored.
        thin: Store every thin-th sweep after the burn-in.
        seed: The seed of the chain's random generator.
        move_mix: The probabilities of an add/delete and of a swap proposal.
        model_updates: The number of model moves per latent sweep.
    """
    iterations: int = 110000
    burn_in: int = 10000
    thin: int = 1
    seed: int = 0
    move_mix: Tuple[float, float] = (0.5, 0.5)
    model_updates: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "move_mix", tuple(float(p) for p in self.move_mix))
        problems = []
        if not 0 <= self.burn_in < self.iterations:
            problems.append(
                "the burn-in must be below the number of iterations")
        if self.thin < 1:
            problems.append("the thinning interval must be at least 1")
        if self.model_updates < 1:
            problems.append("there must be at least one model move per sweep")
        if (len(self.move_mix) != 2 or min(self.move_mix) < 0
                or abs(sum(self.move_mix) - 1.0) > 1e-12):
            problems.append(
                "the move probabilities must be two nonnegative numbers that "
                "sum to 1")
        if problems:
            raise InputError(*problems)

    @property
    def draw_count(self) -> int:
        return len(range(self.burn_in, self.iterations, self.thin))

    def with_seed(self, seed: int) -> "ChainConfig":
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        doc = dataclasses.asdict(self)
        doc["move_mix"] = list(self.move_mix)
        return doc


@dataclass
class ChainTelemetry:
    """What happened while a chain ran.

    Attributes:
        proposed: The number of model moves proposed of each kind.
        accepted: The number of model moves accepted of each kind.
        seed: The seed of the chain.
        config: A snapshot of the chain and prior settings.
        wall_time: The running time in seconds.
    """
    proposed: Dict[str, int] = field(
        default_factory=lambda: dict.fromkeys(MOVES, 0))
    accepted: Dict[str, int] = field(
        default_factory=lambda: dict.fromkeys(MOVES, 0))
    seed: int = 0
    config: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0


@dataclass(frozen=True)
class PosteriorDraws:
    """The stored draws of a chain.

    Attributes:
        factor_names: The names of the factors.
        gammas: A D×P array with the model indicator of each draw.
        betas: A D×(P+1) array with the coefficients of each draw, intercept
            first. Coefficients of excluded factors are exactly 0.
        telemetry: Acceptance counts, seed and settings of the chain.
    """
    factor_names: Tuple[str, ...]
    gammas: np.ndarray
    betas: np.ndarray
    telemetry: ChainTelemetry = field(default_factory=ChainTelemetry)

    def __post_init__(self) -> None:
        gammas = np.array(self.gammas, dtype=np.int8).reshape(
            -1, len(self.factor_names))
        betas = np.array(self.betas, dtype=float).reshape(
            -1, len(self.factor_names) + 1)
        if gammas.shape[0] != betas.shape[0]:
            raise ValueError("there must be one model per coefficient draw")
        if np.any(betas[:, 1:][gammas == 0] != 0.0):
            raise ValueError("excluded factors must have zero coefficients")
        gammas.flags.writeable = False
        betas.flags.writeable = False
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "factor_names", tuple(self.factor_names))

    def __len__(self) -> int:
        return self.gammas.shape[0]

    @property
    def P(self) -> int:
        return len(self.factor_names)

    def indicator(self, index: int) -> ModelIndicator:
        return ModelIndicator(tuple(self.gammas[index]))


def _exponential_tail(
        lower: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw from N(0, 1) truncated below at points far in the upper tail."""
    alpha = (lower + np.sqrt(lower ** 2 + 4.0)) / 2.0
    draws = np.empty_like(lower)
    pending = np.arange(lower.size)
    while pending.size:
        candidates = lower[pending] + rng.exponential(
            1.0 / alpha[pending])
        log_u = np.log(1.0 - rng.random(pending.size))
        accepted = log_u <= -(candidates - alpha[pending]) ** 2 / 2.0
        draws[pending[accepted]] = candidates[accepted]
        pending = pending[~accepted]
    return draws


def truncated_standard_normal(
        lower: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw from N(0, 1) truncated to (lower, inf), elementwise.

    Inverse-CDF sampling on the upper tail is used unless the truncation
    point is more than DEEP_TAIL standard deviations above the mean, where
    exponential rejection takes over.
    """
    lower = np.asarray(lower, dtype=float)
    draws = np.empty_like(lower)
    mild = lower <= DEEP_TAIL
    if mild.any():
        u = 1.0 - rng.random(int(mild.sum()))
        draws[mild] = -special.ndtri(u * special.ndtr(-lower[mild]))
    if not mild.all():
        draws[~mild] = _exponential_tail(lower[~mild], rng)
    return draws


def sample_truncated_normal(
        mu: float, sigma: float, side: str,
        rng: np.random.Generator) -> float:
    """Draw from N(mu, sigma²) truncated to one side of zero.

    Args:
        mu: The mean before truncation.
        sigma: The standard deviation before truncation.
        side: "positive" for (0, inf) or "negative" for (-inf, 0).
        rng: The random generator.

    Raises:
        InputError: sigma isn't positive or side isn't valid.
    """
    if not sigma > 0:
        raise InputError("sigma must be positive")
    if side == POSITIVE:
        return float(mu + sigma * truncated_standard_normal(
            np.array([-mu / sigma]), rng)[0])
    if side == NEGATIVE:
        return float(mu - sigma * truncated_standard_normal(
            np.array([mu / sigma]), rng)[0])
    raise InputError("side must be '{0}' or '{1}'".format(POSITIVE, NEGATIVE))


def gibbs_latent_update(
        ds: Dataset, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw the latent utilities given the coefficients.

    Each z_i is drawn from N(x_i·beta, 1), truncated to be positive when
    y_i is 1 and negative when it is 0.
    """
    eta = ds.design @ np.asarray(beta, dtype=float)
    sign = np.where(ds.outcome == 1, 1.0, -1.0)
    z = eta + sign * truncated_standard_normal(-sign * eta, rng)

    # Rounding can land a draw from the very edge of the support on zero.
    wrong = sign * z <= 0.0
    z[wrong] = sign[wrong] * np.finfo(float).tiny
    return z


@dataclass
class _ModelTerms:
    log_marginal: float
    precision_chol: np.ndarray
    whitened_cross: np.ndarray


class ModelScorer:
    """Score models against a fixed vector of latent utilities.

    Given z, the model is z = X_A β_A + ε with β_A ~ N(0, Σ_A), so β_A
    integrates out in closed form. Results are cached per model until the
    next call to bind().

    Attributes:
        ds: The dataset.
        cfg: The prior.
        gram: X'X for the full design.
    """
    def __init__(self, ds: Dataset, cfg: PriorConfig) -> None:
        if len(cfg.w) != ds.P:
            raise InputError(
                "the prior has {0} inclusion probabilities but the data has "
                "{1} factors".format(len(cfg.w), ds.P))
        self.ds = ds
        self.cfg = cfg
        self.gram = ds.design.T @ ds.design
        self._cross = None
        self._zz = None
        self._cache = {}

    def bind(self, z: np.ndarray) -> "ModelScorer":
        """Set the latent utilities and clear the cache."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.ds.n,):
            raise InputError("z must have one value per individual")
        self._cross = self.ds.design.T @ z
        self._zz = float(z @ z)
        self._cache = {}
        return self

    def _terms(self, gamma: ModelIndicator) -> _ModelTerms:
        cached = self._cache.get(gamma.bits)
        if isinstance(cached, Exception):
            raise cached
        if cached is not None:
            return cached
        try:
            terms = self._compute(gamma)
        except RankDeficiencyError as error:
            self._cache[gamma.bits] = error
            raise
        self._cache[gamma.bits] = terms
        return terms

    def _compute(self, gamma: ModelIndicator) -> _ModelTerms:
        if self._cross is None:
            raise StatusError("no latent utilities have been bound")
        columns = gamma.columns
        gram = self.gram[np.ix_(columns, columns)]
        covariance = slab_covariance_from_gram(gram, self.cfg, self.ds.n)
        size = len(columns)

        try:
            covariance_chol = scipy.linalg.cholesky(covariance, lower=True)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "the slab covariance of model {0} isn't positive definite "
                "(condition number {1:.3g})".format(
                    gamma.key(), np.linalg.cond(covariance)))
        precision = scipy.linalg.cho_solve(
            (covariance_chol, True), np.eye(size)) + gram
        precision = (precision + precision.T) / 2
        try:
            precision_chol = scipy.linalg.cholesky(precision, lower=True)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "the posterior precision of model {0} isn't positive "
                "definite (condition number {1:.3g})".format(
                    gamma.key(), np.linalg.cond(precision)))

        whitened = scipy.linalg.solve_triangular(
            precision_chol, self._cross[columns], lower=True)
        log_det_covariance = 2 * np.log(np.diag(covariance_chol)).sum()
        log_det_precision = 2 * np.log(np.diag(precision_chol)).sum()
        value = -0.5 * (
            self.ds.n * LOG_2PI + log_det_covariance + log_det_precision
            + self._zz - whitened @ whitened)
        if not np.isfinite(value):
            raise NumericalError(
                "the marginal likelihood of model {} isn't finite".format(
                    gamma.key()))
        return _ModelTerms(float(value), precision_chol, whitened)

    def log_marginal(self, gamma: ModelIndicator) -> float:
        """Get log N(z | 0, I + X_A Σ_A X_A')."""
        return self._terms(gamma).log_marginal

    def draw_beta(
            self, gamma: ModelIndicator,
            rng: np.random.Generator) -> np.ndarray:
        """Draw the coefficients of a model given z.

        Returns:
            A length-(P+1) vector that is exactly 0 for excluded factors.
        """
        terms = self._terms(gamma)
        noise = rng.standard_normal(terms.whitened_cross.size)
        # β_A = M^-1 X_A'z + L'^-1 ε, where M = LL'.
        draw = scipy.linalg.solve_triangular(
            terms.precision_chol, terms.whitened_cross + noise,
            lower=True, trans="T")
        beta = np.zeros(self.ds.P + 1)
        beta[gamma.columns] = draw
        return beta


def log_marginal_z(
        z: np.ndarray, gamma: ModelIndicator, ds: Dataset,
        cfg: PriorConfig) -> float:
    """Get the log marginal likelihood of the latent utilities under a model.

    Raises:
        RankDeficiencyError: The g-prior is undefined for the model.
        NumericalError: The posterior precision isn't positive definite.
    """
    return ModelScorer(ds, cfg).bind(z).log_marginal(gamma)


def conditional_beta_draw(
        z: np.ndarray, gamma: ModelIndicator, ds: Dataset, cfg: PriorConfig,
        rng: np.random.Generator) -> np.ndarray:
    """Draw the coefficients from their conditional posterior given z."""
    return ModelScorer(ds, cfg).bind(z).draw_beta(gamma, rng)


def _flip_probability(
        gamma: ModelIndicator, move_mix: Tuple[float, float]) -> float:
    can_swap = 0 < gamma.size < gamma.P
    return move_mix[0] if can_swap else 1.0


def _propose(
        gamma: ModelIndicator, move_mix: Tuple[float, float],
        rng: np.random.Generator) -> Tuple[ModelIndicator, float, str]:
    if gamma.P < 1:
        raise InputError("model moves need at least one factor")

    if 0 < gamma.size < gamma.P and rng.random() < move_mix[1]:
        included = gamma.included
        excluded = gamma.excluded
        dropped = included[int(rng.integers(len(included)))]
        added = excluded[int(rng.integers(len(excluded)))]
        # Both directions choose among the same included/excluded counts.
        return gamma.flip(dropped).flip(added), 0.0, SWAP

    index = int(rng.integers(gamma.P))
    proposal = gamma.flip(index)
    forward = _flip_probability(gamma, move_mix)
    backward = _flip_probability(proposal, move_mix)
    log_ratio = math.log(backward) - math.log(forward) if backward > 0 else (
        -math.inf)
    return proposal, log_ratio, ADD if proposal.bits[index] else DELETE


def propose_model_move(
        gamma: ModelIndicator, move_mix: Tuple[float, float],
        rng: np.random.Generator) -> Tuple[ModelIndicator, float]:
    """Propose a new model by flipping one factor or swapping two.

    A swap exchanges an included factor with an excluded one and is only
    possible when both kinds exist; otherwise a flip is proposed.

    Args:
        gamma: The current model.
        move_mix: The probabilities of a flip and of a swap.
        rng: The random generator.

    Returns:
        The proposed model and the log ratio of the reverse to the forward
        proposal probability.
    """
    proposal, log_ratio, _ = _propose(gamma, move_mix, rng)
    return proposal, log_ratio


def _mh_step(
        scorer: ModelScorer, gamma: ModelIndicator,
        move_mix: Tuple[float, float],
        rng: np.random.Generator) -> Tuple[ModelIndicator, str, bool]:
    proposal, log_ratio, move = _propose(gamma, move_mix, rng)
    log_prior_proposal = log_prior_model(proposal, scorer.cfg)
    if log_prior_proposal == -math.inf or log_ratio == -math.inf:
        return gamma, move, False

    try:
        log_alpha = (
            scorer.log_marginal(proposal) - scorer.log_marginal(gamma)
            + log_prior_proposal - log_prior_model(gamma, scorer.cfg)
            + log_ratio)
    except RankDeficiencyError as error:
        logger.warning("rejecting model %s: %s", proposal.key(), error)
        return gamma, move, False

    if math.isnan(log_alpha):
        return gamma, move, False
    if rng.random() < math.exp(min(0.0, log_alpha)):
        return proposal, move, True
    return gamma, move, False


def mh_model_update(
        z: np.ndarray, gamma: ModelIndicator, ds: Dataset, cfg: PriorConfig,
        rng: np.random.Generator,
        move_mix: Tuple[float, float] = (0.5, 0.5),
        scorer: Optional[ModelScorer] = None) -> ModelIndicator:
    """Make one Metropolis-Hastings move over models given z.

    A proposal whose g-prior is undefined is rejected with a warning instead
    of stopping the chain.

    Args:
        z: The latent utilities.
        gamma: The current model.
        ds: The dataset.
        cfg: The prior.
        rng: The random generator.
        move_mix: The probabilities of a flip and of a swap.
        scorer: A scorer already bound to z, to reuse its cache.

    Returns:
        The proposed model if it was accepted and the current one otherwise.
    """
    if scorer is None:
        scorer = ModelScorer(ds, cfg).bind(z)
    return _mh_step(scorer, gamma, move_mix, rng)[0]


def _log_likelihood(ds: Dataset, beta: np.ndarray) -> float:
    eta = ds.design @ beta
    signed = np.where(ds.outcome == 1, eta, -eta)
    return float(np.sum(special.log_ndtr(signed)))


def initial_model(cfg: PriorConfig) -> ModelIndicator:
    """The null model, with factors whose inclusion is certain switched on."""
    return ModelIndicator(tuple(int(w == 1.0) for w in cfg.w))


def run_chain(
        ds: Dataset, cfg: PriorConfig, chain: ChainConfig) -> PosteriorDraws:
    """Run one chain and keep its thinned draws after the burn-in.

    Each sweep draws the latent utilities, makes chain.model_updates model
    moves and draws the coefficients of the current model. The same seed
    always gives the same draws.

    Raises:
        NumericalError: The log-likelihood stopped being finite.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(chain.seed)
    scorer = ModelScorer(ds, cfg)
    telemetry = ChainTelemetry(
        seed=chain.seed,
        config={"chain": chain.to_dict(), "prior": cfg.to_dict()})

    gamma = initial_model(cfg)
    beta = np.zeros(ds.P + 1)
    gammas = np.zeros((chain.draw_count, ds.P), dtype=np.int8)
    betas = np.zeros((chain.draw_count, ds.P + 1))
    stored = 0
    report_every = max(chain.iterations // 10, 1)

    for iteration in range(chain.iterations):
        try:
            scorer.bind(gibbs_latent_update(ds, beta, rng))
            for _ in range(chain.model_updates if ds.P else 0):
                gamma, move, accepted = _mh_step(
                    scorer, gamma, chain.move_mix, rng)
                telemetry.proposed[move] += 1
                telemetry.accepted[move] += accepted
            beta = scorer.draw_beta(gamma, rng)
        except NumericalError as error:
            raise NumericalError(
                "the chain failed at iteration {0} in model {1}".format(
                    iteration, gamma.key()), *error.args)

        if not np.isfinite(_log_likelihood(ds, beta)):
            raise NumericalError(
                "the log-likelihood isn't finite at iteration {}".format(
                    iteration),
                "model {0}, coefficients {1}".format(
                    gamma.key(), np.array2string(beta, precision=4)))

        if (iteration >= chain.burn_in
                and (iteration - chain.burn_in) % chain.thin == 0):
            gammas[stored] = gamma.bits
            betas[stored] = beta
            stored += 1
        if (iteration + 1) % report_every == 0:
            logger.debug(
                "chain %d: %d of %d iterations", chain.seed, iteration + 1,
                chain.iterations)

    telemetry.wall_time = time.perf_counter() - started
    return PosteriorDraws(ds.factor_names, gammas, betas, telemetry)


def _artifact_paths(base: str) -> Tuple[str, str]:
    return base + ".json", base + ".csv"


def _column_names(factor_names: Sequence[str]) -> List[str]:
    return (
        ["gamma:" + name for name in factor_names]
        + ["beta:(Intercept)"]
        + ["beta:" + name for name in factor_names])


def write_draws(draws: PosteriorDraws, base: str) -> List[str]:
    """Write draws as a JSON header and a CSV body.

    The wall time isn't written, so equal seeds give byte-identical files.

    Args:
        draws: The draws to write.
        base: The path of the files without their extensions.

    Returns:
        The paths of the files that were written.
    """
    header_path, body_path = _artifact_paths(base)
    header = JSONFile(header_path)
    header.vals = {
        "factor_names": list(draws.factor_names),
        "seed": draws.telemetry.seed,
        "config": draws.telemetry.config,
        "proposed": draws.telemetry.proposed,
        "accepted": draws.telemetry.accepted,
        "draws": len(draws),
        }
    header.write()

    frame = pd.DataFrame(
        np.hstack([draws.gammas.astype(float), draws.betas]),
        columns=_column_names(draws.factor_names))
    frame[frame.columns[:draws.P]] = frame[frame.columns[:draws.P]].astype(int)
    with open(body_path, "w", newline="") as file:
        frame.to_csv(file, index=False, float_format="%.17g")
    return [header_path, body_path]


def read_draws(base: str) -> PosteriorDraws:
    """Read draws written by write_draws().

    Raises:
        StatusError: There is no artifact at that path.
        FileParseError: The artifact is malformed.
    """
    header_path, body_path = _artifact_paths(base)
    if not (os.path.isfile(header_path) and os.path.isfile(body_path)):
        raise StatusError("there is no chain artifact at '{}'".format(base))
    header = JSONFile(header_path)
    header.read()
    try:
        names = tuple(header.vals["factor_names"])
        with open(body_path, newline="") as file:
            frame = pd.read_csv(file, float_precision="round_trip")
        frame = frame[_column_names(names)]
        telemetry = ChainTelemetry(
            proposed=dict(header.vals["proposed"]),
            accepted=dict(header.vals["accepted"]),
            seed=header.vals["seed"], config=header.vals["config"])
        values = frame.to_numpy(dtype=float)
        return PosteriorDraws(
            names, values[:, :len(names)], values[:, len(names):], telemetry)
    except (KeyError, ValueError, pd.errors.ParserError) as error:
        raise FileParseError(
            "'{0}' isn't a valid chain artifact: {1}".format(base, error))
