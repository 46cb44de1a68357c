"""Shared fixtures for the tests.

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
from typing import Optional, Sequence

import numpy as np
import pytest

from bvs.data import CONTINUOUS, ColumnEncoding, Dataset, EncodingLog


def build_dataset(
        factors, outcome,
        names: Optional[Sequence[str]] = None) -> Dataset:
    """Build a dataset straight from a factor matrix."""
    factors = np.asarray(factors, dtype=float)
    if factors.ndim == 1:
        factors = factors.reshape(-1, 1)
    if names is None:
        names = tuple(
            "x{}".format(index + 1) for index in range(factors.shape[1]))
    encoding_log = EncodingLog(
        tuple(ColumnEncoding(name, CONTINUOUS, (name,)) for name in names),
        "y", rows_read=factors.shape[0])
    design = np.column_stack([np.ones(factors.shape[0]), factors])
    return Dataset(design, outcome, tuple(names), encoding_log)


@pytest.fixture(autouse=True)
def reset_logging():
    """Undo the handlers the command-line interface installs."""
    yield
    logger = logging.getLogger("bvs")
    logger.handlers = []
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def make_dataset():
    """Get a function that builds datasets from arrays."""
    return build_dataset


@pytest.fixture
def simulated() -> Dataset:
    """A cohort where only the first of three factors drives the outcome."""
    rng = np.random.default_rng(20180601)
    factors = rng.standard_normal((80, 3))
    latent = 1.5 * factors[:, 0] + rng.standard_normal(80)
    return build_dataset(factors, (latent > 0).astype(int))
