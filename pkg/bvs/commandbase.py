"""A base class for program commands.

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
import abc
import logging
from typing import Any, Dict, Optional

from bvs import SETTINGS_FILE, OUTPUT_DIR, MANIFEST_NAME, DRAWS_NAME
from bvs.container import JSONFile, RunManifest, Settings
from bvs.data import Dataset, EncodingSpec, load_csv, standardize
from bvs.exceptions import InputError, StatusError
from bvs.prior import PriorConfig
from bvs.sampler import ChainConfig, PosteriorDraws, read_draws
from bvs.utils import derive_seed

logger = logging.getLogger(__name__)


class DataSource:
    """Where a command's dataset comes from.

    Attributes:
        path: The path of the CSV file.
        outcome: The name of the outcome column.
        encoding: The path of the JSON encoding document, or None to infer
            column roles.
    """
    def __init__(
            self, path: str, outcome: str,
            encoding: Optional[str] = None) -> None:
        self.path = path
        self.outcome = outcome
        self.encoding = encoding


class Command(abc.ABC):
    """Base class for program commands.

    Attributes:
        name: The name of the command as it is typed on the command line.
        settings: Analysis options resolved from the command line, the
            settings file and the defaults.
        output_dir: The directory analytical outputs are written to.
        manifest: The record of this run's inputs, seeds and outputs.
        args: The command's own arguments, recorded in the manifest.
    """
    name = None

    def __init__(
            self, config_path: Optional[str] = None,
            output_dir: Optional[str] = None,
            overrides: Optional[Dict[str, Any]] = None) -> None:
        self.settings = Settings(config_path or SETTINGS_FILE, overrides)
        self.settings.read()
        self.output_dir = output_dir or OUTPUT_DIR
        os.makedirs(self.output_dir, exist_ok=True)
        self.manifest = RunManifest(
            os.path.join(self.output_dir, MANIFEST_NAME))
        self.args = {}

    @abc.abstractmethod
    def main(self) -> None:
        """Run the command."""

    def start(self) -> None:
        """Record the command and its configuration in the manifest."""
        self.manifest.start(
            self.name,
            {"settings": self.settings.snapshot(), "args": self.args})

    def finish(self, **extra: Any) -> None:
        """Write the manifest."""
        self.manifest.finish(**extra)

    def output_path(self, filename: str, record: bool = True) -> str:
        """Get the path of an output file.

        Args:
            filename: The name of the file in the output directory.
            record: Record the path in the manifest.
        """
        path = os.path.join(self.output_dir, filename)
        if record:
            self.manifest.add_output(path)
        return path

    def seed(self, stream: str, *counters: int) -> int:
        """Derive a sub-seed from the root seed and record it."""
        seed = derive_seed(self.settings.vals["Seed"], stream, *counters)
        self.manifest.add_seed(
            "-".join([stream] + [str(counter) for counter in counters]), seed)
        return seed

    @property
    def jobs(self) -> int:
        jobs = self.settings.vals["Jobs"]
        if jobs < 1:
            raise InputError("the number of jobs must be at least 1")
        return jobs

    def load_dataset(self, source: DataSource) -> Dataset:
        """Read, encode and standardize the data."""
        spec = None
        if source.encoding:
            spec = EncodingSpec.from_json(source.encoding)
            self.manifest.add_input(source.encoding)
        ds = standardize(load_csv(source.path, spec, source.outcome))
        self.manifest.add_input(source.path)
        logger.info(
            "read %d individuals and %d factors from '%s'", ds.n, ds.P,
            source.path)
        return ds

    def prior_config(
            self, ds: Dataset, prior_file: Optional[str] = None,
            w_file: Optional[str] = None) -> PriorConfig:
        """Build the prior from a JSON document or the settings.

        Args:
            ds: The dataset the prior is for.
            prior_file: A JSON prior document to use instead of the settings.
            w_file: A JSON object mapping factor names to inclusion
                probabilities that replace the prior's.

        Raises:
            InputError: The prior doesn't match the factors of the data.
        """
        vals = self.settings.vals
        if prior_file:
            cfg = PriorConfig.from_json(prior_file)
            self.manifest.add_input(prior_file)
            if len(cfg.w) != ds.P:
                raise InputError(
                    "the prior has {0} inclusion probabilities but the data "
                    "has {1} factors".format(len(cfg.w), ds.P))
        else:
            cfg = PriorConfig.for_dataset(
                ds.P, vals["ExpectedModelSize"], slab_policy=vals["Slab"],
                g=vals["G"], v=vals["V"],
                intercept_variance=vals["InterceptVariance"])

        if w_file:
            overrides = JSONFile(w_file)
            overrides.read()
            if not isinstance(overrides.vals, dict):
                raise InputError(
                    "'{}' must map factor names to probabilities".format(
                        w_file))
            cfg = cfg.with_overrides(ds.factor_names, overrides.vals)
            self.manifest.add_input(w_file)
        return cfg

    def chain_config(self) -> ChainConfig:
        """Build the chain settings, seeded from the chain stream."""
        vals = self.settings.vals
        swap = vals["SwapProbability"]
        return ChainConfig(
            iterations=vals["Iterations"], burn_in=vals["BurnIn"],
            thin=vals["Thin"], seed=self.seed("chain"),
            move_mix=(1.0 - swap, swap), model_updates=vals["ModelUpdates"])

    def draws_base(self, draws: Optional[str]) -> str:
        return draws or os.path.join(self.output_dir, DRAWS_NAME)

    def load_draws(self, ds: Dataset, draws: Optional[str]) -> PosteriorDraws:
        """Read a chain artifact and check it belongs to the dataset.

        Raises:
            StatusError: The artifact is missing, empty or for other factors.
        """
        base = self.draws_base(draws)
        result = read_draws(base)
        self.manifest.add_input(base + ".json")
        self.manifest.add_input(base + ".csv")
        if result.factor_names != ds.factor_names:
            raise StatusError(
                "the chain artifact '{}' was run on different factors".format(
                    base))
        if not len(result):
            raise StatusError(
                "the chain artifact '{}' has no draws".format(base))
        return result
