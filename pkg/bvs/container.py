"""Classes for managing stored settings and run records.

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
import re
import os
import json
import hashlib
import datetime
from typing import Any, Dict, List, Optional, Tuple

from bvs import __version__
from bvs.exceptions import FileParseError
from bvs.utils import DictProperty, file_digest


class ConfigFile:
    """Parse a configuration file.

    Attributes:
        COMMENT_REGEX: A regex object that denotes a comment line.
        SEPARATOR: The first instance of this character on each line of the
            config file separates the key from the value.
        path: The path of the configuration file.
        raw_vals: A dict of unmodified config value strings.
        vals: This dict property is exactly the same as raw_vals. It exists so
            that subclasses can use the same interface.
    """
    COMMENT_REGEX = re.compile(r"^\s*#")
    SEPARATOR = "="

    def __init__(self, path: str) -> None:
        self.path = path
        self.raw_vals = {}

    @DictProperty
    def vals(self, key) -> str:
        """Return individual config values."""
        return self.raw_vals[key]

    @vals.setter
    def vals(self, key: str, value: str) -> None:
        """Set individual config values."""
        self.raw_vals[key] = value

    @classmethod
    def readline(cls, line: str) -> Optional[Tuple[str, str]]:
        """Parse a line for a key-value pair.

        Args:
            line: The line of the config file to read.

        Returns:
            A tuple containing the key and value if the line contains them and
            None otherwise.
        """
        if (not cls.COMMENT_REGEX.search(line)
                and cls.SEPARATOR in line):
            key, value = line.partition(cls.SEPARATOR)[::2]
            return key.strip(), value.strip()

    def read(self) -> None:
        """Parse file for key-value pairs and save in a dictionary."""
        try:
            with open(self.path) as file:
                for line in file:
                    try:
                        key, value = self.readline(line)
                        self.raw_vals[key] = value
                    except TypeError:
                        continue
        except OSError:
            raise FileParseError(
                "could not open the settings file '{}'".format(self.path))


class JSONFile:
    """Parse a JSON-formatted file.

    Args:
        path: The path of the JSON file.

    Attributes:
        path: The path of the JSON file.
        vals: A dictionary or list of values from the file.
    """
    def __init__(self, path) -> None:
        self.path = path
        self.vals = None

    def read(self) -> None:
        """Read the file.

        Raises:
            FileParseError: The file is missing or isn't valid JSON.
        """
        try:
            with open(self.path) as file:
                self.vals = json.load(file)
        except OSError:
            raise FileParseError(
                "could not open the file '{}'".format(self.path))
        except ValueError as error:
            raise FileParseError(
                "'{0}' is not valid JSON: {1}".format(self.path, error))

    def write(self) -> None:
        """Write object to a file."""
        with open(self.path, "w") as file:
            json.dump(self.vals, file, indent=4, sort_keys=True)
            file.write("\n")


def _is_number(value: str) -> bool:
    try:
        float(value)
    except ValueError:
        return False
    return True


def _is_integer(value: str) -> bool:
    try:
        int(value)
    except ValueError:
        return False
    return True


class AnalysisConfigFile(ConfigFile):
    """Parse the analysis settings file.

    The default values for every option are stored in the code, so the user
    only needs to list the options they want to change. Values given on the
    command line override the values in this file.

    Attributes:
        _opt_keys: A list of all keys that are recognized in the config file.
        _int_keys: A subset of config keys that must have integer values.
        _float_keys: A subset of config keys that must have numeric values.
        _choices: Allowed values for keys with a fixed set of values.
        _defaults: A dictionary of default string values for config keys.
        path: The path of the configuration file.
        raw_vals: A dict of unmodified config value strings.
        vals: A dict property that returns values from raw_vals but defaults to
            value from _defaults.
    """
    _opt_keys = [
        "ExpectedModelSize", "Slab", "G", "V", "InterceptVariance",
        "Iterations", "BurnIn", "Thin", "ModelUpdates", "SwapProbability",
        "Folds", "Pooling", "ScreenThreshold", "EnterP", "ExitP",
        "FixedOther", "TopModels", "Seed", "Jobs"
        ]
    _int_keys = [
        "Iterations", "BurnIn", "Thin", "ModelUpdates", "Folds", "TopModels",
        "Seed", "Jobs"
        ]
    _float_keys = [
        "ExpectedModelSize", "G", "V", "InterceptVariance", "SwapProbability",
        "ScreenThreshold", "EnterP", "ExitP", "FixedOther"
        ]
    _choices = {
        "Slab": ["gprior", "diag"],
        "Pooling": ["pooled", "mean"],
        }
    _defaults = {
        "ExpectedModelSize": "5",
        "Slab": "gprior",
        # An empty G means g = n, the number of individuals.
        "G": "",
        "V": "4",
        "InterceptVariance": "100",
        "Iterations": "110000",
        "BurnIn": "10000",
        "Thin": "1",
        "ModelUpdates": "5",
        "SwapProbability": "0.5",
        "Folds": "5",
        "Pooling": "pooled",
        "ScreenThreshold": "0.003",
        "EnterP": "0.05",
        "ExitP": "0.10",
        "FixedOther": "0.78",
        "TopModels": "20",
        "Seed": "0",
        "Jobs": "1",
        }

    @DictProperty
    def vals(self, key) -> Any:
        """Get defaults if corresponding raw values are unset."""
        if key in self.raw_vals:
            return self.raw_vals[key]
        elif key in self._defaults:
            return self._defaults[key]

    @vals.setter
    def vals(self, key: str, value: str) -> None:
        """Set individual config values."""
        self.raw_vals[key] = value

    def _check_value(self, key: str, value: str) -> Optional[str]:
        if key in self._int_keys and not _is_integer(value):
            return "must have an integer value"
        if key in self._float_keys and value and not _is_number(value):
            return "must have a numeric value"
        if key in self._choices and value not in self._choices[key]:
            return "must be one of {}".format(", ".join(self._choices[key]))

    def check_all(self, check_empty=True, context="settings file") -> None:
        """Check that file is valid and syntactically correct.

        Args:
            check_empty: Check empty/unset values.
            context: The context to show in the error messages.

        Raises:
            FileParseError: There were unrecognized or invalid options in the
                config file.
        """
        parse_errors = []

        unrecognized_keys = self.raw_vals.keys() - set(self._opt_keys)
        for key in sorted(unrecognized_keys):
            parse_errors.append(
                "{0}: unrecognized option '{1}'".format(context, key))

        for key, value in sorted(self.raw_vals.items()):
            if key not in self._opt_keys:
                continue
            if check_empty or not check_empty and value:
                err_msg = self._check_value(key, value)
                if err_msg:
                    parse_errors.append(
                        "{0}: '{1}' {2}".format(context, key, err_msg))

        if parse_errors:
            raise FileParseError(*parse_errors)

    def typed(self, key: str) -> Any:
        """Get a config value converted to its Python type."""
        value = self.vals[key]
        if key in self._int_keys:
            return int(value)
        if key in self._float_keys:
            return float(value) if value else None
        return value


class Settings:
    """Resolve analysis options from the command line and the settings file.

    Attributes:
        _cfg_file: An object for data stored in the settings file.
        _overrides: Values given on the command line, keyed by settings key.
    """
    def __init__(self, path: str, overrides: Dict[str, Any] = None) -> None:
        self._cfg_file = AnalysisConfigFile(path)
        self._overrides = {
            key: value for key, value in (overrides or {}).items()
            if value is not None}

    def read(self) -> None:
        """Load and check the settings file if there is one."""
        if os.path.isfile(self._cfg_file.path):
            self._cfg_file.read()
            self._cfg_file.check_all()

    @DictProperty
    def vals(self, key: str) -> Any:
        """A command-line value, else a settings file value, else a default."""
        if key in self._overrides:
            return self._overrides[key]
        return self._cfg_file.typed(key)

    def snapshot(self) -> Dict[str, Any]:
        """Get every resolved option, for recording in a manifest."""
        return {key: self.vals[key] for key in AnalysisConfigFile._opt_keys}


class RunManifest(JSONFile):
    """Record what went into a command and what came out of it.

    Two runs whose manifests have the same config hash, seeds and input
    digests produce byte-identical analytical outputs. Timestamps and wall
    times are only recorded here, never in the analytical outputs.

    Args:
        path: The path of the JSON file.

    Attributes:
        vals: A dict of values from the file.
    """
    def __init__(self, path: str) -> None:
        super().__init__(path)
        self.vals = {
            "software_version": __version__,
            "inputs": {},
            "outputs": [],
            "seeds": {},
            }

    @staticmethod
    def hash_config(config: Dict[str, Any]) -> str:
        """Hash a configuration independently of its key order."""
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def start(self, command: str, config: Dict[str, Any]) -> None:
        """Record the command, its configuration and the start time."""
        self.vals["command"] = command
        self.vals["config"] = config
        self.vals["config_hash"] = self.hash_config(config)
        self.vals["started"] = _utc_now()

    def add_input(self, path: Optional[str]) -> None:
        """Record the digest of an input file."""
        if path:
            self.vals["inputs"][path] = file_digest(path)

    def add_seed(self, name: str, seed: int) -> None:
        self.vals["seeds"][name] = seed

    def add_output(self, path: str) -> None:
        self.vals["outputs"].append(path)

    def finish(self, **extra: Any) -> None:
        """Record the finish time and any telemetry, then write the file."""
        self.vals["finished"] = _utc_now()
        self.vals.update(extra)
        self.write()

    @property
    def outputs(self) -> List[str]:
        return self.vals["outputs"]


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%S.%f")
