"""Read cohort data and build the design matrix.

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
import logging
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from bvs.container import JSONFile
from bvs.exceptions import DataError, FileParseError

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
BINARY = "binary"
CATEGORICAL = "categorical"
ROLES = (CONTINUOUS, BINARY, CATEGORICAL)

COMPLETE_CASE = "complete-case"
IMPUTE = "impute"
MISSING_POLICIES = (COMPLETE_CASE, IMPUTE)


@dataclass(frozen=True)
class ColumnRole:
    """How one raw column is turned into design columns.

    Attributes:
        kind: One of "continuous", "binary" or "categorical".
        reference: The reference level of a categorical column. If None, the
            first observed level is used.
    """
    kind: str
    reference: Optional[str] = None


@dataclass(frozen=True)
class EncodingSpec:
    """The role of each raw column and the missing-data policy.

    Attributes:
        roles: The role of each raw column to use as a factor. Columns that
            aren't listed are ignored.
        missing: Either "complete-case" or "impute".
        outcome_labels: The (negative, positive) labels of the outcome column
            if it isn't coded as 0 and 1.
    """
    roles: Dict[str, ColumnRole]
    missing: str = COMPLETE_CASE
    outcome_labels: Optional[Tuple[str, str]] = None

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "EncodingSpec":
        """Build a spec from a parsed JSON encoding document.

        The document maps each column name to a role, either as a string or
        as an object with "role" and "reference" keys.

        Raises:
            FileParseError: The document has invalid entries.
        """
        parse_errors = []
        roles = {}
        for name, value in doc.get("columns", {}).items():
            if isinstance(value, str):
                value = {"role": value}
            if not isinstance(value, dict) or value.get("role") not in ROLES:
                parse_errors.append(
                    "encoding: column '{0}' must have a role out of {1}"
                    .format(name, ", ".join(ROLES)))
                continue
            reference = value.get("reference")
            if reference is not None and value["role"] != CATEGORICAL:
                parse_errors.append(
                    "encoding: column '{}' has a reference level but isn't "
                    "categorical".format(name))
            roles[name] = ColumnRole(
                value["role"], None if reference is None else str(reference))

        missing = doc.get("missing", COMPLETE_CASE)
        if missing not in MISSING_POLICIES:
            parse_errors.append(
                "encoding: 'missing' must be one of {}".format(
                    ", ".join(MISSING_POLICIES)))

        labels = doc.get("outcome_labels")
        if labels is not None:
            if len(labels) != 2 or str(labels[0]) == str(labels[1]):
                parse_errors.append(
                    "encoding: 'outcome_labels' must be two distinct labels")
            else:
                labels = (str(labels[0]), str(labels[1]))

        if parse_errors:
            raise FileParseError(*parse_errors)
        return cls(roles, missing, labels)

    @classmethod
    def from_json(cls, path: str) -> "EncodingSpec":
        json_file = JSONFile(path)
        json_file.read()
        return cls.from_dict(json_file.vals)

    @classmethod
    def infer(
            cls, frame: pd.DataFrame, outcome_column: str,
            missing: str = COMPLETE_CASE) -> "EncodingSpec":
        """Guess the role of every column other than the outcome.

        Numeric columns holding only 0 and 1 are binary, other numeric
        columns are continuous and anything else is categorical.
        """
        roles = {}
        for name in frame.columns:
            if name == outcome_column:
                continue
            values = frame[name][~_missing_mask(frame[name])]
            numbers = pd.to_numeric(values, errors="coerce")
            if numbers.isna().any():
                roles[name] = ColumnRole(CATEGORICAL)
            elif set(numbers.unique()) <= {0.0, 1.0}:
                roles[name] = ColumnRole(BINARY)
            else:
                roles[name] = ColumnRole(CONTINUOUS)
            logger.info("treating column '%s' as %s", name, roles[name].kind)
        return cls(roles, missing)


@dataclass(frozen=True)
class ColumnEncoding:
    """The record of how one raw column became design columns.

    Attributes:
        source: The name of the raw column.
        kind: The role of the raw column.
        design_names: The names of the design columns built from it.
        levels: The observed levels of a categorical column, in the order
            they were first seen. Dummy "<source><i>" marks levels[i].
        reference: The reference level of a categorical column.
        fill: The value used for missing cells under mean/mode imputation.
        mean: The mean subtracted when standardizing a continuous column.
        sd: The sample standard deviation divided out when standardizing.
    """
    source: str
    kind: str
    design_names: Tuple[str, ...]
    levels: Tuple[str, ...] = ()
    reference: Optional[str] = None
    fill: Any = None
    mean: Optional[float] = None
    sd: Optional[float] = None

    def encode(self, raw: pd.Series) -> Dict[str, np.ndarray]:
        """Build the design columns for raw values with no missing cells.

        Raises:
            DataError: A value can't be encoded.
        """
        if self.kind == CATEGORICAL:
            values = raw.astype(str).str.strip().to_numpy(dtype=str)
            unknown = set(values) - set(self.levels)
            if unknown:
                raise DataError(
                    "column '{0}' has unseen levels: {1}".format(
                        self.source, ", ".join(sorted(unknown))))
            dummies = {}
            for index, level in enumerate(self.levels):
                name = "{0}{1}".format(self.source, index)
                if name in self.design_names:
                    dummies[name] = (values == level).astype(float)
            return dummies

        numbers = _to_numbers(raw, self.source)
        if self.kind == BINARY:
            if not np.isin(numbers, (0.0, 1.0)).all():
                raise DataError(
                    "binary column '{}' has values other than 0 and 1; "
                    "declare it as categorical instead".format(self.source))
            return {self.design_names[0]: numbers}

        if self.mean is not None:
            numbers = scale_column(numbers, self.mean, self.sd)
        return {self.design_names[0]: numbers}


def scale_column(values: np.ndarray, mean: float, sd: float) -> np.ndarray:
    """Apply stored standardization parameters to a column."""
    return (values - mean) / sd


@dataclass(frozen=True)
class EncodingLog:
    """Everything needed to encode new rows exactly like the training rows.

    Attributes:
        columns: The encoding of each raw column that made it into the design.
        outcome_column: The name of the outcome column.
        outcome_labels: The declared (negative, positive) outcome labels.
        missing: The missing-data policy that was applied.
        rows_read: The number of data rows in the file.
        rows_dropped: The number of rows removed for missing values.
        dropped_columns: Raw columns that were dropped, such as categorical
            columns with only one level.
        standardized: Continuous columns have been z-scored.
    """
    columns: Tuple[ColumnEncoding, ...]
    outcome_column: str
    outcome_labels: Optional[Tuple[str, str]] = None
    missing: str = COMPLETE_CASE
    rows_read: int = 0
    rows_dropped: int = 0
    dropped_columns: Tuple[str, ...] = ()
    standardized: bool = False

    @property
    def design_names(self) -> Tuple[str, ...]:
        return tuple(
            name for column in self.columns for name in column.design_names)

    def source_of(self, design_name: str) -> ColumnEncoding:
        for column in self.columns:
            if design_name in column.design_names:
                return column
        raise KeyError(design_name)

    def restrict(self, names: Sequence[str]) -> "EncodingLog":
        """Keep only the given design columns."""
        columns = []
        for column in self.columns:
            kept = tuple(name for name in column.design_names if name in names)
            if kept:
                columns.append(dataclasses.replace(column, design_names=kept))
        return dataclasses.replace(self, columns=tuple(columns))

    def encode(self, frame: pd.DataFrame) -> Tuple[np.ndarray, np.ndarray]:
        """Encode raw rows, including the intercept column.

        Args:
            frame: Raw rows as strings, with empty strings for missing cells.

        Returns:
            The design matrix and a boolean mask over the rows of the frame
            marking the rows that were kept.

        Raises:
            DataError: A needed column is absent or a value can't be encoded.
        """
        absent = [
            column.source for column in self.columns
            if column.source not in frame.columns]
        if absent:
            raise DataError(
                "the data has no column named '{}'".format(absent[0]))

        kept = np.ones(len(frame), dtype=bool)
        if self.missing == COMPLETE_CASE:
            for column in self.columns:
                kept &= ~_missing_mask(frame[column.source]).to_numpy()

        blocks = {}
        for column in self.columns:
            raw = frame[column.source][kept]
            missing = _missing_mask(raw)
            if missing.any() and column.fill is None:
                raise DataError(
                    "column '{}' has missing values".format(column.source))
            if missing.any():
                raw = raw.where(~missing, str(column.fill))
            blocks.update(column.encode(raw))

        design = np.column_stack(
            [np.ones(int(kept.sum()))]
            + [blocks[name] for name in self.design_names])
        return design, kept

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "EncodingLog":
        columns = tuple(
            ColumnEncoding(**{
                **column,
                "design_names": tuple(column["design_names"]),
                "levels": tuple(column["levels"])})
            for column in doc["columns"])
        labels = doc.get("outcome_labels")
        return cls(**{
            **doc,
            "columns": columns,
            "outcome_labels": tuple(labels) if labels else None,
            "dropped_columns": tuple(doc.get("dropped_columns", ()))})


@dataclass(frozen=True)
class Dataset:
    """A design matrix with named factors and a binary outcome.

    Instances are immutable and safe to share between readers.

    Attributes:
        design: The n×(P+1) design matrix. Column 0 is the intercept.
        outcome: The length-n vector of 0s and 1s.
        factor_names: The names of design columns 1..P.
        encoding_log: How the raw data became the design.
        imputed: An n×P mask of the factor cells that were filled in under
            the impute policy, or None if none were.
    """
    design: np.ndarray
    outcome: np.ndarray
    factor_names: Tuple[str, ...]
    encoding_log: EncodingLog = field(repr=False)
    imputed: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        design = np.array(self.design, dtype=float)
        outcome = np.array(self.outcome, dtype=np.int8)
        if design.ndim != 2 or design.shape[1] != len(self.factor_names) + 1:
            raise DataError(
                "the design needs one column per factor plus the intercept")
        if outcome.shape != (design.shape[0],):
            raise DataError("the outcome doesn't match the design rows")
        if not np.all(design[:, 0] == 1.0):
            raise DataError("the first design column must be all ones")
        if not np.isin(outcome, (0, 1)).all():
            raise DataError("the outcome must only hold 0 and 1")
        if len(set(self.factor_names)) != len(self.factor_names):
            raise DataError("factor names must be unique")
        imputed = self.imputed
        if imputed is not None:
            imputed = np.array(imputed, dtype=bool)
            if imputed.shape != (design.shape[0], len(self.factor_names)):
                raise DataError("the imputed mask doesn't match the design")
            imputed.flags.writeable = False
        design.flags.writeable = False
        outcome.flags.writeable = False
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "factor_names", tuple(self.factor_names))
        object.__setattr__(self, "imputed", imputed)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def P(self) -> int:
        return len(self.factor_names)

    @property
    def factors(self) -> np.ndarray:
        """The design without the intercept column."""
        return self.design[:, 1:]

    def factor_index(self, name: str) -> int:
        """Get the position of a factor among the factor columns.

        Raises:
            DataError: There is no factor with that name.
        """
        try:
            return self.factor_names.index(name)
        except ValueError:
            raise DataError("there is no factor named '{}'".format(name))

    def subset_rows(self, indices: Sequence[int]) -> "Dataset":
        """Get a dataset with only the given rows."""
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            self.design[indices], self.outcome[indices], self.factor_names,
            self.encoding_log,
            None if self.imputed is None else self.imputed[indices])

    def select_factors(self, names: Sequence[str]) -> "Dataset":
        """Get a dataset with only the given factors, in dataset order."""
        wanted = set(names)
        for name in names:
            self.factor_index(name)
        kept = [
            index for index, name in enumerate(self.factor_names)
            if name in wanted]
        kept_names = [self.factor_names[index] for index in kept]
        return Dataset(
            self.design[:, [0] + [index + 1 for index in kept]],
            self.outcome, kept_names, self.encoding_log.restrict(kept_names),
            None if self.imputed is None else self.imputed[:, kept])

    def group_labels(self, source: str) -> np.ndarray:
        """Label each row by its level of a categorical raw column.

        Rows are labelled with the name of the dummy column that is set, or
        with the reference level when none is.

        Raises:
            DataError: The column isn't a categorical column in the design.
        """
        matches = [
            column for column in self.encoding_log.columns
            if column.source == source and column.kind == CATEGORICAL]
        if not matches:
            raise DataError(
                "'{}' isn't a categorical column of the data".format(source))
        column = matches[0]
        labels = np.full(self.n, str(column.reference), dtype=object)
        for name in column.design_names:
            labels[self.design[:, self.factor_index(name) + 1] == 1.0] = name
        return labels


def _missing_mask(series: pd.Series) -> pd.Series:
    return series.isna() | (series.astype(str).str.strip() == "")


def _to_numbers(raw: pd.Series, name: str) -> np.ndarray:
    try:
        return pd.to_numeric(raw.str.strip()).to_numpy(dtype=float)
    except (ValueError, TypeError):
        raise DataError("column '{}' has non-numeric values".format(name))


def read_frame(path: str) -> pd.DataFrame:
    """Read a CSV file as strings, with empty strings for missing cells.

    Raises:
        DataError: The file doesn't exist or isn't a CSV file with a header.
    """
    if not os.path.isfile(path):
        raise DataError("the data file '{}' does not exist".format(path))
    try:
        with open(path, encoding="utf-8", newline="") as file:
            frame = pd.read_csv(file, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as error:
        raise DataError("could not read '{0}': {1}".format(path, error))
    frame.columns = [str(name).strip() for name in frame.columns]
    return frame


def _encode_outcome(
        raw: pd.Series, name: str,
        labels: Optional[Tuple[str, str]]) -> np.ndarray:
    values = raw.astype(str).str.strip()
    if labels is not None:
        mapping = {labels[0]: 0, labels[1]: 1}
    else:
        mapping = {"0": 0, "1": 1, "0.0": 0, "1.0": 1}
    unknown = sorted(set(values) - set(mapping))
    if unknown:
        raise DataError(
            "outcome column '{0}' has values other than {1}: {2}".format(
                name, " and ".join(
                    labels if labels is not None else ("0", "1")),
                ", ".join(unknown[:5])))
    return values.map(mapping).to_numpy(dtype=np.int8)


def _fill_value(raw: pd.Series, kind: str, name: str) -> Any:
    present = raw[~_missing_mask(raw)]
    if present.empty:
        raise DataError("column '{}' has no values".format(name))
    if kind == CONTINUOUS:
        return float(_to_numbers(present, name).mean())
    # The mode, taking the first observed level on ties.
    counts = present.str.strip().value_counts(sort=False)
    return str(counts.index[int(np.argmax(counts.to_numpy()))])


def load_csv(
        path: str, spec: Optional[EncodingSpec],
        outcome_column: str) -> Dataset:
    """Read a cohort CSV file into a dataset.

    Categorical columns get reference-level dummy coding, with dummy columns
    named "<column><level index>". Continuous columns are left on their raw
    scale; use standardize() to z-score them.

    Args:
        path: The path of the CSV file.
        spec: The role of each column. If None, the roles are inferred.
        outcome_column: The name of the binary outcome column.

    Returns:
        The dataset.

    Raises:
        DataError: The file, the outcome column or a listed column is missing,
            or a value can't be encoded.
    """
    frame = read_frame(path)
    if outcome_column not in frame.columns:
        raise DataError(
            "the data has no outcome column named '{}'".format(outcome_column))
    if spec is None:
        spec = EncodingSpec.infer(frame, outcome_column)

    absent = [name for name in spec.roles if name not in frame.columns]
    if absent:
        raise DataError(
            "the data has no column named '{}'".format(absent[0]))
    ignored = [
        name for name in frame.columns
        if name not in spec.roles and name != outcome_column]
    if ignored:
        logger.debug("ignoring columns: %s", ", ".join(ignored))

    rows_read = len(frame)
    kept = ~_missing_mask(frame[outcome_column]).to_numpy()
    if spec.missing == COMPLETE_CASE:
        for name in spec.roles:
            kept &= ~_missing_mask(frame[name]).to_numpy()
    usable = frame[kept]

    columns = []
    dropped = []
    for name, role in spec.roles.items():
        raw = usable[name]
        fill = _fill_value(raw, role.kind, name) if (
            spec.missing == IMPUTE and _missing_mask(raw).any()) else None
        if role.kind != CATEGORICAL:
            columns.append(ColumnEncoding(name, role.kind, (name,), fill=fill))
            continue

        filled = raw.where(~_missing_mask(raw), str(fill)).str.strip()
        levels = tuple(pd.unique(filled))
        if len(levels) < 2:
            logger.warning(
                "dropping categorical column '%s' because it has only one "
                "level", name)
            dropped.append(name)
            continue
        reference = role.reference if role.reference is not None else levels[0]
        if reference not in levels:
            raise DataError(
                "reference level '{0}' is never observed in column '{1}'"
                .format(reference, name))
        dummy_names = tuple(
            "{0}{1}".format(name, index)
            for index, level in enumerate(levels) if level != reference)
        columns.append(ColumnEncoding(
            name, CATEGORICAL, dummy_names, levels, reference, fill))

    encoding_log = EncodingLog(
        tuple(columns), outcome_column, spec.outcome_labels, spec.missing,
        rows_read, rows_read - int(kept.sum()), tuple(dropped))
    names = encoding_log.design_names
    clashes = sorted({name for name in names if names.count(name) > 1})
    if clashes:
        raise DataError(
            "design column names clash: {}".format(", ".join(clashes)))

    design, _ = encoding_log.encode(usable)
    outcome = _encode_outcome(
        usable[outcome_column], outcome_column, spec.outcome_labels)
    if encoding_log.rows_dropped:
        logger.info(
            "dropped %d of %d rows with missing values (%s)",
            encoding_log.rows_dropped, rows_read, spec.missing)

    imputed = None
    if spec.missing == IMPUTE:
        imputed = np.zeros((len(usable), len(names)), dtype=bool)
        for column in columns:
            missing = _missing_mask(usable[column.source]).to_numpy()
            for name in column.design_names:
                imputed[:, names.index(name)] = missing
        if imputed.any():
            logger.info("imputed %d missing cells", int(imputed.sum()))
        else:
            imputed = None
    return Dataset(design, outcome, names, encoding_log, imputed)


def standardize(ds: Dataset) -> Dataset:
    """Z-score the continuous columns of a dataset.

    Binary and dummy columns are left as they are. The means and sample
    standard deviations are stored in the encoding log so that new rows can
    be transformed the same way. Standardizing twice does nothing.

    Imputed cells don't count towards the means and standard deviations,
    so the observed values of each column have mean 0 and sd 1.

    Raises:
        DataError: A continuous column has zero variance.
    """
    if ds.encoding_log.standardized:
        return ds

    design = np.array(ds.design)
    columns = []
    for column in ds.encoding_log.columns:
        if column.kind != CONTINUOUS:
            columns.append(column)
            continue
        index = ds.factor_index(column.design_names[0]) + 1
        values = design[:, index]
        observed = values if ds.imputed is None else (
            values[~ds.imputed[:, index - 1]])
        sd = float(observed.std(ddof=1)) if observed.size > 1 else 0.0
        if not sd > 0:
            raise DataError(
                "continuous column '{}' has zero variance".format(
                    column.source))
        mean = float(observed.mean())
        design[:, index] = scale_column(values, mean, sd)
        columns.append(dataclasses.replace(column, mean=mean, sd=sd))

    encoding_log = dataclasses.replace(
        ds.encoding_log, columns=tuple(columns), standardized=True)
    return Dataset(
        design, ds.outcome, ds.factor_names, encoding_log, ds.imputed)


def split_standardized(
        ds: Dataset, train_rows: Sequence[int]) -> Tuple[Dataset, Dataset]:
    """Split off training rows and z-score on them alone.

    The continuous columns of both parts are scaled by the means and sample
    standard deviations of the training rows, so the held-out rows play no
    part in the scaling. The encoding log of both parts maps raw values onto
    the new scale.

    Args:
        ds: The dataset to split. It may already be standardized.
        train_rows: The indices of the training rows. Every other row is held
            out, in dataset order.

    Returns:
        The training part and the held-out part.

    Raises:
        DataError: A continuous column is constant on the training rows.
    """
    train_rows = np.unique(np.asarray(train_rows, dtype=int))
    held_rows = np.setdiff1d(np.arange(ds.n), train_rows)
    train = ds.subset_rows(train_rows)
    held = ds.subset_rows(held_rows)

    train_design = np.array(train.design)
    held_design = np.array(held.design)
    columns = []
    for column in ds.encoding_log.columns:
        if column.kind != CONTINUOUS:
            columns.append(column)
            continue
        index = ds.factor_index(column.design_names[0]) + 1
        values = train_design[:, index]
        observed = values if train.imputed is None else (
            values[~train.imputed[:, index - 1]])
        sd = float(observed.std(ddof=1)) if observed.size > 1 else 0.0
        if not sd > 0:
            raise DataError(
                "continuous column '{}' is constant on the training "
                "rows".format(column.source))
        mean = float(observed.mean())
        train_design[:, index] = scale_column(values, mean, sd)
        held_design[:, index] = scale_column(
            held_design[:, index], mean, sd)
        if column.mean is not None:
            mean, sd = column.mean + column.sd * mean, column.sd * sd
        columns.append(dataclasses.replace(column, mean=mean, sd=sd))

    encoding_log = dataclasses.replace(
        ds.encoding_log, columns=tuple(columns), standardized=True)
    return (
        Dataset(
            train_design, train.outcome, ds.factor_names, encoding_log,
            train.imputed),
        Dataset(
            held_design, held.outcome, ds.factor_names, encoding_log,
            held.imputed))


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise Pearson correlations of the factor columns.

    Attributes:
        factor_names: The names of the rows and columns.
        matrix: The P×P correlation matrix. Entries involving a zero-variance
            column are NaN.
        undefined: Marks the factors with zero variance.
        threshold: The absolute correlation used for the confound screen.
        fraction_above: The fraction of defined off-diagonal pairs whose
            absolute correlation exceeds the threshold.
    """
    factor_names: Tuple[str, ...]
    matrix: np.ndarray
    undefined: np.ndarray
    threshold: float
    fraction_above: float

    def exceedance_share(self) -> Dict[str, float]:
        """For each factor, the share of other factors it exceeds the
        threshold with."""
        above = np.abs(self.matrix) > self.threshold
        np.fill_diagonal(above, False)
        defined = ~self.undefined
        others = max(int(defined.sum()) - 1, 1)
        return {
            name: float(above[index, defined].sum()) / others
            for index, name in enumerate(self.factor_names)
            if defined[index]}


def correlation_matrix(
        ds: Dataset, threshold: float = 0.08) -> CorrelationReport:
    """Compute the correlations between factors.

    Raises:
        DataError: There are fewer than 3 rows.
    """
    if ds.n < 3:
        raise DataError("correlations need at least 3 rows")
    factors = ds.factors
    undefined = ~(factors.std(axis=0) > 0)
    defined = np.flatnonzero(~undefined)

    matrix = np.full((ds.P, ds.P), np.nan)
    if defined.size:
        block = np.atleast_2d(np.corrcoef(factors[:, defined], rowvar=False))
        block = np.clip((block + block.T) / 2, -1.0, 1.0)
        np.fill_diagonal(block, 1.0)
        matrix[np.ix_(defined, defined)] = block

    upper = np.triu_indices(defined.size, k=1)
    pairs = matrix[np.ix_(defined, defined)][upper]
    fraction = float(np.mean(np.abs(pairs) > threshold)) if pairs.size else 0.0
    return CorrelationReport(
        ds.factor_names, matrix, undefined, threshold, fraction)


def dataset_to_json(ds: Dataset, path: str) -> None:
    """Export a dataset with the design stored column-major."""
    json_file = JSONFile(path)
    json_file.vals = {
        "factor_names": list(ds.factor_names),
        "outcome": ds.outcome.tolist(),
        "design": ds.design.T.tolist(),
        "encoding_log": ds.encoding_log.to_dict(),
        }
    if ds.imputed is not None:
        json_file.vals["imputed"] = ds.imputed.T.astype(int).tolist()
    json_file.write()


def dataset_from_json(path: str) -> Dataset:
    """Import a dataset written by dataset_to_json()."""
    json_file = JSONFile(path)
    json_file.read()
    doc = json_file.vals
    try:
        return Dataset(
            np.array(doc["design"], dtype=float).T, doc["outcome"],
            tuple(doc["factor_names"]),
            EncodingLog.from_dict(doc["encoding_log"]),
            np.array(doc["imputed"], dtype=bool).T
            if "imputed" in doc else None)
    except (KeyError, TypeError) as error:
        raise FileParseError(
            "'{0}' isn't a dataset export: {1}".format(path, error))
