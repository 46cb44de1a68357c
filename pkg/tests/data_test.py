"""Tests for reading and encoding cohort data.

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
import textwrap

import numpy as np
import pandas as pd
import pytest

from bvs.data import (
    BINARY, CATEGORICAL, CONTINUOUS, IMPUTE, ColumnRole, EncodingSpec,
    correlation_matrix, dataset_from_json, dataset_to_json, load_csv,
    read_frame, split_standardized, standardize)
from bvs.exceptions import DataError, FileParseError

COHORT_CSV = textwrap.dedent("""\
    y,age,sex,site
    1,50,1,a
    0,40,0,b
    1,,1,c
    0,60,0,a
    1,55,1,b
    """)


@pytest.fixture
def cohort_spec() -> EncodingSpec:
    return EncodingSpec({
        "age": ColumnRole(CONTINUOUS),
        "sex": ColumnRole(BINARY),
        "site": ColumnRole(CATEGORICAL),
        })


@pytest.fixture
def cohort_file(fs) -> str:
    fs.create_file("/data/cohort.csv", contents=COHORT_CSV)
    return "/data/cohort.csv"


class TestLoadCsv:
    def test_complete_case(self, cohort_file, cohort_spec):
        """Rows with a missing value are dropped."""
        ds = load_csv(cohort_file, cohort_spec, "y")

        assert ds.n == 4
        assert ds.factor_names == ("age", "sex", "site1")
        assert ds.encoding_log.rows_read == 5
        assert ds.encoding_log.rows_dropped == 1
        assert ds.outcome.tolist() == [1, 0, 0, 1]
        assert ds.design[:, 0].tolist() == [1.0] * 4
        assert ds.design[:, 3].tolist() == [0.0, 1.0, 0.0, 1.0]

    def test_impute(self, cohort_file, cohort_spec):
        """Missing values are filled with the column mean."""
        spec = EncodingSpec(cohort_spec.roles, missing=IMPUTE)
        ds = load_csv(cohort_file, spec, "y")

        assert ds.n == 5
        assert ds.design[2, 1] == pytest.approx(51.25)
        assert ds.factor_names == ("age", "sex", "site1", "site2")

    def test_reference_level(self, cohort_file):
        """The declared reference level gets no dummy column."""
        spec = EncodingSpec({"site": ColumnRole(CATEGORICAL, "b")})
        ds = load_csv(cohort_file, spec, "y")

        assert ds.factor_names == ("site0", "site2")
        assert ds.design[:, 1].tolist() == [1.0, 0.0, 0.0, 1.0, 0.0]

    def test_missing_outcome_column(self, cohort_file, cohort_spec):
        """An absent outcome column is a data error."""
        with pytest.raises(DataError) as error:
            load_csv(cohort_file, cohort_spec, "status")
        assert error.value.exit_code == 2

    def test_missing_file(self, fs, cohort_spec):
        """A missing data file is a data error."""
        with pytest.raises(DataError):
            load_csv("/data/absent.csv", cohort_spec, "y")

    def test_bad_binary_column(self, fs):
        """A binary column holding other values is rejected."""
        fs.create_file("/data/bad.csv", contents="y,x\n1,0\n0,2\n")
        spec = EncodingSpec({"x": ColumnRole(BINARY)})
        with pytest.raises(DataError):
            load_csv("/data/bad.csv", spec, "y")

    def test_bad_outcome_values(self, fs):
        """Outcomes other than 0 and 1 are rejected."""
        fs.create_file("/data/bad.csv", contents="y,x\n1,0\n2,1\n")
        spec = EncodingSpec({"x": ColumnRole(BINARY)})
        with pytest.raises(DataError):
            load_csv("/data/bad.csv", spec, "y")

    def test_outcome_labels(self, fs):
        """Declared outcome labels are mapped to 0 and 1."""
        fs.create_file(
            "/data/labels.csv", contents="y,x\ncase,0\ncontrol,1\n")
        spec = EncodingSpec(
            {"x": ColumnRole(BINARY)}, outcome_labels=("control", "case"))
        ds = load_csv("/data/labels.csv", spec, "y")

        assert ds.outcome.tolist() == [1, 0]

    def test_single_level_column_dropped(self, fs, caplog):
        """A categorical column with one level is dropped with a warning."""
        fs.create_file(
            "/data/flat.csv", contents="y,x,g\n1,0,a\n0,1,a\n1,1,a\n")
        spec = EncodingSpec({
            "x": ColumnRole(BINARY), "g": ColumnRole(CATEGORICAL)})
        with caplog.at_level(logging.WARNING):
            ds = load_csv("/data/flat.csv", spec, "y")

        assert ds.factor_names == ("x",)
        assert ds.encoding_log.dropped_columns == ("g",)
        assert "only one level" in caplog.text

    def test_inferred_roles(self, cohort_file):
        """Roles are guessed from the values when no spec is given."""
        spec = EncodingSpec.infer(read_frame(cohort_file), "y")

        assert spec.roles["age"].kind == CONTINUOUS
        assert spec.roles["sex"].kind == BINARY
        assert spec.roles["site"].kind == CATEGORICAL


class TestEncodingSpec:
    def test_from_dict(self):
        """Roles can be given as strings or objects."""
        spec = EncodingSpec.from_dict({
            "columns": {
                "age": "continuous",
                "site": {"role": "categorical", "reference": "b"}},
            "missing": "impute"})

        assert spec.roles["age"] == ColumnRole(CONTINUOUS)
        assert spec.roles["site"] == ColumnRole(CATEGORICAL, "b")
        assert spec.missing == IMPUTE

    def test_invalid_entries(self):
        """Every invalid entry is reported."""
        with pytest.raises(FileParseError) as error:
            EncodingSpec.from_dict({
                "columns": {"age": "ordinal"}, "missing": "drop"})
        assert len(error.value.args) == 2


class TestStandardize:
    def test_continuous_columns_scaled(self, cohort_file, cohort_spec):
        """Continuous columns get mean 0 and sample sd 1."""
        ds = standardize(load_csv(cohort_file, cohort_spec, "y"))
        age = ds.design[:, 1]

        assert age.mean() == pytest.approx(0.0, abs=1e-12)
        assert age.std(ddof=1) == pytest.approx(1.0)
        assert ds.design[:, 2].tolist() == [1.0, 0.0, 0.0, 1.0]
        assert ds.encoding_log.columns[0].mean == pytest.approx(51.25)

    def test_imputed_cells_ignored(self, cohort_file, cohort_spec):
        """Only observed values set the mean and sd of a column."""
        spec = EncodingSpec(cohort_spec.roles, missing=IMPUTE)
        ds = standardize(load_csv(cohort_file, spec, "y"))
        age = ds.design[:, 1]
        observed = age[[0, 1, 3, 4]]

        assert ds.imputed[:, 0].tolist() == [False, False, True, False, False]
        assert not ds.imputed[:, 1:].any()
        assert observed.mean() == pytest.approx(0.0, abs=1e-12)
        assert observed.std(ddof=1) == pytest.approx(1.0)
        assert age[2] == pytest.approx(0.0, abs=1e-12)

    def test_idempotent(self, cohort_file, cohort_spec):
        """Standardizing twice does nothing."""
        ds = standardize(load_csv(cohort_file, cohort_spec, "y"))
        assert standardize(ds) is ds

    def test_zero_variance(self, fs):
        """A constant continuous column can't be standardized."""
        fs.create_file("/data/flat.csv", contents="y,x\n1,3\n0,3\n1,3\n")
        ds = load_csv(
            "/data/flat.csv", EncodingSpec({"x": ColumnRole(CONTINUOUS)}),
            "y")
        with pytest.raises(DataError):
            standardize(ds)

    def test_new_rows_encoded_alike(self, cohort_file, cohort_spec):
        """New rows reuse the stored means and standard deviations."""
        ds = standardize(load_csv(cohort_file, cohort_spec, "y"))
        frame = pd.DataFrame({
            "age": ["51.25"], "sex": ["1"], "site": ["b"]})
        design, kept = ds.encoding_log.encode(frame)

        assert kept.tolist() == [True]
        assert design.tolist() == [[1.0, 0.0, 1.0, 1.0]]


class TestSplitStandardized:
    def test_training_scale(self, cohort_file, cohort_spec):
        """Held-out rows are scaled by the training statistics."""
        ds = standardize(load_csv(cohort_file, cohort_spec, "y"))
        train, held = split_standardized(ds, [0, 2, 3])
        raw_age = np.array([50.0, 40.0, 60.0, 55.0])
        mean, sd = raw_age[[0, 2, 3]].mean(), raw_age[[0, 2, 3]].std(ddof=1)

        assert train.n == 3 and held.n == 1
        assert train.design[:, 1].mean() == pytest.approx(0.0, abs=1e-12)
        assert train.design[:, 1].std(ddof=1) == pytest.approx(1.0)
        assert held.design[0, 1] == pytest.approx((40.0 - mean) / sd)
        assert held.design[0, 2:].tolist() == ds.design[1, 2:].tolist()
        assert train.encoding_log.columns[0].mean == pytest.approx(mean)
        assert train.encoding_log.columns[0].sd == pytest.approx(sd)

    def test_constant_on_training_rows(self, make_dataset):
        """A column that only varies in the held-out rows is rejected."""
        ds = make_dataset([[1.0], [1.0], [1.0], [4.0]], [0, 1, 0, 1])
        with pytest.raises(DataError):
            split_standardized(ds, [0, 1, 2])


class TestDataset:
    def test_select_factors(self, make_dataset):
        """Selected factors keep their dataset order."""
        ds = make_dataset(np.arange(12).reshape(4, 3), [0, 1, 0, 1])
        selected = ds.select_factors(["x3", "x1"])

        assert selected.factor_names == ("x1", "x3")
        assert selected.design[:, 2].tolist() == [2.0, 5.0, 8.0, 11.0]

    def test_unknown_factor(self, make_dataset):
        """Unknown factor names are a data error."""
        ds = make_dataset([[1.0], [2.0]], [0, 1])
        with pytest.raises(DataError):
            ds.select_factors(["age"])

    def test_read_only(self, make_dataset):
        """The design can't be modified in place."""
        ds = make_dataset([[1.0], [2.0]], [0, 1])
        with pytest.raises(ValueError):
            ds.design[0, 1] = 5.0

    def test_group_labels(self, cohort_file, cohort_spec):
        """Rows are labelled by their categorical level."""
        ds = load_csv(cohort_file, cohort_spec, "y")
        assert ds.group_labels("site").tolist() == ["a", "site1", "a", "site1"]

    def test_group_labels_not_categorical(self, cohort_file, cohort_spec):
        """Only categorical columns can label rows."""
        ds = load_csv(cohort_file, cohort_spec, "y")
        with pytest.raises(DataError):
            ds.group_labels("age")

    def test_json_export(self, fs, cohort_file, cohort_spec):
        """An exported dataset is read back unchanged."""
        ds = standardize(load_csv(cohort_file, cohort_spec, "y"))
        dataset_to_json(ds, "/data/cohort.json")
        loaded = dataset_from_json("/data/cohort.json")

        assert loaded.factor_names == ds.factor_names
        assert np.array_equal(loaded.design, ds.design)
        assert loaded.encoding_log == ds.encoding_log


class TestCorrelationMatrix:
    def test_correlations(self, make_dataset):
        """Perfectly related columns have correlation ±1."""
        x = np.array([1.0, 2.0, 3.0, 4.0])
        ds = make_dataset(np.column_stack([x, -2 * x]), [0, 1, 0, 1])
        report = correlation_matrix(ds, threshold=0.5)

        assert report.matrix[0, 1] == pytest.approx(-1.0)
        assert report.fraction_above == 1.0
        assert report.exceedance_share() == {"x1": 1.0, "x2": 1.0}

    def test_zero_variance_column(self, make_dataset):
        """Correlations with a constant column are undefined."""
        ds = make_dataset(
            [[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]], [0, 1, 0])
        report = correlation_matrix(ds)

        assert report.undefined.tolist() == [False, True]
        assert np.isnan(report.matrix[0, 1])
        assert report.matrix[0, 0] == 1.0

    def test_too_few_rows(self, make_dataset):
        """Correlations need three rows."""
        ds = make_dataset([[1.0], [2.0]], [0, 1])
        with pytest.raises(DataError):
            correlation_matrix(ds)
