"""Classes for the 'cv' and 'nested-curve' commands.

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
from typing import Optional, Sequence

from bvs.commandbase import Command, DataSource
from bvs.container import JSONFile
from bvs.exceptions import InputError
from bvs.prediction import (
    bma_cv_auc, kfold_refit_auc, nested_auc_curve, write_curve_csv,
    write_roc_csv)
from bvs.prior import ModelIndicator
from bvs.summaries import mpp
from bvs.utils import BoxTable, format_percent


class CvCommand(Command):
    """Run the "cv" command.

    Attributes:
        source: Where the data comes from.
        subset: The factors of a fixed-subset refit.
        bma: Cross-validate model-averaged predictions instead.
        prior_file: The "--prior" option.
        w_file: The "--w-file" option.
    """
    name = "cv"

    def __init__(
            self, source: DataSource, subset: Sequence[str] = (),
            bma: bool = False, prior_file: Optional[str] = None,
            w_file: Optional[str] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        if bma and subset:
            raise InputError("'--bma' and '--subset' can't be used together")
        self.source = source
        self.subset = list(subset)
        self.bma = bma
        self.prior_file = prior_file
        self.w_file = w_file
        self.args = {
            "subset": self.subset, "bma": bma, "prior": prior_file,
            "w_file": w_file}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        vals = self.settings.vals
        seed = self.seed("cv")

        if self.bma:
            report = bma_cv_auc(
                ds, self.prior_config(ds, self.prior_file, self.w_file),
                self.chain_config(), vals["Folds"], seed, vals["Pooling"],
                self.jobs)
        else:
            subset = ModelIndicator.from_names(ds.factor_names, self.subset)
            report = kfold_refit_auc(
                ds, subset, vals["Folds"], seed, vals["Pooling"], self.jobs)

        report_file = JSONFile(self.output_path("cv.json"))
        report_file.vals = report.to_dict()
        report_file.write()
        write_roc_csv(report, self.output_path("roc.csv"))
        self.finish()

        table_data = [("Fold", "AUC (%)")]
        table_data.extend(
            (str(fold), format_percent(value))
            for fold, value in enumerate(report.per_fold_auc))
        table_data.append(("", ""))
        table_data.append((report.pooling, format_percent(report.auc)))
        print(BoxTable(table_data).format())


class NestedCurveCommand(Command):
    """Run the "nested-curve" command.

    Attributes:
        source: Where the data comes from.
        draws: The chain artifact whose MPPs rank the factors.
        ranking: An explicit ranking to use instead of a chain artifact.
    """
    name = "nested-curve"

    def __init__(
            self, source: DataSource, draws: Optional[str] = None,
            ranking: Sequence[str] = (), **kwargs) -> None:
        super().__init__(**kwargs)
        self.source = source
        self.draws = draws
        self.ranking = list(ranking)
        self.args = {"draws": draws, "ranking": self.ranking}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        vals = self.settings.vals

        ranking = self.ranking
        if not ranking:
            summaries = mpp(self.load_draws(ds, self.draws))
            ranking = [
                summary.name for summary in sorted(
                    summaries, key=lambda summary: -summary.mpp)]

        curve = nested_auc_curve(
            ds, ranking, vals["Folds"], self.seed("cv"), vals["Pooling"],
            self.jobs)
        write_curve_csv(curve, self.output_path("nested_curve.csv"))
        self.finish()

        table_data = [("Size", "Added factor", "AUC (%)")]
        table_data.extend(
            (str(size), ranking[size - 1], format_percent(value))
            for size, value in curve)
        print(BoxTable(table_data).format())
