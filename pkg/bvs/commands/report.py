"""A class for the 'report' command.

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
import pandas as pd

from bvs import ANSI_GREEN, ANSI_NORMAL
from bvs.commandbase import Command, DataSource
from bvs.data import correlation_matrix
from bvs.diagnostics import (
    MIN_SERIES_LENGTH, chain_health, leverage, write_ess_csv,
    write_leverage_csv)
from bvs.exceptions import ProgramError
from bvs.prediction import kfold_refit_auc
from bvs.summaries import (
    inclusion_matrix, jpp, mpp, report_rows, top_model_factor_share,
    write_inclusion_csv, write_jpp_csv, write_mpp_csv)
from bvs.utils import BoxTable, format_percent

logger = logging.getLogger(__name__)


class ReportCommand(Command):
    """Run the "report" command.

    Attributes:
        source: Where the data comes from.
        draws: The "--draws" option.
        top: The number of models to rank, or None to use the settings.
        focus: Factors to list first in the printed table.
        extra: The number of other factors to list in the printed table.
    """
    name = "report"

    def __init__(
            self, source: DataSource, draws: Optional[str] = None,
            top: Optional[int] = None, focus: Sequence[str] = (),
            extra: Optional[int] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        self.source = source
        self.draws = draws
        self.top = top
        self.focus = list(focus)
        self.extra = extra
        self.args = {
            "draws": draws, "top": top, "focus": self.focus, "extra": extra}

    def _model_aucs(self, ds, models):
        k = self.settings.vals["Folds"]
        seed = self.seed("cv")
        aucs = []
        for model in models:
            try:
                report = kfold_refit_auc(
                    ds, model.indicator, k, seed,
                    self.settings.vals["Pooling"], self.jobs)
                aucs.append(report.auc)
            except ProgramError as error:
                logger.warning(
                    "no AUC for model %d: %s", model.rank, error)
                aucs.append(None)
        return aucs

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        draws = self.load_draws(ds, self.draws)
        top = self.top if self.top is not None else (
            self.settings.vals["TopModels"])

        summaries = mpp(draws)
        write_mpp_csv(summaries, self.output_path("mpp.csv"))

        models = jpp(draws, top)
        write_jpp_csv(
            models, ds.factor_names, self.output_path("jpp.csv"),
            self._model_aucs(ds, models))
        write_inclusion_csv(
            inclusion_matrix(models, top), ds.factor_names,
            self.output_path("inclusion.csv"))

        correlations = correlation_matrix(ds)
        frame = pd.DataFrame(
            correlations.matrix, index=ds.factor_names,
            columns=ds.factor_names)
        with open(self.output_path("corr.csv"), "w", newline="") as file:
            frame.to_csv(file, index_label="factor")

        write_leverage_csv(leverage(ds), self.output_path("leverage.csv"))

        trace = pd.DataFrame({
            "draw": np.arange(len(draws)),
            "size": draws.gammas.sum(axis=1)})
        with open(self.output_path("trace.csv"), "w", newline="") as file:
            trace.to_csv(file, index=False)

        health = None
        if len(draws) >= MIN_SERIES_LENGTH:
            health = chain_health(draws)
            write_ess_csv(health, self.output_path("ess.csv"))
        else:
            logger.warning(
                "skipping effective sample sizes for a chain of %d draws",
                len(draws))
        self.finish()

        share = top_model_factor_share(models, top)
        table_data = [(
            "Factor", "MPP (%)", "Mean β | in", "SD β | in",
            "Top {} (%)".format(min(top, len(models))))]
        for summary in report_rows(summaries, self.focus, self.extra):
            index = ds.factor_index(summary.name)
            name = summary.name
            if summary.mpp > 0.5:
                name = ANSI_GREEN + name + ANSI_NORMAL
            table_data.append((
                name, format_percent(summary.mpp),
                "{:.2f}".format(summary.beta_mean_given_included)
                if summary.defined else "",
                "{:.2f}".format(summary.beta_sd_given_included)
                if summary.defined else "",
                format_percent(share[index])))
        print(BoxTable(table_data).format())

        if health is not None:
            print("Acceptance: " + ", ".join(
                "{0} {1}%".format(move, format_percent(rate))
                for move, rate in health.acceptance.items()))
            print("Model size ESS: {:.0f}".format(health.size_ess))
