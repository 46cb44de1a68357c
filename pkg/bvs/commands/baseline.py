"""Classes for the 'baseline' and 'compare' commands.

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
from typing import List, Optional, Tuple

import pandas as pd

from bvs.baseline import (
    BaselineRow, StepwiseResult, baseline_table, single_factor_screen,
    stepwise_select)
from bvs.commandbase import Command, DataSource
from bvs.data import Dataset
from bvs.summaries import mpp
from bvs.utils import BoxTable, format_percent

logger = logging.getLogger(__name__)


def _format_p(value: Optional[float]) -> str:
    if value is None or value != value:
        return ""
    return "{:.2f}".format(value)


class BaselineCommand(Command):
    """Run the "baseline" command.

    Attributes:
        source: Where the data comes from.
    """
    name = "baseline"

    def __init__(self, source: DataSource, **kwargs) -> None:
        super().__init__(**kwargs)
        self.source = source

    def run_baseline(
            self, ds: Dataset) -> Tuple[List[BaselineRow],
                                        Optional[StepwiseResult]]:
        """Screen every factor, then run stepwise selection on the rest."""
        vals = self.settings.vals
        screen = single_factor_screen(ds, vals["ScreenThreshold"], self.jobs)
        stepwise = None
        if screen.retained:
            stepwise = stepwise_select(
                ds, screen.retained, vals["EnterP"], vals["ExitP"])
        else:
            logger.warning("no factor passed the screen")
        return baseline_table(screen, stepwise), stepwise

    def write_trace(self, stepwise: Optional[StepwiseResult]) -> None:
        with open(self.output_path("stepwise_trace.txt"), "w") as file:
            if stepwise is None:
                return
            for step, decision in enumerate(stepwise.trace, start=1):
                file.write("{0}\t{1}\t{2}\tp={3!r}\n".format(
                    step, decision.action, decision.factor, decision.p))
            if stepwise.stopped_by_cycle:
                file.write("stopped at a repeated model\n")
            file.write("final\t{}\n".format(";".join(stepwise.selected)))

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        rows, stepwise = self.run_baseline(ds)

        frame = pd.DataFrame({
            "factor": [row.factor for row in rows],
            "p_single": [row.p_single for row in rows],
            "p_multi": [row.p_multi for row in rows],
            })
        with open(self.output_path("baseline.csv"), "w", newline="") as file:
            frame.to_csv(file, index=False)
        self.write_trace(stepwise)
        self.finish()

        table_data = [("Factor", "p single", "p multi")]
        table_data.extend(
            (row.factor, _format_p(row.p_single), _format_p(row.p_multi))
            for row in rows)
        print(BoxTable(table_data).format())


class CompareCommand(BaselineCommand):
    """Run the "compare" command.

    Attributes:
        source: Where the data comes from.
        draws: The "--draws" option.
    """
    name = "compare"

    def __init__(
            self, source: DataSource, draws: Optional[str] = None,
            **kwargs) -> None:
        super().__init__(source, **kwargs)
        self.draws = draws
        self.args = {"draws": draws}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        summaries = mpp(self.load_draws(ds, self.draws))
        rows, stepwise = self.run_baseline(ds)

        frame = pd.DataFrame({
            "factor": [row.factor for row in rows],
            "p_single": [row.p_single for row in rows],
            "p_multi": [row.p_multi for row in rows],
            "mpp": [summary.mpp for summary in summaries],
            "beta_mean": [
                summary.beta_mean_given_included for summary in summaries],
            "beta_sd": [
                summary.beta_sd_given_included for summary in summaries],
            })
        with open(self.output_path("compare.csv"), "w", newline="") as file:
            frame.to_csv(file, index=False)
        self.write_trace(stepwise)
        self.finish()

        table_data = [(
            "Factor", "p single", "p multi", "Mean β | in", "SD β | in",
            "MPP (%)")]
        for row, summary in zip(rows, summaries):
            table_data.append((
                row.factor, _format_p(row.p_single), _format_p(row.p_multi),
                _format_p(summary.beta_mean_given_included),
                _format_p(summary.beta_sd_given_included),
                format_percent(summary.mpp)))
        print(BoxTable(table_data).format())
