"""A class for the 'sensitivity' command.

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

import pandas as pd

from bvs.commandbase import Command, DataSource
from bvs.exceptions import InputError
from bvs.sensitivity import (
    DEFAULT_GRID, classify_sensitivity, fixed_other_scan, prior_sweep,
    write_curve_csv)
from bvs.utils import BoxTable, format_percent

logger = logging.getLogger(__name__)


class SensitivityCommand(Command):
    """Run the "sensitivity" command.

    Attributes:
        source: Where the data comes from.
        factors: The factors to sweep.
        grid: The prior inclusion probabilities to try.
        fixed_other: The prior inclusion probability of the other factors,
            or None to use the settings.
        scan: Common prior inclusion probabilities to score by AUC.
        prior_file: The "--prior" option.
        w_file: The "--w-file" option. Its factors keep their probabilities
            while the others are swept or fixed.
    """
    name = "sensitivity"

    def __init__(
            self, source: DataSource, factors: Sequence[str] = (),
            grid: Optional[Sequence[float]] = None,
            fixed_other: Optional[float] = None,
            scan: Sequence[float] = (), prior_file: Optional[str] = None,
            w_file: Optional[str] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        if not factors and not scan:
            raise InputError("give at least one factor or scan value")
        self.source = source
        self.factors = list(factors)
        self.grid = tuple(grid) if grid else DEFAULT_GRID
        self.fixed_other = fixed_other
        self.scan = list(scan)
        self.prior_file = prior_file
        self.w_file = w_file
        self.args = {
            "factors": self.factors, "grid": list(self.grid),
            "fixed_other": fixed_other, "scan": self.scan,
            "prior": prior_file, "w_file": w_file}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        vals = self.settings.vals
        prior = self.prior_config(ds, self.prior_file, self.w_file)
        chain = self.chain_config()
        fixed_other = self.fixed_other if self.fixed_other is not None else (
            vals["FixedOther"])

        table_data = [("Factor", "Class", "MPP range (%)")]
        for position, factor in enumerate(self.factors):
            curve = prior_sweep(
                ds, factor, self.grid, fixed_other,
                chain.with_seed(self.seed("sensitivity", position)), prior,
                self.jobs)
            write_curve_csv(
                curve, self.output_path("sensitivity_{}.csv".format(factor)))
            try:
                label = classify_sensitivity(curve)
            except InputError as error:
                logger.warning("not classifying '%s': %s", factor, error)
                label = ""
            known = [value for value in curve.mpp_at if value == value]
            table_data.append((
                factor, label, "{0}-{1}".format(
                    format_percent(min(known)), format_percent(max(known)))
                if known else ""))

        if self.scan:
            points = fixed_other_scan(
                ds, self.scan, chain.with_seed(self.seed("scan")), prior,
                vals["Folds"], self.seed("cv"), vals["Pooling"], self.jobs)
            frame = pd.DataFrame({
                "w": [point.w for point in points],
                "auc": [point.auc for point in points]})
            path = self.output_path("fixed_other_scan.csv")
            with open(path, "w", newline="") as file:
                frame.to_csv(file, index=False)
        self.finish()

        if self.factors:
            print(BoxTable(table_data).format())
        if self.scan:
            scan_table = [("w", "AUC (%)")]
            scan_table.extend(
                ("{:g}".format(point.w), format_percent(point.auc))
                for point in points)
            print(BoxTable(scan_table).format())
