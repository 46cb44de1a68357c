"""A class for the 'leverage' command.

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

from bvs import ANSI_RED, ANSI_NORMAL
from bvs.commandbase import Command, DataSource
from bvs.diagnostics import leverage, write_leverage_csv
from bvs.utils import BoxTable


class LeverageCommand(Command):
    """Run the "leverage" command.

    Attributes:
        source: Where the data comes from.
        factors: Restrict the design to these factors, or use them all.
        group: A categorical column to label individuals by.
        threshold: The leverage above which individuals are flagged.
    """
    name = "leverage"

    def __init__(
            self, source: DataSource, factors: Sequence[str] = (),
            group: Optional[str] = None, threshold: Optional[float] = None,
            **kwargs) -> None:
        super().__init__(**kwargs)
        self.source = source
        self.factors = list(factors)
        self.group = group
        self.threshold = threshold
        self.args = {
            "factors": self.factors, "group": group, "threshold": threshold}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        if self.factors:
            ds = ds.select_factors(self.factors)

        report = leverage(ds, self.threshold, self.group)
        write_leverage_csv(report, self.output_path("leverage.csv"))
        self.finish()

        print("Threshold: {:.4f}".format(report.threshold))
        if not report.flagged.size:
            print("\n-- No high-leverage individuals --\n")
            return
        table_data = [("Individual", "Leverage", "Group")]
        for index in report.flagged:
            group = "" if report.group_labels is None else str(
                report.group_labels[index])
            table_data.append((
                str(index),
                ANSI_RED + "{:.4f}".format(report.h[index]) + ANSI_NORMAL,
                group))
        print(BoxTable(table_data).format())
