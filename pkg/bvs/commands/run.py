"""A class for the 'run' command.

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
from typing import Optional

from bvs import DRAWS_NAME
from bvs.commandbase import Command, DataSource
from bvs.diagnostics import acceptance_rate
from bvs.sampler import MOVES, run_chain, write_draws
from bvs.utils import BoxTable, format_percent


class RunCommand(Command):
    """Run the "run" command.

    Attributes:
        source: Where the data comes from.
        prior_file: The "--prior" option.
        w_file: The "--w-file" option.
    """
    name = "run"

    def __init__(
            self, source: DataSource, prior_file: Optional[str] = None,
            w_file: Optional[str] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        self.source = source
        self.prior_file = prior_file
        self.w_file = w_file
        self.args = {"prior": prior_file, "w_file": w_file}

    def main(self) -> None:
        self.start()
        ds = self.load_dataset(self.source)
        cfg = self.prior_config(ds, self.prior_file, self.w_file)
        chain = self.chain_config()

        draws = run_chain(ds, cfg, chain)
        base = self.output_path(DRAWS_NAME, record=False)
        for path in write_draws(draws, base):
            self.manifest.add_output(path)

        telemetry = draws.telemetry
        self.finish(
            wall_time=telemetry.wall_time, proposed=telemetry.proposed,
            accepted=telemetry.accepted)

        rates = acceptance_rate(draws)
        table_data = [("Move", "Proposed", "Accepted (%)")]
        table_data.extend(
            (move, str(telemetry.proposed[move]), format_percent(rates[move]))
            for move in MOVES)
        print("Stored {0} draws in {1:.1f} seconds".format(
            len(draws), telemetry.wall_time))
        print(BoxTable(table_data).format())
