"""Manage command-line input and the printing of usage messages.

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
import sys
import signal
import logging
import argparse
from typing import Any, Dict, List, Optional

from linotype import DefStyle, Item

from bvs import __version__
from bvs.commandbase import Command, DataSource
from bvs.commands.baseline import BaselineCommand, CompareCommand
from bvs.commands.cv import CvCommand, NestedCurveCommand
from bvs.commands.leverage import LeverageCommand
from bvs.commands.report import ReportCommand
from bvs.commands.run import RunCommand
from bvs.commands.sensitivity import SensitivityCommand
from bvs.exceptions import InputError, ProgramError
from bvs.utils import parse_float_list, parse_name_list

# Command-line options that override keys of the settings file.
SETTINGS_OPTIONS = {
    "seed": "Seed",
    "jobs": "Jobs",
    "expected_model_size": "ExpectedModelSize",
    "slab": "Slab",
    "g": "G",
    "v": "V",
    "intercept_variance": "InterceptVariance",
    "iters": "Iterations",
    "burn_in": "BurnIn",
    "thin": "Thin",
    "model_updates": "ModelUpdates",
    "swap_probability": "SwapProbability",
    "folds": "Folds",
    "pooling": "Pooling",
    "screen_threshold": "ScreenThreshold",
    "enter_p": "EnterP",
    "exit_p": "ExitP",
    }


def main_help_item() -> Item:
    """Structure the help message.

    Returns:
        An Item object with the message.
    """
    root_item = Item()

    usage = root_item.add_text("Usage:", item_id="usage")
    usage.add_def(
        "bvs", "[global_options] command [common_options] [command_args]", "")
    usage.add_text("\n")

    global_opts = root_item.add_text("Global Options:", item_id="global_opts")
    global_opts.formatter.def_style = DefStyle.ALIGNED
    global_opts.add_def(
        "    --help", "",
        "Print a usage message and exit.")
    global_opts.add_def(
        "    --version", "",
        "Print the version number and exit.")
    global_opts.add_def(
        "    --debug", "",
        "Print debug messages, and a full stack trace instead of an error "
        "message if an error occurs.")
    global_opts.add_def(
        "-q, --quiet", "",
        "Suppress all non-error output.")
    global_opts.add_text("\n")

    common_opts = root_item.add_text("Common Options:", item_id="common_opts")
    common_opts.formatter.def_style = DefStyle.ALIGNED
    common_opts.add_def(
        "    --data", "path",
        "Read the individuals from this CSV file. Required.")
    common_opts.add_def(
        "    --outcome", "name",
        "Use this column of the data as the binary outcome. Required.")
    common_opts.add_def(
        "    --encoding", "path",
        "Read the role of each column from this JSON document instead of "
        "guessing it.")
    common_opts.add_def(
        "    --config", "path",
        "Read settings from this file instead of the default settings file.")
    common_opts.add_def(
        "-o, --output-dir", "dir",
        "Write outputs to this directory. The default is $BVS_OUTPUT_DIR or "
        "the current directory.")
    common_opts.add_def(
        "    --seed", "n",
        "Derive every random stream from this seed.")
    common_opts.add_def(
        "-j, --jobs", "n",
        "Run at most this many folds, chains or fits at once.")
    common_opts.add_text("\n")

    commands = root_item.add_text("Commands:", item_id="commands")

    commands.add_def(
        "run", "[options]",
        "Sample the posterior over models and coefficients and store the "
        "draws.")
    commands.add_text("\n")

    commands.add_def(
        "report", "[options]",
        "Summarize stored draws as inclusion probabilities, ranked models "
        "and diagnostics.")
    commands.add_text("\n")

    commands.add_def(
        "cv", "[options]",
        "Cross-validate the AUC of a fixed set of factors or of "
        "model-averaged predictions.")
    commands.add_text("\n")

    commands.add_def(
        "nested-curve", "[options]",
        "Cross-validate the top factors by MPP for every model size.")
    commands.add_text("\n")

    commands.add_def(
        "baseline", "[options]",
        "Screen factors one at a time and select among them stepwise.")
    commands.add_text("\n")

    commands.add_def(
        "compare", "[options]",
        "Show the baseline p-values next to the posterior summaries.")
    commands.add_text("\n")

    commands.add_def(
        "sensitivity", "[options]",
        "Sweep the prior inclusion probability of factors.")
    commands.add_text("\n")

    commands.add_def(
        "leverage", "[options]",
        "Find individuals with high leverage.")

    return root_item


def _add_prior_defs(item: Item) -> None:
    item.add_def(
        "    --prior", "path",
        "Read the prior from this JSON document.")
    item.add_def(
        "    --w-file", "path",
        "Replace the prior inclusion probabilities of the factors named in "
        "this JSON object.")
    item.add_def(
        "    --expected-model-size", "m",
        "Give each factor the prior inclusion probability m/P.")
    item.add_def(
        "    --slab", "gprior|diag",
        "Use g·(X'X)^-1 or v·I as the prior covariance of included "
        "coefficients.")
    item.add_def(
        "    --g", "g",
        "The scale of the g-prior. The default is the number of "
        "individuals.")
    item.add_def(
        "    --v", "v",
        "The variance of the diagonal slab.")


def _add_chain_defs(item: Item) -> None:
    item.add_def(
        "    --iters", "n",
        "Run this many iterations, burn-in included.")
    item.add_def(
        "    --burn-in", "n",
        "Discard this many initial iterations.")
    item.add_def(
        "    --thin", "n",
        "Keep every n-th iteration after the burn-in.")
    item.add_def(
        "    --model-updates", "n",
        "Make this many model moves per iteration.")
    item.add_def(
        "    --swap-probability", "p",
        "Propose a swap of two factors with this probability.")


def _add_cv_defs(item: Item) -> None:
    item.add_def(
        "    --folds", "k",
        "Use this many stratified folds.")
    item.add_def(
        "    --pooling", "pooled|mean",
        "Score the pooled held-out predictions or average the fold AUCs.")


def command_help_item() -> Item:
    """Structure the help message of each command.

    Returns:
        An Item object with the message.
    """
    root_item = Item()

    run_cmd = root_item.add_def(
        "run", "[options]",
        "Sample the posterior over models and coefficients and write the "
        "draws to 'draws.json' and 'draws.csv' in the output directory.",
        item_id="run")
    run_cmd.add_text("\n")
    _add_prior_defs(run_cmd)
    _add_chain_defs(run_cmd)
    root_item.add_text("\n")

    report_cmd = root_item.add_def(
        "report", "[options]",
        "Summarize stored draws. Write the MPP table, the ranked models with "
        "their refit AUCs, the inclusion matrix, the correlation matrix, "
        "leverage, effective sample sizes and the model size trace.",
        item_id="report")
    report_cmd.add_text("\n")
    report_cmd.add_def(
        "    --draws", "path",
        "Read the draws from this path, without its extension. The default "
        "is 'draws' in the output directory.")
    report_cmd.add_def(
        "    --top", "n",
        "Rank this many models.")
    report_cmd.add_def(
        "    --focus", "names",
        "List these comma-separated factors first.")
    report_cmd.add_def(
        "    --extra", "n",
        "List only this many other factors, by MPP.")
    _add_cv_defs(report_cmd)
    root_item.add_text("\n")

    cv_cmd = root_item.add_def(
        "cv", "[options]",
        "Cross-validate the AUC of a logistic regression on the given "
        "factors, or of model-averaged predictions.", item_id="cv")
    cv_cmd.add_text("\n")
    cv_cmd.add_def(
        "    --subset", "names",
        "Refit these comma-separated factors. Without this, only the "
        "intercept is fitted.")
    cv_cmd.add_def(
        "    --bma", "",
        "Run a chain in each fold and score model-averaged predictions.")
    _add_cv_defs(cv_cmd)
    _add_prior_defs(cv_cmd)
    _add_chain_defs(cv_cmd)
    root_item.add_text("\n")

    nested_cmd = root_item.add_def(
        "nested-curve", "[options]",
        "Cross-validate the top s factors by MPP for s from 1 to the number "
        "of factors.", item_id="nested-curve")
    nested_cmd.add_text("\n")
    nested_cmd.add_def(
        "    --draws", "path",
        "Rank factors by the MPPs of these draws.")
    nested_cmd.add_def(
        "    --ranking", "names",
        "Use this comma-separated ranking instead.")
    _add_cv_defs(nested_cmd)
    root_item.add_text("\n")

    baseline_cmd = root_item.add_def(
        "baseline", "[options]",
        "Fit a logistic regression on each factor alone, keep factors below "
        "the screening threshold and select among them stepwise.",
        item_id="baseline")
    baseline_cmd.add_text("\n")
    baseline_cmd.add_def(
        "    --screen-threshold", "p",
        "Keep factors whose single-factor p-value is below this.")
    baseline_cmd.add_def(
        "    --enter-p", "p",
        "Add factors whose p-value is below this.")
    baseline_cmd.add_def(
        "    --exit-p", "p",
        "Drop factors whose p-value is above this.")
    root_item.add_text("\n")

    compare_cmd = root_item.add_def(
        "compare", "[options]",
        "Run the baseline and show its p-values next to the MPPs and "
        "conditional coefficients of stored draws.", item_id="compare")
    compare_cmd.add_text("\n")
    compare_cmd.add_def(
        "    --draws", "path",
        "Read the draws from this path, without its extension.")
    root_item.add_text("\n")

    sensitivity_cmd = root_item.add_def(
        "sensitivity", "[options]",
        "Re-estimate the MPP of each factor across a grid of its prior "
        "inclusion probability, holding the other factors fixed.",
        item_id="sensitivity")
    sensitivity_cmd.add_text("\n")
    sensitivity_cmd.add_def(
        "    --factor", "names",
        "Sweep these comma-separated factors.")
    sensitivity_cmd.add_def(
        "    --grid", "values",
        "Use these comma-separated probabilities. The default is 0, 0.1, "
        "..., 1.")
    sensitivity_cmd.add_def(
        "    --fixed-other", "w",
        "Give every other factor this prior inclusion probability. Factors "
        "named in the --w-file object keep their own.")
    sensitivity_cmd.add_def(
        "    --scan", "values",
        "Also score these common prior inclusion probabilities by "
        "cross-validated AUC.")
    _add_prior_defs(sensitivity_cmd)
    _add_chain_defs(sensitivity_cmd)
    root_item.add_text("\n")

    leverage_cmd = root_item.add_def(
        "leverage", "[options]",
        "Compute the leverage of each individual and flag high values.",
        item_id="leverage")
    leverage_cmd.add_text("\n")
    leverage_cmd.add_def(
        "    --factors", "names",
        "Use only these comma-separated factors.")
    leverage_cmd.add_def(
        "    --group", "column",
        "Label individuals by their level of this categorical column.")
    leverage_cmd.add_def(
        "    --threshold", "h",
        "Flag leverage above this. The default is 2(P+1)/n.")

    return root_item


class CustomArgumentParser(argparse.ArgumentParser):
    """Set custom formatting of error messages for argparse."""
    def error(self, message) -> None:
        raise InputError(message)


class HelpAction(argparse.Action):
    """Handle the '--help' flag."""
    def __init__(self, nargs=0, **kwargs) -> None:
        super().__init__(nargs=nargs, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None) -> None:
        if getattr(namespace, "command", None):
            print(command_help_item().format(item_id=namespace.command))
        else:
            print(main_help_item().format())

        parser.exit()


class VersionAction(argparse.Action):
    """Handle the '--version' flag."""
    def __init__(self, nargs=0, **kwargs) -> None:
        super().__init__(nargs=nargs, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None) -> None:
        print("bvs", __version__)
        parser.exit()


class QuietAction(argparse.Action):
    """Handle the '--quiet' flag."""
    def __init__(self, nargs=0, **kwargs) -> None:
        super().__init__(nargs=nargs, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None) -> None:
        sys.stdout = open(os.devnull, "a")
        namespace.quiet = True


class MessageFormatter(logging.Formatter):
    """Format log records as "Warning: message"."""
    def format(self, record: logging.LogRecord) -> str:
        return "{0}: {1}".format(
            record.levelname.capitalize(), record.getMessage())


def setup_logging(debug: bool = False, quiet: bool = False) -> None:
    """Send the program's log records to stderr."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(MessageFormatter())
    logger = logging.getLogger("bvs")
    logger.handlers = [handler]
    logger.propagate = False
    if debug:
        logger.setLevel(logging.DEBUG)
    elif quiet:
        logger.setLevel(logging.ERROR)
    else:
        logger.setLevel(logging.WARNING)


def _float_list(value: str) -> List[float]:
    try:
        return parse_float_list(value)
    except InputError as error:
        raise argparse.ArgumentTypeError(str(error))


def _common_parser() -> argparse.ArgumentParser:
    parser = CustomArgumentParser(add_help=False)
    parser.add_argument("--help", action=HelpAction)
    parser.add_argument("--data", required=True)
    parser.add_argument("--outcome", required=True)
    parser.add_argument("--encoding")
    parser.add_argument("--config")
    parser.add_argument("--output-dir", "-o")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", "-j", type=int)
    return parser


def _prior_parser() -> argparse.ArgumentParser:
    parser = CustomArgumentParser(add_help=False)
    parser.add_argument("--prior")
    parser.add_argument("--w-file")
    parser.add_argument("--expected-model-size", type=float)
    parser.add_argument("--slab", choices=["gprior", "diag"])
    parser.add_argument("--g", type=float)
    parser.add_argument("--v", type=float)
    parser.add_argument("--intercept-variance", type=float)
    return parser


def _chain_parser() -> argparse.ArgumentParser:
    parser = CustomArgumentParser(add_help=False)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--burn-in", type=int)
    parser.add_argument("--thin", type=int)
    parser.add_argument("--model-updates", type=int)
    parser.add_argument("--swap-probability", type=float)
    return parser


def _cv_parser() -> argparse.ArgumentParser:
    parser = CustomArgumentParser(add_help=False)
    parser.add_argument("--folds", type=int)
    parser.add_argument("--pooling", choices=["pooled", "mean"])
    return parser


def parse_args(args: Optional[List[str]] = None) -> argparse.Namespace:
    """Create a dictionary of parsed command-line arguments.

    Args:
        args: The arguments to parse. The default is sys.argv.

    Returns:
        A namespace of command-line argument names and their values.
    """
    parser = CustomArgumentParser(add_help=False)
    parser.add_argument("--help", action=HelpAction)
    parser.add_argument("--version", action=VersionAction)
    parser.add_argument("--debug", action="store_true")
    parser.add_argument("--quiet", "-q", action=QuietAction)
    parser.set_defaults(quiet=False)

    common = _common_parser()
    prior = _prior_parser()
    chain = _chain_parser()
    cv = _cv_parser()

    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    parser_run = subparsers.add_parser(
        "run", add_help=False, parents=[common, prior, chain])
    parser_run.set_defaults(command="run")

    parser_report = subparsers.add_parser(
        "report", add_help=False, parents=[common, cv])
    parser_report.add_argument("--draws")
    parser_report.add_argument("--top", type=int)
    parser_report.add_argument("--focus", type=parse_name_list, default=[])
    parser_report.add_argument("--extra", type=int)
    parser_report.set_defaults(command="report")

    parser_cv = subparsers.add_parser(
        "cv", add_help=False, parents=[common, cv, prior, chain])
    parser_cv.add_argument("--subset", type=parse_name_list, default=[])
    parser_cv.add_argument("--bma", action="store_true")
    parser_cv.set_defaults(command="cv")

    parser_nested = subparsers.add_parser(
        "nested-curve", add_help=False, parents=[common, cv])
    parser_nested.add_argument("--draws")
    parser_nested.add_argument("--ranking", type=parse_name_list, default=[])
    parser_nested.set_defaults(command="nested-curve")

    parser_baseline = subparsers.add_parser(
        "baseline", add_help=False, parents=[common])
    parser_baseline.add_argument("--screen-threshold", type=float)
    parser_baseline.add_argument("--enter-p", type=float)
    parser_baseline.add_argument("--exit-p", type=float)
    parser_baseline.set_defaults(command="baseline")

    parser_compare = subparsers.add_parser(
        "compare", add_help=False, parents=[common])
    parser_compare.add_argument("--draws")
    parser_compare.add_argument("--screen-threshold", type=float)
    parser_compare.add_argument("--enter-p", type=float)
    parser_compare.add_argument("--exit-p", type=float)
    parser_compare.set_defaults(command="compare")

    parser_sensitivity = subparsers.add_parser(
        "sensitivity", add_help=False, parents=[common, prior, chain, cv])
    parser_sensitivity.add_argument(
        "--factor", type=parse_name_list, default=[])
    parser_sensitivity.add_argument("--grid", type=_float_list)
    parser_sensitivity.add_argument("--fixed-other", type=float)
    parser_sensitivity.add_argument("--scan", type=_float_list, default=[])
    parser_sensitivity.set_defaults(command="sensitivity")

    parser_leverage = subparsers.add_parser(
        "leverage", add_help=False, parents=[common])
    parser_leverage.add_argument("--factors", type=parse_name_list, default=[])
    parser_leverage.add_argument("--group")
    parser_leverage.add_argument("--threshold", type=float)
    parser_leverage.set_defaults(command="leverage")

    return parser.parse_args(args)


def settings_overrides(cmd_args: argparse.Namespace) -> Dict[str, Any]:
    """Collect the options that override the settings file."""
    return {
        key: getattr(cmd_args, option)
        for option, key in SETTINGS_OPTIONS.items()
        if getattr(cmd_args, option, None) is not None}


def def_command(cmd_args: argparse.Namespace) -> Command:
    source = DataSource(cmd_args.data, cmd_args.outcome, cmd_args.encoding)
    common = {
        "config_path": cmd_args.config,
        "output_dir": cmd_args.output_dir,
        "overrides": settings_overrides(cmd_args),
        }
    if cmd_args.command == "run":
        return RunCommand(source, cmd_args.prior, cmd_args.w_file, **common)
    elif cmd_args.command == "report":
        return ReportCommand(
            source, cmd_args.draws, cmd_args.top, cmd_args.focus,
            cmd_args.extra, **common)
    elif cmd_args.command == "cv":
        return CvCommand(
            source, cmd_args.subset, cmd_args.bma, cmd_args.prior,
            cmd_args.w_file, **common)
    elif cmd_args.command == "nested-curve":
        return NestedCurveCommand(
            source, cmd_args.draws, cmd_args.ranking, **common)
    elif cmd_args.command == "baseline":
        return BaselineCommand(source, **common)
    elif cmd_args.command == "compare":
        return CompareCommand(source, cmd_args.draws, **common)
    elif cmd_args.command == "sensitivity":
        return SensitivityCommand(
            source, cmd_args.factor, cmd_args.grid, cmd_args.fixed_other,
            cmd_args.scan, cmd_args.prior, cmd_args.w_file, **common)
    elif cmd_args.command == "leverage":
        return LeverageCommand(
            source, cmd_args.factors, cmd_args.group, cmd_args.threshold,
            **common)


def main(args: Optional[List[str]] = None) -> int:
    """Start the program.

    Returns:
        0 on success, or the exit code of the error that ended the program.
    """
    cmd_args = None
    try:
        # Exit properly on SIGTERM, SIGHUP or SIGINT.
        signal.signal(signal.SIGTERM, signal_exception_handler)
        signal.signal(signal.SIGHUP, signal_exception_handler)
        signal.signal(signal.SIGINT, signal_exception_handler)

        cmd_args = parse_args(args)
        setup_logging(cmd_args.debug, cmd_args.quiet)
        command = def_command(cmd_args)
        command.main()
    except ProgramError as error:
        if cmd_args is not None and cmd_args.debug:
            raise
        for message in error.args:
            print("Error: {}".format(message), file=sys.stderr)
        return error.exit_code
    return 0


def signal_exception_handler(signum: int, frame) -> None:
    """Raise an exception with error message for an interruption by signal."""
    raise ProgramError("program received " + signal.Signals(signum).name)
