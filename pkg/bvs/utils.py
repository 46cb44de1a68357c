"""Miscellaneous utilities.

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
import hashlib
import concurrent.futures
from typing import Any, Callable, Iterable, List, Sequence, Tuple

import numpy as np

from bvs.exceptions import InputError

# Spawn keys for the independent random streams derived from one root seed.
SEED_STREAMS = {
    "chain": 0,
    "cv": 1,
    "sensitivity": 2,
    "scan": 3,
    }


def derive_seed(root: int, stream: str, *counters: int) -> int:
    """Derive a sub-seed from the root seed of a run.

    The same root, stream and counters always give the same sub-seed, and
    different streams or counters give statistically independent ones.

    Args:
        root: The root seed given on the command line or in the settings.
        stream: The name of the random stream, one of SEED_STREAMS.
        counters: Extra indices, such as a fold or grid point number.

    Returns:
        A 64-bit integer seed.
    """
    sequence = np.random.SeedSequence(
        root, spawn_key=(SEED_STREAMS[stream], *counters))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def file_digest(path: str) -> str:
    """Get the SHA-256 hex digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def parallel_map(
        func: Callable, items: Sequence, jobs: int = 1) -> List[Any]:
    """Apply a function to each item, optionally in worker processes.

    Results are always returned in the order of the items, whatever order
    the workers finish in.

    Args:
        func: A picklable callable taking one item.
        items: The items to process.
        jobs: The maximum number of worker processes. With 1, everything
            runs in the current process.

    Returns:
        A list with the result for each item.
    """
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(jobs, len(items))) as executor:
        return list(executor.map(func, items))


def parse_float_list(value: str) -> List[float]:
    """Parse a comma-separated list of numbers.

    Raises:
        InputError: An element isn't a number.
    """
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise InputError("'{}' is not a list of numbers".format(value))


def parse_name_list(value: str) -> List[str]:
    """Parse a comma-separated list of names, dropping blanks."""
    return [item.strip() for item in value.split(",") if item.strip()]


def format_percent(value: float) -> str:
    """Format a probability as a whole-number percentage."""
    if value is None or np.isnan(value):
        return ""
    return "{:.0f}".format(100 * value)


class DictProperty:
    """A property for the getting and setting of individual dictionary keys."""
    class _Proxy:
        def __init__(self, obj, fget, fset, fdel):
            self._obj = obj
            self._fget = fget
            self._fset = fset
            self._fdel = fdel

        def __getitem__(self, key):
            if self._fget is None:
                raise TypeError("can't read item")
            return self._fget(self._obj, key)

        def __setitem__(self, key, value):
            if self._fset is None:
                raise TypeError("can't set item")
            self._fset(self._obj, key, value)

        def __delitem__(self, key):
            if self._fdel is None:
                raise TypeError("can't delete item")
            self._fdel(self._obj, key)

    def __init__(self, fget=None, fset=None, fdel=None, doc=None):
        self._fget = fget
        self._fset = fset
        self._fdel = fdel
        self.__doc__ = doc

    def __get__(self, obj, objtype=None):
        if obj is None:
            return self
        return self._Proxy(obj, self._fget, self._fset, self._fdel)

    def getter(self, fget):
        return type(self)(fget, self._fset, self._fdel, self.__doc__)

    def setter(self, fset):
        return type(self)(self._fget, fset, self._fdel, self.__doc__)

    def deleter(self, fdel):
        return type(self)(self._fget, self._fset, fdel, self.__doc__)


class BoxTable:
    """Format a table of results using box-drawing characters.

    This table allows for ANSI escape codes in the data. Each row must have
    the same number of columns. Cells that look like numbers are
    right-aligned and everything else is left-aligned. Empty rows are
    converted to horizontal separators.

    Attributes:
        data: The table data, where each item is a row in the table. The first
            row makes up the table headers.
    """
    HORIZONTAL_CHAR = "─"
    VERTICAL_CHAR = "│"
    TOP_RIGHT_CHAR = "┐"
    TOP_LEFT_CHAR = "┌"
    BOTTOM_RIGHT_CHAR = "┘"
    BOTTOM_LEFT_CHAR = "└"
    CROSS_CHAR = "┼"
    TOP_TEE_CHAR = "┬"
    BOTTOM_TEE_CHAR = "┴"
    LEFT_TEE_CHAR = "├"
    RIGHT_TEE_CHAR = "┤"
    ANSI_REGEX = re.compile("(\x1b\\[[0-9;]+m)")
    NUMBER_REGEX = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?%?$")
    HEADER_ANSI = ("\x1b[1m", "\x1b[0m")

    def __init__(self, data: List[Tuple[str, ...]]):
        if not all(len(row) == len(data[0]) for row in data):
            raise ValueError("each row must be the same length")
        self.data = [tuple(str(item) for item in row) for row in data]
        self._lengths = self._get_column_lengths()

    def _visible(self, text: str) -> str:
        return self.ANSI_REGEX.sub("", text)

    def _get_column_lengths(self) -> List[int]:
        """Get the length of each column in the table."""
        lengths = []
        for column in zip(*self.data):
            lengths.append(max(len(self._visible(item)) for item in column))
        return lengths

    def _get_separator(self) -> List[str]:
        return [self.HORIZONTAL_CHAR * (length+2) for length in self._lengths]

    def _format_border(self, left: str, tee: str, right: str) -> str:
        return left + tee.join(self._get_separator()) + right

    def _pad(self, text: str, length: int) -> str:
        # str.format() can't be used for padding because it doesn't ignore
        # ANSI escape sequences.
        spaces = " " * (length - len(self._visible(text)))
        if self.NUMBER_REGEX.match(self._visible(text)):
            return spaces + text
        return text + spaces

    def _format_rows(self, rows: Iterable[Tuple[str, ...]]):
        for row in rows:
            if not any(row):
                yield self._format_border(
                    self.LEFT_TEE_CHAR, self.CROSS_CHAR, self.RIGHT_TEE_CHAR)
                continue
            inside = " {} ".format(self.VERTICAL_CHAR).join(
                self._pad(text, length)
                for text, length in zip(row, self._lengths))
            yield self.VERTICAL_CHAR + " " + inside + " " + self.VERTICAL_CHAR

    def format(self) -> str:
        """Format the table data into a string.

        Returns:
            The table as a string.
        """
        header = next(self._format_rows(self.data[:1]))
        table_lines = [
            self._format_border(
                self.TOP_LEFT_CHAR, self.TOP_TEE_CHAR, self.TOP_RIGHT_CHAR),
            header.join(self.HEADER_ANSI),
            self._format_border(
                self.LEFT_TEE_CHAR, self.CROSS_CHAR, self.RIGHT_TEE_CHAR),
            *self._format_rows(self.data[1:]),
            self._format_border(
                self.BOTTOM_LEFT_CHAR, self.BOTTOM_TEE_CHAR,
                self.BOTTOM_RIGHT_CHAR)]

        return "\n".join(table_lines)
