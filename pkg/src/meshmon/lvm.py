"""Tab-separated measurement log with the fixed LabVIEW-style header block.

Dialect: Writer_Version 2, tab separator, one X column, absolute time
preference. The X column is seconds since log start with six decimals;
channel values are written in shortest round-trip form so a read-back
reproduces them bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

HEADER_END = "***End_of_Header***"
X_COLUMN = "X_Value"
COMMENT_COLUMN = "Comment"

DEFAULT_CHANNELS = (
    "Room1_Temp", "Room1_RH", "Room1_Lux",
    "Room2_Temp", "Room2_RH", "Room2_Lux",
    "Room3_Temp", "Room3_RH", "Room3_Lux",
)


def _format_value(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    return repr(float(value))


def _parse_value(text: str) -> float:
    return float(text)


def header_block(start_time: datetime) -> str:
    lines = [
        "LabVIEW Measurement",
        "Writer_Version\t2",
        "Reader_Version\t2",
        "Separator\tTab",
        "Multi_Headings\tNo",
        "X_Columns\tOne",
        "Time_Pref\tAbsolute",
        "Date\t" + start_time.strftime("%Y/%m/%d"),
        "Time\t" + start_time.strftime("%H:%M:%S.%f"),
        HEADER_END,
    ]
    return "\n".join(lines) + "\n"


class LvmWriter:
    """Appends measurement rows; emits the header once per file and rotates
    completed files to <stem>.NNN.lvm once they pass the size limit."""

    def __init__(self, path: str | Path, channels: Sequence[str] = DEFAULT_CHANNELS,
                 start_time: datetime | None = None, max_bytes: int | None = None):
        self.path = Path(path)
        self.channels = tuple(channels)
        self.start_time = start_time if start_time is not None else datetime.now()
        self.max_bytes = max_bytes
        self.rows_written = 0
        self._rotations = 0
        self._fh = None

    def _open(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="\n")
        self._fh.write(header_block(self.start_time))
        self._fh.write("\t".join((X_COLUMN,) + self.channels + (COMMENT_COLUMN,)) + "\n")

    def _rotate(self) -> None:
        assert self._fh is not None
        self._fh.close()
        self._fh = None
        self._rotations += 1
        target = self.path.with_name(f"{self.path.stem}.{self._rotations:03d}{self.path.suffix}")
        self.path.rename(target)

    def append(self, x_value: float, values: Sequence[float], comment: str = "") -> None:
        if len(values) != len(self.channels):
            raise ValueError(f"expected {len(self.channels)} values, got {len(values)}")
        if self._fh is None:
            self._open()
        elif self.max_bytes is not None and self._fh.tell() >= self.max_bytes:
            self._rotate()
            self._open()
        row = [f"{x_value:.6f}"] + [_format_value(v) for v in values] + [comment]
        self._fh.write("\t".join(row) + "\n")
        self._fh.flush()
        self.rows_written += 1

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "LvmWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass
class LvmDocument:
    header: dict[str, str]
    channels: tuple[str, ...]  # X column included, comment column excluded
    rows: list[list[float]] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    @property
    def x_values(self) -> list[float]:
        return [row[0] for row in self.rows]

    def column(self, name: str) -> list[float]:
        idx = self.channels.index(name)
        return [row[idx] for row in self.rows]


def read_lvm(path: str | Path) -> LvmDocument:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "LabVIEW Measurement":
        raise ValueError(f"{path} is not a measurement log")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i] != HEADER_END:
        key, _, value = lines[i].partition("\t")
        header[key] = value
        i += 1
    if i == len(lines):
        raise ValueError("missing end-of-header marker")
    i += 1
    columns = lines[i].split("\t")
    if columns[-1] != COMMENT_COLUMN:
        raise ValueError("channel row must end with the comment column")
    channels = tuple(columns[:-1])
    doc = LvmDocument(header=header, channels=channels)
    for line in lines[i + 1:]:
        if not line:
            continue
        cells = line.split("\t")
        doc.rows.append([_parse_value(c) for c in cells[:-1]])
        doc.comments.append(cells[-1])
    return doc
