"""CSV ingestion and JSON report emission."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from . import __version__
from .model import AlgorithmConfig, Dataset, ScreeningError, Trajectory

SCHEMA_VERSION = "1"


class DataError(ScreeningError):
    pass


class ParseError(DataError):
    def __init__(self, line: int, column: int, message: str = "malformed row"):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line, self.column = line, column


class NonNumericCell(DataError):
    def __init__(self, line: int, column: int, value: str):
        super().__init__(f"line {line}, column {column}: non-numeric cell {value!r}")
        self.line, self.column, self.value = line, column, value


class EmptyFile(DataError):
    pass


class ResponseColumnMissing(DataError):
    pass


def load_csv(
    path: Union[str, Path],
    response: Union[str, int, None] = None,
    has_header: bool = True,
    delimiter: str = ",",
) -> Dataset:
    """Read a numeric CSV; ``response`` names the y column (default: last).

    Without a header, ``response`` may be a 0-based column number. Line and
    column numbers in errors are 1-based, as a text editor shows them.
    """
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh, delimiter=delimiter))]
    rows = [(i, r) for i, r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path} is empty")
    if has_header:
        _, header = rows[0]
        header = [h.strip() for h in header]
        rows = rows[1:]
    else:
        header = [f"x{j}" for j in range(len(rows[0][1]))]
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    width = len(header)
    if width < 2:
        raise ParseError(rows[0][0], 1, "need at least one predictor and a response")

    if response is None or response == "last":
        ycol = width - 1
    elif isinstance(response, int) or (not has_header and str(response).isdigit()):
        ycol = int(response)
        if not 0 <= ycol < width:
            raise ResponseColumnMissing(f"response column {ycol} out of range")
    else:
        if response not in header:
            raise ResponseColumnMissing(f"no column named {response!r}")
        ycol = header.index(response)

    data = np.empty((len(rows), width))
    for r, (line, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(line, min(len(row), width) + 1,
                             f"expected {width} cells, found {len(row)}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(line, c + 1, cell) from None
            if not math.isfinite(v):
                raise NonNumericCell(line, c + 1, cell)
            data[r, c] = v
    if data.shape[0] < 2:
        raise DataError("need at least two data rows")
    keep = [j for j in range(width) if j != ycol]
    return Dataset(data[:, keep], data[:, ycol], column_names=[header[j] for j in keep])


def write_csv(dataset: Dataset, path: Union[str, Path], response_name: str = "y") -> None:
    """Write ``x`` and ``y`` with 17 significant digits (lossless)."""
    names = list(dataset.names()) + [response_name]
    table = np.column_stack([dataset.x, dataset.y])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in table:
            w.writerow([f"{v:.17g}" for v in row])


def file_fingerprint(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunReport:
    input: dict[str, Any]
    config: AlgorithmConfig
    trajectory: Trajectory
    selected: list[int]
    selected_names: list[str]
    rss_path: list[float]
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "input": self.input,
            "config": self.config.to_dict(),
            "trajectory": self.trajectory.to_dict(),
            "selected": list(self.selected),
            "selected_names": list(self.selected_names),
            "rss_path": list(self.rss_path),
            "timings": self.timings,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunReport":
        return cls(
            input=d["input"],
            config=AlgorithmConfig.from_dict(d["config"]),
            trajectory=Trajectory.from_dict(d["trajectory"]),
            selected=list(d["selected"]),
            selected_names=list(d["selected_names"]),
            rss_path=[float(v) for v in d["rss_path"]],
            timings=dict(d["timings"]),
            version=d["version"],
            schema_version=d["schema_version"],
        )


def dumps(obj: Any) -> str:
    # Python's float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def trajectory_csv(trajectory: Trajectory) -> str:
    lines = ["k,model,rss"]
    for r in trajectory.records:
        lines.append(f"{r.k},{' '.join(map(str, r.model))},{r.rss:.17g}")
    return "\n".join(lines) + "\n"


def write_atomic(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, output: Optional[str]) -> None:
    if output:
        write_atomic(output, text)
    else:
        print(text, end="")
