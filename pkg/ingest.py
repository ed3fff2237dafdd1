"""
Dataset ingestion

CSV parsing with dense node-id remapping, chronological splits and the
dataset statistics table (node/edge counts, surprise index, snapshot
counts).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import OUTPUT_SETTINGS, SPLIT_SETTINGS
from exceptions import CsvParseError, SplitError, SurpriseError
from input_mapper import Granularity, finest_gapless_granularity, make_partition
from temporal_graph import EventStream, validate_stream

COLUMNS = ("src", "dst", "t", "t_end", "weight")
INTEGER_PATTERN = r"[+-]?\d+"
INT64_MIN, INT64_MAX = int(np.iinfo(np.int64).min), int(np.iinfo(np.int64).max)


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_frac: float = Field(default=SPLIT_SETTINGS["train_frac"], gt=0.0, lt=1.0)
    val_frac: float = Field(default=SPLIT_SETTINGS["val_frac"], gt=0.0, lt=1.0)
    test_frac: float = Field(default=SPLIT_SETTINGS["test_frac"], gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _sums_to_one(self) -> SplitSpec:
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1.0")
        return self


class CsvSchema(BaseModel):
    """How to read an event CSV.

    `header=None` detects a header row made of known column names.
    """

    model_config = ConfigDict(frozen=True)

    header: bool | None = None
    delimiter: str = ","
    remap_ids: bool = True


def _detect_header(first_row: list[str]) -> bool:
    names = [cell.strip().lower() for cell in first_row if cell.strip()]
    return bool(names) and all(name in COLUMNS for name in names)


def _bad_cell(raw: pd.Series, name: str, lines: np.ndarray, bad: np.ndarray, kind: str) -> CsvParseError:
    row = int(np.flatnonzero(bad)[0])
    return CsvParseError(f"{name} value {raw.iloc[row]!r} is not {kind}", line=int(lines[row]))


def _numeric(raw: pd.Series, name: str, lines: np.ndarray, default: np.ndarray | None = None) -> np.ndarray:
    cells = raw.str.strip()
    values = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=np.float64)
    if default is not None:
        missing = (cells == "").to_numpy()
        values[missing] = default[missing]
    bad = ~np.isfinite(values)
    if bad.any():
        raise _bad_cell(raw, name, lines, bad, "a number")
    return values


def _integers(raw: pd.Series, name: str, lines: np.ndarray, default: np.ndarray | None = None) -> np.ndarray:
    """Exact int64 parse; ids and timestamps beyond 2**53 keep every digit."""
    cells = raw.str.strip()
    missing = (cells == "").to_numpy() if default is not None else np.zeros(len(cells), dtype=bool)
    bad = ~(cells.str.fullmatch(INTEGER_PATTERN).to_numpy(dtype=bool) | missing)
    if bad.any():
        raise _bad_cell(raw, name, lines, bad, "an integer")
    digits = [int(d) for d in cells.to_numpy(dtype=object)[~missing]]
    too_large = np.array([not INT64_MIN <= d <= INT64_MAX for d in digits], dtype=bool)
    if too_large.any():
        bad = np.zeros(len(cells), dtype=bool)
        bad[np.flatnonzero(~missing)[too_large]] = True
        raise _bad_cell(raw, name, lines, bad, "a 64-bit integer")
    values = np.empty(len(cells), dtype=np.int64)
    values[~missing] = np.fromiter(digits, dtype=np.int64, count=len(digits))
    if default is not None:
        values[missing] = default[missing]
    return values


def write_node_mapping(raw_ids: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"raw_ids": raw_ids.tolist()}, f, indent=OUTPUT_SETTINGS["json_indent"])
    return path


def read_node_mapping(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as f:
        return np.asarray(json.load(f)["raw_ids"], dtype=np.int64)


def parse_csv(
    path: str | Path,
    schema: CsvSchema | None = None,
    mapping_path: str | Path | None = None,
    persist_mapping: bool = True,
) -> EventStream:
    """Read `src,dst,t[,t_end][,weight]` rows into a validated stream.

    Node ids are remapped to 0..n-1 in ascending raw-id order; the raw ids
    are written next to the CSV (or to `mapping_path`).
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")

    try:
        frame = pd.read_csv(
            path, header=None, dtype=str, sep=schema.delimiter,
            keep_default_na=False, skip_blank_lines=False,
        )
    except pd.errors.EmptyDataError:
        raise CsvParseError("file is empty", line=1) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise CsvParseError(str(e), line=int(match.group(1)) if match else None) from None

    frame = frame.fillna("")
    has_header = _detect_header(frame.iloc[0].tolist()) if schema.header is None else schema.header
    first_line = 1
    if has_header:
        names = [cell.strip().lower() for cell in frame.iloc[0].tolist()]
        unknown = [name for name in names if name and name not in COLUMNS]
        if unknown or not {"src", "dst", "t"} <= set(names):
            raise CsvParseError(f"header must name src,dst,t[,t_end][,weight], got {names}", line=1)
        frame = frame.iloc[1:].copy()
        frame.columns = names
        first_line = 2
    else:
        if frame.shape[1] > len(COLUMNS) or frame.shape[1] < 3:
            raise CsvParseError(f"expected 3 to 5 columns, got {frame.shape[1]}", line=1)
        frame.columns = list(COLUMNS[: frame.shape[1]])

    # keep physical line numbers for messages, then drop blank lines
    lines = np.arange(len(frame)) + first_line
    blank = (frame == "").all(axis=1).to_numpy()
    frame, lines = frame[~blank].reset_index(drop=True), lines[~blank]
    if frame.empty:
        raise CsvParseError("no event rows", line=first_line)

    def column(name: str, integral: bool, default: np.ndarray | None = None) -> np.ndarray:
        if name not in frame.columns:
            return default
        parse = _integers if integral else _numeric
        return parse(frame[name], name, lines, default)

    src = column("src", integral=True)
    dst = column("dst", integral=True)
    t_start = column("t", integral=True)
    t_end = column("t_end", integral=True, default=t_start)
    weight = column("weight", integral=False, default=np.ones(len(frame)))
    if schema.remap_ids:
        raw_ids, dense = np.unique(np.concatenate([src, dst]), return_inverse=True)
        src, dst = dense[: src.size].astype(np.int64), dense[src.size:].astype(np.int64)
        num_nodes = int(raw_ids.size)
        if persist_mapping:
            target = mapping_path or path.with_name(path.name + OUTPUT_SETTINGS["node_mapping_suffix"])
            write_node_mapping(raw_ids, target)
            logger.debug("node id mapping written to {}", target)
    else:
        num_nodes = None

    stream = validate_stream(
        columns=(src, dst, t_start.astype(np.int64), t_end.astype(np.int64), weight),
        num_nodes=num_nodes,
    )
    logger.info("parsed {}: {} events, {} nodes", path.name, len(stream), stream.num_nodes)
    return stream


def _split_point(k: int, frac: Fraction) -> int:
    return math.floor(k * frac)


def chronological_split(stream: EventStream, spec: SplitSpec | None = None) -> tuple[EventStream, EventStream, EventStream]:
    """Split by event count at floor(k*train) and floor(k*(train+val)).

    Events sharing a timestamp may fall on both sides of a boundary; the
    stream's stable order decides.
    """
    spec = spec or SplitSpec()
    k = len(stream)
    train_frac = Fraction(repr(spec.train_frac))
    a = _split_point(k, train_frac)
    b = _split_point(k, train_frac + Fraction(repr(spec.val_frac)))
    sizes = (a, b - a, k - b)
    if min(sizes) == 0:
        raise SplitError(f"{k} events split into empty part(s): train/val/test = {sizes[0]}/{sizes[1]}/{sizes[2]}")
    logger.info("chronological split: train={} val={} test={}", *sizes)
    return stream.slice(0, a), stream.slice(a, b), stream.slice(b, k)


def split_by_boundaries(stream: EventStream, val_start: int, test_start: int) -> tuple[EventStream, EventStream, EventStream]:
    """Split at given timestamps: val starts at `val_start`, test at `test_start`."""
    if val_start > test_start:
        raise SplitError(f"val_start {val_start} is after test_start {test_start}")
    a, b = (int(i) for i in np.searchsorted(stream.t_start, [val_start, test_start], side="left"))
    k = len(stream)
    if min(a, b - a, k - b) == 0:
        raise SplitError(f"boundaries ({val_start}, {test_start}) leave an empty split")
    logger.info("boundary split: train={} val={} test={}", a, b - a, k - b)
    return stream.slice(0, a), stream.slice(a, b), stream.slice(b, k)


def surprise_index(train: EventStream, test: EventStream, unique: bool = False) -> float:
    """Share of test edges whose (src, dst) pair never occurs in train.

    Counts occurrences by default; `unique` counts distinct test pairs.
    """
    if len(test) == 0:
        raise SurpriseError("surprise index of an empty test split")
    n = max(train.num_nodes, test.num_nodes)
    test_keys = test.pair_keys(n)
    if unique:
        test_keys = np.unique(test_keys)
    unseen = ~np.isin(test_keys, train.pair_keys(n))
    return int(unseen.sum()) / test_keys.size


def num_snapshots_at(stream: EventStream, granularity: Granularity | str | int) -> int:
    return make_partition(stream, granularity).count


@dataclass(frozen=True)
class DatasetStats:
    num_nodes: int
    num_edges: int
    num_unique_edges: int
    surprise: float | None
    granularity: str | None = None
    num_snapshots: int | None = None

    def __post_init__(self):
        if self.num_unique_edges > self.num_edges:
            raise ValueError("more unique edges than edges")
        if self.surprise is not None and not 0.0 <= self.surprise <= 1.0:
            raise ValueError(f"surprise {self.surprise} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "nodes": self.num_nodes,
            "edges": self.num_edges,
            "unique_edges": self.num_unique_edges,
            "surprise": self.surprise,
            "granularity": self.granularity,
            "snapshots": self.num_snapshots,
        }


def dataset_stats(
    stream: EventStream,
    spec: SplitSpec | None = None,
    granularity: Granularity | str | int | None = "auto",
) -> DatasetStats:
    """Summary row for a dataset; `granularity="auto"` uses the finest gapless one."""
    try:
        train, _, test = chronological_split(stream, spec)
        surprise = surprise_index(train, test)
    except SplitError as e:
        logger.warning("no surprise index: {}", e)
        surprise = None

    name, count = None, None
    if granularity == "auto":
        choice = finest_gapless_granularity(stream)
        name, count = choice.granularity.name, choice.num_snapshots
    elif granularity is not None:
        g = Granularity.of(granularity)
        name, count = g.name, num_snapshots_at(stream, g)

    return DatasetStats(
        num_nodes=int(np.unique(np.concatenate([stream.src, stream.dst])).size),
        num_edges=len(stream),
        num_unique_edges=stream.unique_pairs(),
        surprise=surprise,
        granularity=name,
        num_snapshots=count,
    )
