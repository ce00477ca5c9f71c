import csv
import io
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ._errors import DataFileUnparsable, DistributedLoglinearException
from ._graphs import Graph
from ._model import (
    Cell,
    CellSpace,
    ContingencyTable,
    JSet,
    ThetaVector,
)
from ._settings import (
    CELL_SEPARATOR,
    DEFAULT_SPARSE_THRESHOLD,
    DIGIT_ENCODING_MAX_LEVELS,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TABLE_HEADER = ("cell", "count")
VERTICES_HEADER = "#vertices"


def uses_digit_encoding(levels: Sequence[int]) -> bool:
    return all(level <= DIGIT_ENCODING_MAX_LEVELS for level in levels)


def encode_cell(cell: Sequence[int], levels: Sequence[int]) -> str:
    if uses_digit_encoding(levels):
        return "".join(str(level) for level in cell)
    return CELL_SEPARATOR.join(str(level) for level in cell)


def decode_cell(text: str, vertex_count: Optional[int] = None) -> Cell:
    """Reads a digit string or, if it holds a separator, colon-separated levels."""
    text = text.strip()
    if not text:
        raise ValueError("empty cell")
    if CELL_SEPARATOR in text:
        cell = tuple(int(part) for part in text.split(CELL_SEPARATOR))
    elif vertex_count == 1:
        cell = (int(text),)
    else:
        if not text.isdigit():
            raise ValueError(f"{text!r} is not a digit string")
        cell = tuple(int(character) for character in text)
    if vertex_count is not None and len(cell) != vertex_count:
        raise ValueError(f"expected {vertex_count} levels, got {len(cell)}")
    return cell


def _infer_space(cells: Sequence[Cell], levels: Optional[Sequence[int]]) -> CellSpace:
    if levels is not None:
        return CellSpace(tuple(levels))
    if not cells:
        raise DistributedLoglinearException(
            "Cannot infer the number of levels from an empty file; pass the levels"
        )
    observed = np.max(np.asarray(cells), axis=0) + 1
    return CellSpace(tuple(max(2, int(level)) for level in observed))


def read_table(
    path: PathLike,
    levels: Optional[Sequence[int]] = None,
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
) -> ContingencyTable:
    """
    Reads a `cell,count` CSV. Without explicit `levels` every vertex gets one more level
    than the largest observed, and at least two.
    """
    path = Path(path)
    vertex_count = None if levels is None else len(levels)
    counts = {}
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(part.strip() for part in header) != TABLE_HEADER:
            raise DataFileUnparsable(path, 1, "the header must be `cell,count`")
        for line_number, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise DataFileUnparsable(path, line_number, "expected `cell,count`")
            try:
                cell = decode_cell(row[0], vertex_count)
                count = int(row[1])
            except ValueError as error:
                raise DataFileUnparsable(path, line_number, str(error))
            if count < 0:
                raise DataFileUnparsable(path, line_number, "negative count")
            if vertex_count is None:
                vertex_count = len(cell)
            elif len(cell) != vertex_count:
                raise DataFileUnparsable(
                    path, line_number, f"expected {vertex_count} levels, got {len(cell)}"
                )
            counts[cell] = counts.get(cell, 0) + count
    space = _infer_space(list(counts), levels)
    try:
        return ContingencyTable.from_mapping(space, counts, sparse_threshold)
    except DistributedLoglinearException as error:
        raise DataFileUnparsable(path, 0, str(error))


def format_table(table: ContingencyTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for cell, count in table.items():
        writer.writerow((encode_cell(cell, table.space.levels), count))
    return buffer.getvalue()


def write_table(table: ContingencyTable, path: PathLike) -> None:
    Path(path).write_text(format_table(table))


def read_records(path: PathLike, levels: Optional[Sequence[int]] = None) -> ContingencyTable:
    """One encoded cell per line, one line per individual."""
    path = Path(path)
    vertex_count = None if levels is None else len(levels)
    cells: List[Cell] = []
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            cell = decode_cell(line, vertex_count)
        except ValueError as error:
            raise DataFileUnparsable(path, line_number, str(error))
        if vertex_count is None:
            vertex_count = len(cell)
        elif len(cell) != vertex_count:
            raise DataFileUnparsable(
                path, line_number, f"expected {vertex_count} levels, got {len(cell)}"
            )
        cells.append(cell)
    space = _infer_space(cells, levels)
    try:
        return ContingencyTable.from_records(space, np.asarray(cells, dtype=np.int64))
    except DistributedLoglinearException as error:
        raise DataFileUnparsable(path, 0, str(error))


def format_records(records: np.ndarray, levels: Sequence[int]) -> str:
    return "".join(f"{encode_cell(cell, levels)}\n" for cell in np.asarray(records).tolist())


def read_data(
    path: PathLike,
    levels: Optional[Sequence[int]] = None,
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD,
) -> ContingencyTable:
    """A `cell,count` table if the file starts with that header, raw records otherwise."""
    path = Path(path)
    with path.open() as handle:
        first = handle.readline()
    if first.replace(" ", "").strip() == ",".join(TABLE_HEADER):
        return read_table(path, levels, sparse_threshold)
    return read_records(path, levels)


def read_graph(path: PathLike) -> Graph:
    path = Path(path)
    vertex_count = None
    edges: List[Tuple[int, int]] = []
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(VERTICES_HEADER):
            try:
                vertex_count = int(line[len(VERTICES_HEADER):])
            except ValueError:
                raise DataFileUnparsable(path, line_number, "malformed `#vertices n` line")
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFileUnparsable(path, line_number, "expected an edge `u v`")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise DataFileUnparsable(path, line_number, "vertices must be integers")
    if vertex_count is None:
        raise DataFileUnparsable(path, 1, "missing `#vertices n` header")
    try:
        return Graph.from_edges(vertex_count, edges)
    except DistributedLoglinearException as error:
        raise DataFileUnparsable(path, 0, str(error))


def format_graph(graph: Graph) -> str:
    lines = [f"{VERTICES_HEADER} {graph.vertex_count}"]
    lines.extend(f"{u} {v}" for u, v in graph.sorted_edges())
    return "\n".join(lines) + "\n"


def write_graph(graph: Graph, path: PathLike) -> None:
    Path(path).write_text(format_graph(graph))


def theta_to_raw_data(theta: ThetaVector) -> dict:
    return {
        "theta0": theta.theta0,
        "entries": [
            {"cell": encode_cell(cell, theta.space.levels), "value": float(value)}
            for cell, value in zip(theta.jset.cells, theta.values)
        ],
    }


def format_theta(theta: ThetaVector) -> str:
    return json.dumps(theta_to_raw_data(theta), indent=2)


def read_theta(
    path: PathLike,
    space: CellSpace,
    jset: Optional[JSet] = None,
) -> ThetaVector:
    """
    Reads a {theta0, entries: [{cell, value}]} document. Without `jset` the J-set is the
    set of cells listed in the file.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
        entries = {
            decode_cell(entry["cell"], space.vertex_count): float(entry["value"])
            for entry in raw["entries"]
        }
        theta0 = raw.get("theta0")
    except (ValueError, KeyError, TypeError) as error:
        raise DataFileUnparsable(path, 0, f"not a parameter document: {error}")
    jset = jset or JSet(space, entries)
    try:
        return ThetaVector.from_mapping(jset, entries, theta0)
    except DistributedLoglinearException as error:
        raise DataFileUnparsable(path, 0, str(error))


def write_text(text: str, path: PathLike) -> None:
    Path(path).write_text(text)

