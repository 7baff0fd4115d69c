"""Open card-sort data and the participant-derived item similarity."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from cardsim.errors import (
    DegenerateColumn,
    DuplicateAssignment,
    InputError,
    MissingAssignment,
    UnknownItem,
)
from cardsim.similarity import SimilarityMatrix, rankdata


@dataclass(frozen=True)
class Partition:
    participant_id: str
    assignment: Mapping[str, Hashable]

    @property
    def group_count(self) -> int:
        return len(set(self.assignment.values()))


@dataclass(frozen=True)
class CardSortStudy:
    item_ids: tuple[str, ...]
    participants: tuple[Partition, ...]

    def __post_init__(self):
        if not self.participants:
            raise InputError("a card-sort study needs at least one participant")
        items = set(self.item_ids)
        seen = set()
        for p in self.participants:
            if p.participant_id in seen:
                raise DuplicateAssignment(f"participant {p.participant_id!r} appears twice")
            seen.add(p.participant_id)
            keys = set(p.assignment)
            if keys - items:
                raise UnknownItem(f"participant {p.participant_id!r} sorted unknown item {min(keys - items)!r}")
            if items - keys:
                raise MissingAssignment(f"participant {p.participant_id!r} did not sort item {min(items - keys)!r}")


@dataclass(frozen=True, eq=False)
class BinaryMembershipTable:
    rows: tuple[tuple[str, Hashable], ...]
    item_ids: tuple[str, ...]
    values: np.ndarray


def _sorted_labels(labels):
    try:
        return sorted(labels)
    except TypeError:
        return sorted(labels, key=lambda g: (type(g).__name__, str(g)))


def parse_cardsort_csv(path, item_ids: Sequence[str] | None = None) -> CardSortStudy:
    """Read long-format ``participant,item,group`` rows.

    Without ``item_ids`` the item order is the order of first appearance.
    """
    path = Path(path)
    src = str(path)
    known = None if item_ids is None else set(item_ids)
    first_seen: dict[str, None] = {}
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read card-sort file: {exc.strerror}", src) from exc
    assignments: dict[str, dict[str, str]] = {}
    where: dict[tuple[str, str], int] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["participant", "item", "group"]:
            raise InputError("expected header 'participant,item,group'", src, 1)
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"expected 3 fields, got {len(row)}", src, lineno)
            pid, item, group = (c.strip() for c in row)
            if not pid or not group:
                raise InputError("participant and group must be non-empty", src, lineno)
            if not item:
                raise InputError("item must be non-empty", src, lineno)
            if known is not None and item not in known:
                raise UnknownItem(f"item {item!r} is not in the corpus", src, lineno)
            first_seen.setdefault(item, None)
            if (pid, item) in where:
                raise DuplicateAssignment(
                    f"participant {pid!r} assigned item {item!r} twice (first on line {where[pid, item]})", src, lineno
                )
            where[pid, item] = lineno
            assignments.setdefault(pid, {})[item] = group
    if not assignments:
        raise InputError("card-sort file has no assignments", src)
    if item_ids is None:
        item_ids = tuple(first_seen)
    for pid, assign in assignments.items():
        missing = [i for i in item_ids if i not in assign]
        if missing:
            raise MissingAssignment(f"participant {pid!r} has no group for item {missing[0]!r}", src)
    parts = tuple(Partition(pid, assign) for pid, assign in assignments.items())
    return CardSortStudy(tuple(item_ids), parts)


def membership_table(study: CardSortStudy) -> BinaryMembershipTable:
    rows = []
    blocks = []
    index = {item: j for j, item in enumerate(study.item_ids)}
    for p in study.participants:
        labels = _sorted_labels(set(p.assignment.values()))
        slot = {g: r for r, g in enumerate(labels)}
        block = np.zeros((len(labels), len(index)), dtype=np.int8)
        for item, g in p.assignment.items():
            block[slot[g], index[item]] = 1
        blocks.append(block)
        rows.extend((p.participant_id, g) for g in labels)
    return BinaryMembershipTable(tuple(rows), study.item_ids, np.vstack(blocks))


def participant_similarity(study: CardSortStudy) -> SimilarityMatrix:
    """Spearman correlation between every pair of item membership columns."""
    table = membership_table(study)
    values = table.values.astype(np.float64)
    if values.shape[0] < 2:
        raise DegenerateColumn("need at least two participant groups to correlate items")
    ranks = rankdata(values, axis=0)
    centred = ranks - ranks.mean(axis=0)
    ss = (centred * centred).sum(axis=0)
    flat = np.flatnonzero(ss == 0.0)
    if flat.size:
        item = study.item_ids[int(flat[0])]
        raise DegenerateColumn(f"item {item!r} has a constant membership column", item_id=item)
    unit = centred / np.sqrt(ss)
    corr = unit.T @ unit
    corr = 0.5 * (corr + corr.T)
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return SimilarityMatrix(study.item_ids, corr)


def wide_to_long(rows: Sequence[Sequence[str]], item_ids: Sequence[str]) -> list[tuple[str, str, str]]:
    """Convert Table-style 0/1 rows ``participant,group,<one cell per item>``
    into long-format ``(participant, item, group)`` triples."""
    out = []
    for n, row in enumerate(rows, 1):
        if len(row) != 2 + len(item_ids):
            raise InputError(f"wide row {n} has {len(row)} cells, expected {2 + len(item_ids)}")
        pid, group, cells = row[0].strip(), row[1].strip(), row[2:]
        for item, cell in zip(item_ids, cells):
            cell = cell.strip()
            if cell not in ("0", "1", ""):
                raise InputError(f"wide row {n}: membership cell must be 0 or 1, got {cell!r}")
            if cell == "1":
                out.append((pid, item, group))
    return out
