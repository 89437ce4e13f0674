"""NCBI taxonomy dump parsing and rank-partitioned concept dictionaries.

The dump files use a 3-byte field delimiter TAB-pipe-TAB and terminate
every row with TAB-pipe. ``names.dmp`` carries one name variant per row;
``nodes.dmp`` carries the rank and parent of every taxon. Merging the two
produces one retrievable concept per taxon: the normalized, order
preserving join of all of its name variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ParseError, TaxonormError
from .normalize import tokenize
from .textio import iter_lines

FIELD_SEP = "\t|\t"
ROW_TERMINATOR = "\t|"

# The six ranks the dictionaries are partitioned into by default.
DEFAULT_RANKS = ("strain", "species", "genus", "family", "order", "phylum")


@dataclass(frozen=True)
class NameVariant:
    """One row of names.dmp: a surface form plus its name class."""

    text: str
    name_class: str
    unique_name: str | None = None


@dataclass
class TaxonRecord:
    """A taxonomy node with all of its name variants merged in."""

    tax_id: int
    parent_id: int
    rank: str
    names: list[NameVariant]


@dataclass(frozen=True)
class ConceptEntry:
    """A retrievable dictionary document: taxon id plus its variant text."""

    tax_id: int
    concept_text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, tax_id: int, concept_text: str) -> "ConceptEntry":
        return cls(tax_id, concept_text, tuple(tokenize(concept_text)))


@dataclass
class RankDictionary:
    """All concepts of one rank, keyed by taxon id."""

    rank: str
    entries: dict[int, ConceptEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)


def _split_row(line: str, lineno: int) -> list[str]:
    """Split one dmp row into fields, validating the row terminator."""
    row = line.rstrip("\n")
    if not row.endswith(ROW_TERMINATOR):
        raise ParseError(f"row does not end with TAB-pipe: {row!r}", lineno)
    return row[: -len(ROW_TERMINATOR)].split(FIELD_SEP)


def _parse_tax_id(text: str, lineno: int) -> int:
    try:
        tax_id = int(text)
    except ValueError:
        raise ParseError(f"non-integer tax_id {text!r}", lineno) from None
    if tax_id < 1:
        raise ParseError(f"tax_id must be >= 1, got {tax_id}", lineno)
    return tax_id


def parse_names(stream) -> list[tuple[int, NameVariant]]:
    """Parse names.dmp rows into (tax_id, NameVariant), preserving file order."""
    out: list[tuple[int, NameVariant]] = []
    for lineno, line in enumerate(iter_lines(stream), start=1):
        if not line.strip():
            continue
        fields = _split_row(line, lineno)
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields in names row, got {len(fields)}", lineno)
        tax_id = _parse_tax_id(fields[0], lineno)
        if not fields[1]:
            raise ParseError("empty name_txt field", lineno)
        variant = NameVariant(
            text=fields[1],
            name_class=fields[3],
            unique_name=fields[2] or None,
        )
        out.append((tax_id, variant))
    return out


def parse_nodes(stream) -> dict[int, tuple[int, str]]:
    """Parse nodes.dmp into tax_id -> (parent_id, rank); extra fields ignored."""
    out: dict[int, tuple[int, str]] = {}
    for lineno, line in enumerate(iter_lines(stream), start=1):
        if not line.strip():
            continue
        fields = _split_row(line, lineno)
        if len(fields) < 3:
            raise ParseError(f"expected >= 3 fields in nodes row, got {len(fields)}", lineno)
        tax_id = _parse_tax_id(fields[0], lineno)
        parent_id = _parse_tax_id(fields[1], lineno)
        if tax_id in out:
            raise ParseError(f"duplicate nodes row for tax_id {tax_id}", lineno)
        out[tax_id] = (parent_id, fields[2])
    return out


def merge_records(names: Sequence[tuple[int, NameVariant]],
                  nodes: Mapping[int, tuple[int, str]]) -> dict[int, TaxonRecord]:
    """Join name variants onto node rows; every named taxon must have a node."""
    orphans = sorted({tax_id for tax_id, _ in names if tax_id not in nodes})
    if orphans:
        raise TaxonormError(
            f"{len(orphans)} tax_ids in names have no nodes row: {orphans}"
        )
    records: dict[int, TaxonRecord] = {}
    for tax_id, variant in names:
        record = records.get(tax_id)
        if record is None:
            parent_id, rank = nodes[tax_id]
            record = records[tax_id] = TaxonRecord(tax_id, parent_id, rank, [])
        record.names.append(variant)
    return records


def build_dictionaries(names: Sequence[tuple[int, NameVariant]],
                       nodes: Mapping[int, tuple[int, str]],
                       normalizer: Callable[[str], str],
                       ranks: Iterable[str] = DEFAULT_RANKS,
                       name_classes: Iterable[str] | None = None,
                       ) -> dict[str, RankDictionary]:
    """Build one RankDictionary per configured rank.

    Each concept's text is the normalized join of its variants in file
    order; identical normalized variants are collapsed so repeated dump
    rows do not inflate term frequencies. ``name_classes`` restricts which
    variant classes contribute (default: all of them).
    """
    wanted_ranks = tuple(ranks)
    wanted_classes = set(name_classes) if name_classes is not None else None
    dictionaries = {rank: RankDictionary(rank) for rank in wanted_ranks}
    for tax_id, record in merge_records(names, nodes).items():
        if record.rank not in dictionaries:
            continue
        seen: set[str] = set()
        parts: list[str] = []
        for variant in record.names:
            if wanted_classes is not None and variant.name_class not in wanted_classes:
                continue
            text = normalizer(variant.text)
            if not text or text in seen:
                continue
            seen.add(text)
            parts.append(text)
        concept_text = " ".join(parts)
        dictionaries[record.rank].entries[tax_id] = ConceptEntry.from_text(tax_id, concept_text)
    return dictionaries


def write_dictionary(dictionary: RankDictionary, handle) -> None:
    """Write `tax_id<TAB>concept_text` lines, ascending tax_id, UTF-8."""
    for tax_id in sorted(dictionary.entries):
        handle.write(f"{tax_id}\t{dictionary.entries[tax_id].concept_text}\n")


def read_dictionary(handle, rank: str) -> RankDictionary:
    """Read a dictionary file written by :func:`write_dictionary`."""
    dictionary = RankDictionary(rank)
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.rstrip("\n")
        if not row:
            continue
        parts = row.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields in dictionary row, got {len(parts)}", lineno)
        tax_id = _parse_tax_id(parts[0], lineno)
        if tax_id in dictionary.entries:
            raise ParseError(f"duplicate dictionary entry for tax_id {tax_id}", lineno)
        dictionary.entries[tax_id] = ConceptEntry.from_text(tax_id, parts[1])
    return dictionary
