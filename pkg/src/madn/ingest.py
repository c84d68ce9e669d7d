"""Mention-record ingestion, disregard scoring and per-day top-k selection.

A mention record is the aggregated tuple ``(date, origin, entity, count)``:
on ``date`` the news media of country ``origin`` mentioned ``entity`` with a
normalized article count ``count``. Everything downstream is built from the
per-country, per-day top-k selections computed here.
"""
from __future__ import annotations

import csv
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import IO, Iterable, Iterator, Mapping

import numpy as np

from madn.errors import ConfigError, ContractError, ParseError, ResolutionError

logger = logging.getLogger(__name__)

RECORD_HEADER = ("date", "origin", "entity", "count")
REGISTRY_HEADER = ("entity", "code", "label")
DEFAULT_EPSILON = 0.1
DEFAULT_K = 10

_CODE_RE = re.compile(r"^[A-Z]{2}$")


@dataclass(frozen=True, order=True)
class MentionRecord:
    date: date
    origin: str
    entity: str
    count: float

    def __post_init__(self):
        if not self.count >= 0:
            raise ValueError(f"count must be non-negative, got {self.count!r}")


@dataclass(frozen=True)
class CountryRegistry:
    """Static entity -> country code resolution table."""

    entries: Mapping[str, str]
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for code in self.entries.values():
            if not _CODE_RE.match(code):
                raise ParseError(f"invalid country code {code!r}")

    @property
    def codes(self) -> frozenset:
        return frozenset(self.entries.values())

    def resolve(self, entity: str) -> str | None:
        return self.entries.get(entity)


@dataclass(frozen=True)
class BuildConfig:
    k: int = DEFAULT_K
    window: tuple[date, date] | None = None
    epsilon: float = DEFAULT_EPSILON
    layer: str = "attention"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.layer not in ("attention", "disregard"):
            raise ConfigError(f"layer must be 'attention' or 'disregard', got {self.layer!r}")
        if self.window is not None and self.window[0] > self.window[1]:
            raise ConfigError(f"empty window {self.window[0]} .. {self.window[1]}")

    def in_window(self, day: date) -> bool:
        return self.window is None or self.window[0] <= day <= self.window[1]


def resolve_country(entity: str, registry: CountryRegistry) -> str | None:
    """Country code of a registered country entity, ``None`` for anything else."""
    return registry.resolve(entity)


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------

def _parse_line(fields: list[str], lineno: int) -> MentionRecord:
    if len(fields) != 4:
        raise ParseError(f"expected 4 fields, got {len(fields)}", line=lineno)
    raw_date, origin, entity, raw_count = (f.strip() for f in fields)
    try:
        day = date.fromisoformat(raw_date)
    except ValueError:
        raise ParseError(f"bad date {raw_date!r}", line=lineno) from None
    if not _CODE_RE.match(origin):
        raise ParseError(f"bad origin country code {origin!r}", line=lineno)
    if not entity:
        raise ParseError("empty entity id", line=lineno)
    try:
        count = float(raw_count)
    except ValueError:
        raise ParseError(f"bad count {raw_count!r}", line=lineno) from None
    if not np.isfinite(count) or count < 0:
        raise ParseError(f"count must be a finite non-negative number, got {raw_count!r}", line=lineno)
    return MentionRecord(day, origin, entity, count)


def parse_records(
    stream: IO[str] | Iterable[str],
    *,
    strict: bool = True,
    registry: CountryRegistry | None = None,
    errors: list[ParseError] | None = None,
) -> list[MentionRecord]:
    """Parse a record file into :class:`MentionRecord` objects, in file order.

    The header line ``date,origin,entity,count`` is optional. In strict mode the
    first malformed line raises :class:`ParseError`; otherwise malformed lines
    are logged (and appended to ``errors`` when given) and skipped. When a
    registry is supplied, an origin missing from it raises
    :class:`ResolutionError` in either mode.
    """
    records = []
    codes = registry.codes if registry is not None else None
    for lineno, fields in enumerate(csv.reader(stream), start=1):
        if not fields or (len(fields) == 1 and not fields[0].strip()):
            continue
        if lineno == 1 and tuple(f.strip() for f in fields) == RECORD_HEADER:
            continue
        try:
            rec = _parse_line(fields, lineno)
        except ParseError as exc:
            if strict:
                raise
            logger.warning("skipping malformed record: %s", exc)
            if errors is not None:
                errors.append(exc)
            continue
        if codes is not None and rec.origin not in codes:
            raise ResolutionError(f"line {lineno}: origin {rec.origin!r} not in registry")
        records.append(rec)
    return records


def serialize_records(records: Iterable[MentionRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow((r.date.isoformat(), r.origin, r.entity, repr(float(r.count))))
    return buf.getvalue()


def read_records(path, **kwargs) -> list[MentionRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_records(fh, **kwargs)


def parse_registry(stream: IO[str] | Iterable[str]) -> CountryRegistry:
    entries: dict[str, str] = {}
    labels: dict[str, str] = {}
    for lineno, fields in enumerate(csv.reader(stream), start=1):
        if not fields:
            continue
        if lineno == 1 and tuple(f.strip() for f in fields) == REGISTRY_HEADER:
            continue
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", line=lineno)
        entity, code, label = (f.strip() for f in fields)
        if not _CODE_RE.match(code):
            raise ParseError(f"bad country code {code!r}", line=lineno)
        if entity in entries and entries[entity] != code:
            raise ParseError(f"entity {entity!r} mapped to both {entries[entity]} and {code}", line=lineno)
        if code in labels and labels[code] != label:
            raise ParseError(f"code {code} has conflicting labels {labels[code]!r} / {label!r}", line=lineno)
        entries[entity] = code
        labels[code] = label
    return CountryRegistry(entries, labels)


def read_registry(path) -> CountryRegistry:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_registry(fh)


def serialize_registry(registry: CountryRegistry) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REGISTRY_HEADER)
    for entity, code in sorted(registry.entries.items(), key=lambda kv: (kv[1], kv[0])):
        writer.writerow((entity, code, registry.labels.get(code, code)))
    return buf.getvalue()


# --------------------------------------------------------------------------
# scoring and selection
# --------------------------------------------------------------------------

def disregard_score(day_counts: Mapping[str, float], target: str, epsilon: float = DEFAULT_EPSILON) -> float:
    """Global mention total of one entity on one day over ``target``'s own count plus ``epsilon``.

    Countries absent from ``day_counts`` mentioned the entity zero times.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    total = sum(day_counts.values())
    return total / (day_counts.get(target, 0.0) + epsilon)


def top_k_attention(records: Iterable[MentionRecord], k: int) -> list[MentionRecord]:
    """The ``k`` highest-count records of one country on one day.

    Ties on count are broken by entity id so the result is independent of
    input order.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    records = list(records)
    if len({(r.origin, r.date) for r in records}) > 1:
        raise ContractError("top_k_attention needs records of a single origin and date")
    return sorted(records, key=lambda r: (-r.count, r.entity))[:k]


def top_k_disregard(
    day_entity_counts: Mapping[str, Mapping[str, float]],
    target: str,
    k: int,
    epsilon: float = DEFAULT_EPSILON,
) -> list[tuple[str, float]]:
    """The ``k`` entities ``target`` disregarded most on one day, with their scores."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    scored = [(e, disregard_score(counts, target, epsilon)) for e, counts in day_entity_counts.items()]
    scored.sort(key=lambda es: (-es[1], es[0]))
    return scored[:k]


def group_by_day(records: Iterable[MentionRecord], window: tuple[date, date] | None = None) -> dict[date, list[MentionRecord]]:
    days: dict[date, list[MentionRecord]] = defaultdict(list)
    for r in records:
        if window is None or window[0] <= r.date <= window[1]:
            days[r.date].append(r)
    return dict(sorted(days.items()))


def select_day(records: list[MentionRecord], config: BuildConfig) -> dict[str, list[str]]:
    """Per-origin selected entity ids for one day's records, for ``config.layer``.

    Every origin present that day appears as a key, even with nothing selected.
    """
    by_origin: dict[str, list[MentionRecord]] = defaultdict(list)
    for r in records:
        by_origin[r.origin].append(r)
    origins = sorted(by_origin)
    if config.layer == "attention":
        return {c: [r.entity for r in top_k_attention(by_origin[c], config.k)] for c in origins}

    entity_counts: dict[str, dict[str, float]] = defaultdict(dict)
    for r in records:
        # duplicate (origin, entity) rows on one day are summed
        entity_counts[r.entity][r.origin] = entity_counts[r.entity].get(r.origin, 0.0) + r.count
    return {c: [e for e, _ in top_k_disregard(entity_counts, c, config.k, config.epsilon)] for c in origins}


def select_all(records: Iterable[MentionRecord], config: BuildConfig) -> dict[date, dict[str, list[str]]]:
    """Run :func:`select_day` over every day inside the configured window."""
    return {day: select_day(recs, config) for day, recs in group_by_day(records, config.window).items()}


def selection_rows(records: Iterable[MentionRecord], config: BuildConfig) -> Iterator[tuple]:
    """Flat ``(date, origin, rank, entity, score)`` rows for export."""
    for day, recs in group_by_day(records, config.window).items():
        by_origin: dict[str, list[MentionRecord]] = defaultdict(list)
        for r in recs:
            by_origin[r.origin].append(r)
        if config.layer == "attention":
            for c in sorted(by_origin):
                for rank, r in enumerate(top_k_attention(by_origin[c], config.k), start=1):
                    yield day, c, rank, r.entity, r.count
        else:
            entity_counts: dict[str, dict[str, float]] = defaultdict(dict)
            for r in recs:
                entity_counts[r.entity][r.origin] = entity_counts[r.entity].get(r.origin, 0.0) + r.count
            for c in sorted(by_origin):
                for rank, (e, s) in enumerate(top_k_disregard(entity_counts, c, config.k, config.epsilon), start=1):
                    yield day, c, rank, e, s


# --------------------------------------------------------------------------
# synthetic corpora
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthCorpus:
    records: list[MentionRecord]
    registry: CountryRegistry
    blocks: dict[str, int]  # planted block label per country code


def _synth_codes(n: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if n > len(letters) ** 2:
        raise ConfigError(f"at most {len(letters) ** 2} synthetic countries")
    return [letters[i // 26] + letters[i % 26] for i in range(n)]


def synth_generate(
    block_sizes: Iterable[int],
    within: float,
    cross: float,
    days: int,
    entities_per_country: int = 2,
    seed: int = 0,
    start: date = date(2016, 3, 7),
) -> SynthCorpus:
    """Seeded corpus with planted block structure.

    Every day each country mentions itself, every same-block country with
    probability ``within`` and every other country with probability
    ``cross``. Country mentions carry counts in [0.2, 1.0); each country also
    has ``entities_per_country`` non-country topic entities that it mentions
    with probability 0.5 at lower counts, so they rarely crowd country
    mentions out of a top-10 selection.
    """
    block_sizes = [int(b) for b in block_sizes]
    if not (0.0 <= within <= 1.0 and 0.0 <= cross <= 1.0):
        raise ConfigError(f"rates must lie in [0, 1], got within={within}, cross={cross}")
    if days < 1 or any(b < 1 for b in block_sizes) or entities_per_country < 0:
        raise ConfigError("days, block sizes must be >= 1 and entities_per_country >= 0")

    codes = _synth_codes(sum(block_sizes))
    blocks = {}
    i = 0
    for label, size in enumerate(block_sizes):
        for _ in range(size):
            blocks[codes[i]] = label
            i += 1
    country_entity = {c: f"Q{1000 + j}" for j, c in enumerate(codes)}
    topics = {c: [f"Q{100000 + 100 * j + t}" for t in range(entities_per_country)] for j, c in enumerate(codes)}
    registry = CountryRegistry({e: c for c, e in country_entity.items()}, {c: f"Country {c}" for c in codes})

    rng = np.random.default_rng(seed)
    records = []
    for d in range(days):
        day = start + timedelta(days=d)
        for c in codes:
            draws = rng.random(len(codes))
            counts = rng.uniform(0.2, 1.0, len(codes))
            for j, other in enumerate(codes):
                rate = 1.0 if other == c else within if blocks[other] == blocks[c] else cross
                if draws[j] < rate:
                    records.append(MentionRecord(day, c, country_entity[other], round(float(counts[j]), 6)))
            if entities_per_country:
                tdraw = rng.random(entities_per_country)
                tcount = rng.uniform(0.0, 0.3, entities_per_country)
                for t, ent in enumerate(topics[c]):
                    if tdraw[t] < 0.5:
                        records.append(MentionRecord(day, c, ent, round(float(tcount[t]), 6)))
    records.sort()
    return SynthCorpus(records, registry, blocks)
