"""
Canonical genre list, alias table and single-label resolution.

Only two merges are known for certain (Real Time Strategy -> Strategy and
Hack and slash/Beat'em up -> Fighting); every other raw genre must either be a canonical
name or be listed in a user alias table. Unknown genres are errors, never dropped.
"""
import hashlib
import logging
import re
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from errors import ClassificationError
from schemas.records import GameRecord

logger = logging.getLogger(__name__)

CANONICAL_GENRES: List[str] = [
    "Adventure",
    "Arcade",
    "Fighting",
    "Indie",
    "Music",
    "Pinball",
    "Platform",
    "Puzzle",
    "Quiz/Trivia",
    "Racing",
    "Role-Playing",
    "Shooter",
    "Simulator",
    "Sport",
    "Strategy",
]

DEFAULT_ALIAS_TABLE = Path(__file__).with_name("genre_aliases.tsv")

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def genre_key(raw: str) -> str:
    """Case and punctuation insensitive lookup key."""
    return _NON_ALNUM.sub("", raw.lower())


class GenreMap(BaseModel):
    canonical: List[str]
    aliases: Dict[str, int]

    class Config:
        frozen = True

    def __len__(self) -> int:
        return len(self.canonical)

    def name(self, index: int) -> str:
        return self.canonical[index]


def default_genre_map(extra_aliases: Optional[Dict[str, str]] = None) -> GenreMap:
    aliases = {genre_key(name): i for i, name in enumerate(CANONICAL_GENRES)}
    by_key = {genre_key(name): i for i, name in enumerate(CANONICAL_GENRES)}
    for raw, target in (extra_aliases or {}).items():
        index = by_key.get(genre_key(target))
        if index is None:
            raise ClassificationError(f"alias '{raw}' points at '{target}', which is not a canonical genre", [target])
        existing = aliases.get(genre_key(raw))
        if existing is not None and existing != index:
            raise ClassificationError(
                f"alias '{raw}' maps to both {CANONICAL_GENRES[existing]} and {CANONICAL_GENRES[index]}", [raw]
            )
        aliases[genre_key(raw)] = index
    return GenreMap(canonical=list(CANONICAL_GENRES), aliases=aliases)


def read_alias_table(path: Union[str, Path]) -> Dict[str, str]:
    """Two tab-separated columns per line: raw genre, canonical genre. '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Genre alias table not found: {path}")
    table: Dict[str, str] = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        columns = [c.strip() for c in line.split("\t")]
        if len(columns) != 2 or not all(columns):
            raise ClassificationError(f"{path}:{number}: expected 'raw<TAB>canonical', got {line!r}")
        table[columns[0]] = columns[1]
    return table


@lru_cache()
def load_alias_table(path: Optional[str] = None) -> GenreMap:
    """The shipped alias table, plus a user table when `path` is given."""
    aliases = read_alias_table(DEFAULT_ALIAS_TABLE)
    if path:
        aliases.update(read_alias_table(path))
    genre_map = default_genre_map(aliases)
    logger.info("Genre map ready: %d canonical genre(s), %d alias key(s).", len(genre_map), len(genre_map.aliases))
    return genre_map


def canonicalize_genre(raw: str, genre_map: GenreMap) -> int:
    index = genre_map.aliases.get(genre_key(raw))
    if index is None:
        raise ClassificationError(f"unknown genre '{raw}'; add it to a genre alias table", [raw])
    return index


def _record_salt(record_id: str) -> int:
    return int.from_bytes(hashlib.sha256(record_id.encode("utf-8")).digest()[:8], "little")


def resolve_single_genre(record: GameRecord, genre_map: GenreMap, seed: int) -> int:
    """
    Canonicalizes every raw genre, deduplicates, then picks one uniformly with a generator
    salted by the record id, so the choice does not depend on processing order.
    """
    unknown = [g for g in record.raw_genres if genre_map.aliases.get(genre_key(g)) is None]
    if unknown:
        raise ClassificationError(f"record '{record.id}' has unknown genre(s): {unknown}", unknown)
    candidates = sorted({canonicalize_genre(g, genre_map) for g in record.raw_genres})
    if len(candidates) == 1:
        return candidates[0]
    rng = np.random.default_rng([seed, _record_salt(record.id)])
    return candidates[int(rng.integers(len(candidates)))]


def resolve_all(records: Iterable[GameRecord], genre_map: GenreMap, seed: int) -> List[GameRecord]:
    """Resolves every record; all unknown genre strings are reported together."""
    resolved: List[GameRecord] = []
    unknown: List[str] = []
    for record in records:
        try:
            index = resolve_single_genre(record, genre_map, seed)
        except ClassificationError as e:
            unknown.extend(g for g in e.unknown if g not in unknown)
            continue
        resolved.append(record.model_copy(update={"resolved_genre": index}))
    if unknown:
        raise ClassificationError(f"{len(unknown)} unknown genre string(s): {unknown}", unknown)
    return resolved
