"""EBCL character-threshold lists: canonical data, membership, set algebra, validation.

The builtin lists are transcribed from the printed source tables and embedded as
data files (``data/a1.txt``, ``data/a1plus.txt``, ``data/a2.txt``). They are kept
verbatim, anomalies included: the printed A1 list holds 249 characters although
the A1 threshold is nominally 320, and the printed A1+ list omits two A1
characters. ``validate`` surfaces these anomalies instead of correcting them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional, Sequence

from .errors import SinogateError

# Accepted Han ranges: CJK Unified Ideographs plus Extension A. Extensions B+
# are excluded by default; no EBCL character lies outside the base block.
HAN_RANGES: tuple[tuple[int, int], ...] = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF))


def is_han(char: str, ranges: Sequence[tuple[int, int]] = HAN_RANGES) -> bool:
    """True iff ``char`` is a single scalar inside one of the accepted Han ranges."""
    if len(char) != 1:
        return False
    cp = ord(char)
    return any(lo <= cp <= hi for lo, hi in ranges)


class ThresholdLevel(Enum):
    """EBCL proficiency level, totally ordered A1 < A1plus < A2."""

    A1 = "A1"
    A1PLUS = "A1plus"
    A2 = "A2"

    @property
    def rank(self) -> int:
        return _LEVEL_ORDER.index(self)

    def __lt__(self, other: "ThresholdLevel") -> bool:
        if not isinstance(other, ThresholdLevel):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: "ThresholdLevel") -> bool:
        if not isinstance(other, ThresholdLevel):
            return NotImplemented
        return self.rank <= other.rank

    @classmethod
    def parse(cls, text: str) -> "ThresholdLevel":
        key = text.strip().replace("+", "plus").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise UnknownLevel(text)

    def __str__(self) -> str:
        return self.value


_LEVEL_ORDER = [ThresholdLevel.A1, ThresholdLevel.A1PLUS, ThresholdLevel.A2]

# Nominal threshold sizes; the source states no count for A1+.
CLAIMED_SIZES: dict[ThresholdLevel, Optional[int]] = {
    ThresholdLevel.A1: 320,
    ThresholdLevel.A1PLUS: None,
    ThresholdLevel.A2: 630,
}

_BUILTIN_FILES = {
    ThresholdLevel.A1: "a1.txt",
    ThresholdLevel.A1PLUS: "a1plus.txt",
    ThresholdLevel.A2: "a2.txt",
}


class UnknownLevel(SinogateError):
    pass


class EmptyList(SinogateError):
    """Raised when a custom source contains no Han characters."""


class DuplicateCharacter(SinogateError):
    def __init__(self, char: str):
        self.char = char
        super().__init__(f"duplicate character: {char}")


@dataclass(frozen=True)
class ThresholdList:
    """An ordered set of Han characters for one level, with a hashed index."""

    level: ThresholdLevel
    characters: tuple[str, ...]
    claimed_size: Optional[int] = None
    source_id: str = "custom"
    _index: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", frozenset(self.characters))

    def __contains__(self, char: str) -> bool:
        return char in self._index

    def __len__(self) -> int:
        return len(self.characters)

    def render(self) -> str:
        """Serialize back to the plain-text list format."""
        return "".join(self.characters)


def contains(tlist: ThresholdList, char: str) -> bool:
    """Membership query; constant-time via the index built at load."""
    return char in tlist


def load_builtin(level: ThresholdLevel) -> ThresholdList:
    """Load the embedded transcription of the printed list for ``level``."""
    name = _BUILTIN_FILES[level]
    text = resources.files("sinogate.data").joinpath(name).read_text("utf-8")
    chars = tuple(c for c in text if is_han(c))
    return ThresholdList(
        level=level,
        characters=chars,
        claimed_size=CLAIMED_SIZES[level],
        source_id=f"builtin:{name}",
    )


def load_cumulative(level: ThresholdLevel) -> ThresholdList:
    """Union of all builtin lists up to and including ``level``, in level order.

    The printed lists are not supersets of each other; this mode is the
    explicit, clearly-labeled way to get the pedagogically expected union.
    """
    seen: set[str] = set()
    chars: list[str] = []
    for lvl in _LEVEL_ORDER:
        if lvl > level:
            break
        for c in load_builtin(lvl).characters:
            if c not in seen:
                seen.add(c)
                chars.append(c)
    return ThresholdList(
        level=level,
        characters=tuple(chars),
        claimed_size=None,
        source_id=f"builtin-cumulative:{level.value}",
    )


def load_custom(source_text: str, level_tag: ThresholdLevel,
                source_id: str = "custom") -> ThresholdList:
    """Build a list from plain text; any non-Han character acts as a separator."""
    chars: list[str] = []
    seen: set[str] = set()
    for c in source_text:
        if not is_han(c):
            continue
        if c in seen:
            raise DuplicateCharacter(c)
        seen.add(c)
        chars.append(c)
    if not chars:
        raise EmptyList("no Han characters in source text")
    return ThresholdList(level=level_tag, characters=tuple(chars),
                         claimed_size=None, source_id=source_id)


def diff(a: ThresholdList, b: ThresholdList) -> tuple[str, ...]:
    """Characters in ``a`` and not in ``b``, in ``a``'s order."""
    return tuple(c for c in a.characters if c not in b)


@dataclass(frozen=True)
class ListReport:
    level: str
    actual_count: int
    claimed_size: Optional[int]
    duplicates: tuple[str, ...]


@dataclass(frozen=True)
class MonotonicityGap:
    pair: str
    chars: tuple[str, ...]  # sorted by codepoint


@dataclass(frozen=True)
class CharsetValidationReport:
    lists: tuple[ListReport, ...]
    gaps: tuple[MonotonicityGap, ...]

    def to_dict(self) -> dict:
        return {
            "lists": [
                {
                    "level": r.level,
                    "actual_count": r.actual_count,
                    "claimed_size": r.claimed_size,
                    "duplicates": list(r.duplicates),
                }
                for r in self.lists
            ],
            "gaps": [{"pair": g.pair, "chars": list(g.chars)} for g in self.gaps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)


def validate(lists: Iterable[ThresholdList]) -> CharsetValidationReport:
    """Report-only quality gate: counts vs claims, duplicates, level monotonicity.

    Never raises on anomalies; deterministic for fixed inputs.
    """
    lists = sorted(lists, key=lambda t: t.level.rank)
    reports = []
    for t in lists:
        seen: set[str] = set()
        dups: list[str] = []
        for c in t.characters:
            if c in seen and c not in dups:
                dups.append(c)
            seen.add(c)
        reports.append(ListReport(
            level=t.level.value,
            actual_count=len(t.characters),
            claimed_size=t.claimed_size,
            duplicates=tuple(sorted(dups)),
        ))
    by_level = {t.level: t for t in lists}
    gaps = []
    for lo, hi in zip(_LEVEL_ORDER, _LEVEL_ORDER[1:]):
        if lo in by_level and hi in by_level:
            missing = sorted(set(by_level[lo].characters) - set(by_level[hi].characters))
            gaps.append(MonotonicityGap(pair=f"{lo.value}->{hi.value}", chars=tuple(missing)))
    return CharsetValidationReport(lists=tuple(reports), gaps=tuple(gaps))
