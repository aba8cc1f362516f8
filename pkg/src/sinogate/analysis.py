"""Han extraction and the out-of-list deviation metric, with span annotations.

The denominator counts only Han-range scalars: pinyin, Latin glosses, digits and
punctuation are excluded. A text with no Han content yields an *undefined* ratio
(``out_ratio is None``), never 0 — an all-English reply is non-evidence, not
perfect compliance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional, Sequence

from .charset import HAN_RANGES, ThresholdList

CountingMode = Literal["occurrence", "type"]


class HanToken(NamedTuple):
    char: str
    index: int  # zero-based position in the source scalar sequence


@dataclass(frozen=True)
class ScanResult:
    tokens: tuple[HanToken, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # exclusive; always start + 1 (single scalar)
    char: str


@dataclass(frozen=True)
class DeviationReport:
    total_han: int
    out_count: int
    out_ratio: Optional[float]  # None when total_han == 0
    counting_mode: CountingMode
    out_occurrences: tuple[HanToken, ...]
    out_unique: tuple[str, ...]  # distinct offenders in first-occurrence order

    def to_dict(self) -> dict:
        return {
            "total_han": self.total_han,
            "out_count": self.out_count,
            "out_ratio": self.out_ratio,
            "counting_mode": self.counting_mode,
            "out_unique": list(self.out_unique),
            "out_occurrences": [{"char": t.char, "index": t.index}
                                for t in self.out_occurrences],
        }


@dataclass(frozen=True)
class AnnotatedText:
    source: str
    spans: tuple[Span, ...]


def extract_han(text: str,
                ranges: Sequence[tuple[int, int]] = HAN_RANGES) -> ScanResult:
    """Every scalar inside the accepted Han ranges, in order, with its index."""
    tokens = []
    for i, c in enumerate(text):
        cp = ord(c)
        if any(lo <= cp <= hi for lo, hi in ranges):
            tokens.append(HanToken(c, i))
    return ScanResult(tokens=tuple(tokens))


def deviation(text: str, tlist: ThresholdList,
              mode: CountingMode = "occurrence") -> DeviationReport:
    """Fraction of Han characters in ``text`` outside ``tlist``.

    ``occurrence`` mode counts every token; ``type`` mode counts distinct
    characters. Offender positions are always occurrence-level.
    """
    scan = extract_han(text)
    out_occ = tuple(t for t in scan.tokens if t.char not in tlist)
    out_unique: list[str] = []
    for t in out_occ:
        if t.char not in out_unique:
            out_unique.append(t.char)
    if mode == "occurrence":
        total = len(scan.tokens)
        out = len(out_occ)
    elif mode == "type":
        distinct = {t.char for t in scan.tokens}
        total = len(distinct)
        out = len(out_unique)
    else:
        raise ValueError(f"unknown counting mode: {mode!r}")
    ratio = out / total if total > 0 else None
    return DeviationReport(
        total_han=total,
        out_count=out,
        out_ratio=ratio,
        counting_mode=mode,
        out_occurrences=out_occ,
        out_unique=tuple(out_unique),
    )


def annotate(text: str, tlist: ThresholdList) -> AnnotatedText:
    """Single-scalar spans over exactly the out-of-list occurrences."""
    report = deviation(text, tlist, "occurrence")
    spans = tuple(Span(t.index, t.index + 1, t.char) for t in report.out_occurrences)
    return AnnotatedText(source=text, spans=spans)
