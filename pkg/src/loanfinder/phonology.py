"""Phonetic distances between segment strings.

Two measures are provided: the normalized edit distance over segment
tokens, and a sound-class alignment distance that maps segments to coarse
classes and scores a global alignment of the class strings.
"""
from __future__ import annotations

import csv
import logging
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

log = logging.getLogger(__name__)

CONSONANT = "consonant"
VOWEL = "vowel"


class DistanceError(ValueError):
    pass


def _require_nonempty(a, b):
    if not a or not b:
        raise DistanceError("distances are undefined for empty segment strings")


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance over tokens."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i]
        for j, y in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (x != y),
            ))
        previous = current
    return previous[-1]


def ned(a: Sequence[str], b: Sequence[str]) -> float:
    """Edit distance divided by the length of the longer string."""
    _require_nonempty(a, b)
    return edit_distance(a, b) / max(len(a), len(b))


@dataclass(frozen=True)
class AlignmentScoreScheme:
    match_same_class: float = 2.0
    match_same_kind: float = 1.0
    match_cross_kind: float = -1.0
    gap: float = -1.0
    initial_gap: float = -1.5

    def __post_init__(self):
        if not self.match_same_class > self.match_same_kind > 0 > self.match_cross_kind:
            raise ValueError("substitution scores must satisfy same-class > same-kind > 0 > cross-kind")
        if not self.initial_gap <= self.gap < 0:
            raise ValueError("gap scores must satisfy initial_gap <= gap < 0")


# Modifier letters (length, aspiration, labialization, ...) and combining
# diacritics are stripped before the base-segment fallback lookup.
def _strip_diacritics(segment: str) -> str:
    decomposed = unicodedata.normalize("NFD", segment)
    kept = [
        ch for ch in decomposed
        if not unicodedata.combining(ch) and unicodedata.category(ch) != "Lm"
    ]
    return unicodedata.normalize("NFC", "".join(kept))


@dataclass(frozen=True)
class SoundClassModel:
    """Segment-to-class table.

    Lookup tries the segment as written, then the segment with diacritics
    and modifier letters removed, then the first remaining character.
    Anything still unresolved maps to ``unknown_class``.
    """

    mapping: dict
    class_kind: dict
    unknown_class: str = "0"
    _resolved: dict = field(default_factory=dict, repr=False, compare=False)
    _warned: set = field(default_factory=set, repr=False, compare=False)

    def __post_init__(self):
        for segment, cls in self.mapping.items():
            if cls not in self.class_kind:
                raise ValueError(f"class {cls!r} of segment {segment!r} has no kind")
        for cls, kind in self.class_kind.items():
            if kind not in (CONSONANT, VOWEL):
                raise ValueError(f"class {cls!r} has invalid kind {kind!r}")
        if self.unknown_class in self.class_kind:
            raise ValueError("unknown_class collides with a mapped class")

    def lookup(self, segment: str) -> str:
        try:
            return self._resolved[segment]
        except KeyError:
            pass
        cls = self.mapping.get(segment)
        if cls is None:
            base = _strip_diacritics(segment)
            cls = self.mapping.get(base)
            if cls is None and base:
                cls = self.mapping.get(base[0])
        if cls is None:
            cls = self.unknown_class
            if segment not in self._warned:
                self._warned.add(segment)
                log.warning("segment %r has no sound class", segment)
        self._resolved[segment] = cls
        return cls

    def kind(self, cls: str) -> str | None:
        return self.class_kind.get(cls)


def load_sound_classes(path: str | Path | None = None) -> SoundClassModel:
    """Read a SEGMENT/CLASS/KIND table; the bundled table is used by default."""
    if path is None:
        text = resources.files("loanfinder.data").joinpath("sound_classes.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    rows = csv.DictReader(text.splitlines(), delimiter="\t", quoting=csv.QUOTE_NONE)
    missing = {"SEGMENT", "CLASS", "KIND"} - set(rows.fieldnames or ())
    if missing:
        raise ValueError(f"sound class table lacks columns {sorted(missing)}")
    mapping, class_kind = {}, {}
    for row in rows:
        segment, cls, kind = row["SEGMENT"].strip(), row["CLASS"].strip(), row["KIND"].strip()
        if not segment:
            continue
        if class_kind.setdefault(cls, kind) != kind:
            raise ValueError(f"class {cls!r} declared with two kinds")
        mapping[segment] = cls
    return SoundClassModel(mapping, class_kind)


_default_model: SoundClassModel | None = None


def default_model() -> SoundClassModel:
    global _default_model
    if _default_model is None:
        _default_model = load_sound_classes()
    return _default_model


def sound_classes(a: Sequence[str], model: SoundClassModel) -> tuple[str, ...]:
    return tuple(model.lookup(seg) for seg in a)


def _substitution(x: str, y: str, model: SoundClassModel, scheme: AlignmentScoreScheme) -> float:
    if x == model.unknown_class or y == model.unknown_class:
        return scheme.match_cross_kind
    if x == y:
        return scheme.match_same_class
    if model.kind(x) == model.kind(y):
        return scheme.match_same_kind
    return scheme.match_cross_kind


def alignment_score(
    a: Sequence[str], b: Sequence[str], model: SoundClassModel, scheme: AlignmentScoreScheme
) -> float:
    """Best global alignment score of two segment strings' class sequences.

    A gap opposite the first segment of either word costs ``initial_gap``,
    every other gap costs ``gap``.
    """
    ca, cb = sound_classes(a, model), sound_classes(b, model)

    def gap_cost(pos):
        return scheme.initial_gap if pos == 0 else scheme.gap

    row = [0.0]
    for j in range(len(cb)):
        row.append(row[-1] + gap_cost(j))
    for i, x in enumerate(ca):
        new = [row[0] + gap_cost(i)]
        for j, y in enumerate(cb):
            new.append(max(
                row[j] + _substitution(x, y, model, scheme),
                row[j + 1] + gap_cost(i),
                new[j] + gap_cost(j),
            ))
        row = new
    return row[-1]


def sca_distance(
    a: Sequence[str],
    b: Sequence[str],
    model: SoundClassModel | None = None,
    scheme: AlignmentScoreScheme | None = None,
) -> float:
    """Sound-class alignment distance, clamped to [0, 1]."""
    _require_nonempty(a, b)
    model = model or default_model()
    scheme = scheme or AlignmentScoreScheme()
    ab = alignment_score(a, b, model, scheme)
    norm = alignment_score(a, a, model, scheme) + alignment_score(b, b, model, scheme)
    if norm <= 0:
        # only reachable when unknown segments dominate both words
        return 0.0 if tuple(a) == tuple(b) else 1.0
    return min(1.0, max(0.0, 1.0 - 2.0 * ab / norm))
