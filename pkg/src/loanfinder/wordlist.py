"""Loading and indexing of multilingual wordlists.

A wordlist is a flat TSV export with one lexeme per row::

    ID  LANGUAGE  CONCEPT  FORM  TOKENS  BORROWED

``TOKENS`` holds whitespace-separated phonetic segments and ``BORROWED``
is 1 when the lexeme was borrowed from the designated donor language.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("ID", "LANGUAGE", "CONCEPT", "FORM", "TOKENS", "BORROWED")


class WordlistError(ValueError):
    """Base class for all wordlist problems."""


class WordlistFormatError(WordlistError):
    pass


class WordlistRowError(WordlistError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DuplicateIdError(WordlistError):
    pass


class ConfigurationError(WordlistError):
    pass


@dataclass(frozen=True)
class WordForm:
    id: str
    language: str
    concept: str
    form: str
    segments: tuple[str, ...]
    borrowed_from_donor: bool = False

    def __post_init__(self):
        if not self.segments:
            raise WordlistError(f"form {self.id!r} has no segments")
        for seg in self.segments:
            if not seg or any(ch.isspace() for ch in seg):
                raise WordlistError(f"form {self.id!r} has an invalid segment {seg!r}")


@dataclass(frozen=True)
class Wordlist:
    forms: tuple[WordForm, ...]
    donor_language: str
    target_languages: tuple[str, ...] = field(init=False)
    _by_concept: dict = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        languages: dict[str, None] = {}
        by_concept: dict[str, list[WordForm]] = {}
        by_id: dict[str, WordForm] = {}
        for form in self.forms:
            if form.id in by_id:
                raise DuplicateIdError(f"duplicate form id {form.id!r}")
            by_id[form.id] = form
            languages.setdefault(form.language)
            by_concept.setdefault(form.concept, []).append(form)
        if self.donor_language not in languages:
            raise ConfigurationError(
                f"donor language {self.donor_language!r} does not occur in the wordlist"
            )
        for form in self.forms:
            if form.language == self.donor_language and form.borrowed_from_donor:
                raise WordlistError(f"donor form {form.id!r} is labelled as borrowed")
        targets = tuple(lang for lang in languages if lang != self.donor_language)
        object.__setattr__(self, "target_languages", targets)
        object.__setattr__(
            self, "_by_concept", {c: tuple(fs) for c, fs in by_concept.items()}
        )
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self):
        return len(self.forms)

    def __getitem__(self, form_id: str) -> WordForm:
        return self._by_id[form_id]

    @property
    def concepts(self) -> tuple[str, ...]:
        """Concepts in order of first appearance."""
        return tuple(self._by_concept)

    @property
    def languages(self) -> tuple[str, ...]:
        return (self.donor_language,) + self.target_languages

    def forms_of(self, language: str) -> list[WordForm]:
        return [f for f in self.forms if f.language == language]

    def recipient_forms(self, concepts: Iterable[str] | None = None) -> list[WordForm]:
        """All non-donor forms, optionally restricted to a concept subset."""
        if concepts is None:
            return [f for f in self.forms if f.language != self.donor_language]
        out = []
        for concept in concepts:
            out.extend(concept_view(self, concept)[1])
        return out


def concept_view(wl: Wordlist, concept: str) -> tuple[list[WordForm], list[WordForm]]:
    """Split the forms of one concept into donor forms and recipient forms."""
    try:
        forms = wl._by_concept[concept]
    except KeyError:
        raise KeyError(f"unknown concept {concept!r}") from None
    donors = [f for f in forms if f.language == wl.donor_language]
    recipients = [f for f in forms if f.language != wl.donor_language]
    return donors, recipients


def borrowing_rate(wl: Wordlist, language: str) -> float:
    """Share of a target language's forms that are borrowed from the donor."""
    if language == wl.donor_language:
        raise ValueError("the borrowing rate of the donor language is undefined")
    forms = wl.forms_of(language)
    if not forms:
        raise KeyError(f"unknown language {language!r}")
    return sum(f.borrowed_from_donor for f in forms) / len(forms)


def aggregate_borrowing_rate(wl: Wordlist) -> float:
    """Share of borrowed forms over all target-language forms."""
    forms = wl.recipient_forms()
    if not forms:
        return 0.0
    return sum(f.borrowed_from_donor for f in forms) / len(forms)


def _parse_borrowed(value: str, row: int) -> bool:
    value = value.strip()
    if value == "1":
        return True
    if value == "0":
        return False
    raise WordlistRowError(row, f"BORROWED must be 0 or 1, got {value!r}")


def load_wordlist(path: str | Path, donor_language: str) -> Wordlist:
    """Read and validate a wordlist TSV.

    Row numbers in error messages count the header as row 1.
    Donor rows annotated as borrowed are logged and reset to not borrowed.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(
            handle, delimiter="\t", quoting=csv.QUOTE_NONE, quotechar=None, escapechar="\\"
        )
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise WordlistFormatError(f"{path}: empty file") from None
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise WordlistFormatError(f"{path}: missing column {column}")
        extra = [h for h in header if h not in REQUIRED_COLUMNS]
        if extra:
            log.warning("%s: ignoring extra columns %s", path, ", ".join(extra))
        idx = {name: header.index(name) for name in REQUIRED_COLUMNS}

        forms = []
        seen: set[str] = set()
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise WordlistRowError(
                    rownum, f"expected {len(header)} cells, found {len(row)}"
                )
            form_id = row[idx["ID"]].strip()
            if not form_id:
                raise WordlistRowError(rownum, "empty ID")
            if form_id in seen:
                raise DuplicateIdError(f"row {rownum}: duplicate ID {form_id!r}")
            seen.add(form_id)
            tokens = row[idx["TOKENS"]].strip()
            if not tokens:
                raise WordlistRowError(rownum, "empty TOKENS")
            segments = tuple(t for t in tokens.split(" ") if t)
            language = row[idx["LANGUAGE"]].strip()
            borrowed = _parse_borrowed(row[idx["BORROWED"]], rownum)
            if borrowed and language == donor_language:
                log.warning(
                    "row %d: donor form %s is annotated as borrowed; resetting",
                    rownum, form_id,
                )
                borrowed = False
            forms.append(
                WordForm(
                    id=form_id,
                    language=language,
                    concept=row[idx["CONCEPT"]].strip(),
                    form=row[idx["FORM"]],
                    segments=segments,
                    borrowed_from_donor=borrowed,
                )
            )
    return Wordlist(tuple(forms), donor_language)


def write_wordlist(wl: Wordlist, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(
            handle, delimiter="\t", lineterminator="\n",
            quoting=csv.QUOTE_NONE, quotechar=None, escapechar="\\",
        )
        writer.writerow(REQUIRED_COLUMNS)
        for f in wl.forms:
            writer.writerow(
                [f.id, f.language, f.concept, f.form, " ".join(f.segments),
                 int(f.borrowed_from_donor)]
            )
