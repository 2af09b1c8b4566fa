"""Convert a CLDF wordlist export into the flat TSV the engine reads.

The gold label is binary: a form counts as borrowed from the donor when

* its borrowing score reaches ``min_score`` (WOLD scores run from 0 for
  "no evidence for borrowing" to 1 for "clearly borrowed"; the default
  keeps only clearly borrowed forms), and
* when a source column is available, that column names the donor.

Textual WOLD codes such as ``"2. probably borrowed"`` are mapped onto the
same 0..1 scale. Morpheme-boundary tokens are dropped from the segments.
"""
from __future__ import annotations

import csv
import logging
import re
from pathlib import Path

from .wordlist import REQUIRED_COLUMNS

log = logging.getLogger(__name__)

CLEARLY_BORROWED = 1.0
WOLD_CODES = {1: 1.0, 2: 0.75, 3: 0.5, 4: 0.25, 5: 0.0}
SCORE_COLUMNS = ("Borrowed_score", "Borrowed_Score", "BorrowedScore", "Borrowed")
SOURCE_COLUMNS = ("Donor_Language", "donor_language", "Borrowed_Source", "Source_Language")
BOUNDARY_TOKENS = {"+", "_", "#", "."}


def _read_csv(path: Path) -> list[dict]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def parse_score(value: str | None) -> float:
    """Borrowing score on the 0..1 scale; blanks count as not borrowed."""
    if value is None:
        return 0.0
    value = value.strip()
    if not value:
        return 0.0
    try:
        return float(value)
    except ValueError:
        pass
    m = re.match(r"\s*(\d)\.", value)
    if m and int(m.group(1)) in WOLD_CODES:
        return WOLD_CODES[int(m.group(1))]
    if value.lower() in ("true", "yes"):
        return 1.0
    if value.lower() in ("false", "no"):
        return 0.0
    raise ValueError(f"unreadable borrowing score {value!r}")


def _pick(columns, candidates, explicit):
    if explicit:
        if explicit not in columns:
            raise ValueError(f"column {explicit!r} not found in forms table")
        return explicit
    for name in candidates:
        if name in columns:
            return name
    return None


def prepare_cldf(
    cldf_dir: str | Path,
    out: str | Path,
    donor: str,
    min_score: float = CLEARLY_BORROWED,
    score_column: str | None = None,
    source_column: str | None = None,
) -> int:
    """Write the canonical TSV and return the number of rows written."""
    cldf_dir = Path(cldf_dir)
    forms = _read_csv(cldf_dir / "forms.csv")
    if not forms:
        raise ValueError(f"{cldf_dir / 'forms.csv'} is empty")
    languages = {}
    if (cldf_dir / "languages.csv").exists():
        languages = {r["ID"]: r.get("Name") or r["ID"] for r in _read_csv(cldf_dir / "languages.csv")}
    concepts = {}
    if (cldf_dir / "parameters.csv").exists():
        concepts = {r["ID"]: r.get("Name") or r["ID"] for r in _read_csv(cldf_dir / "parameters.csv")}

    columns = set(forms[0])
    score_col = _pick(columns, SCORE_COLUMNS, score_column)
    source_col = _pick(columns, SOURCE_COLUMNS, source_column)
    if score_col is None:
        raise ValueError("forms table has no borrowing score column; pass score_column")

    written = 0
    with Path(out).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n",
                            quoting=csv.QUOTE_NONE, quotechar=None, escapechar="\\")
        writer.writerow(REQUIRED_COLUMNS)
        for row in forms:
            segments = [s for s in (row.get("Segments") or "").split() if s not in BOUNDARY_TOKENS]
            if not segments:
                log.warning("form %s has no segments; skipped", row["ID"])
                continue
            language = languages.get(row["Language_ID"], row["Language_ID"])
            borrowed = 0
            if language != donor and parse_score(row.get(score_col)) >= min_score:
                source = (row.get(source_col) or "") if source_col else donor
                borrowed = int(donor.lower() in source.lower())
            form = (row.get("Form") or row.get("Value") or "").replace("\t", " ")
            writer.writerow([
                row["ID"], language,
                concepts.get(row["Parameter_ID"], row["Parameter_ID"]),
                form, " ".join(segments), borrowed,
            ])
            written += 1
    return written
