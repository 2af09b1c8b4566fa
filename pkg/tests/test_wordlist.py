import logging
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loanfinder.detectors import build_distance_records
from loanfinder.wordlist import (
    ConfigurationError, DuplicateIdError, WordForm, Wordlist, WordlistError,
    WordlistFormatError, WordlistRowError, aggregate_borrowing_rate, borrowing_rate,
    concept_view, load_wordlist, write_wordlist,
)

from conftest import write_tsv

ROWS = [
    ("1", "Spanish", "year", "año", "a ɲ o", 0),
    ("2", "Wichi", "year", "anio", "a n i o", 1),
    ("3", "Spanish", "age", "edad", "e d a d", 0),
    ("4", "Yaqui", "age", "x", "x a", 0),
    ("5", "Wichi", "adobe", "alulis", "a l u l i s", 1),
]


def test_load_basic(tsv):
    wl = load_wordlist(tsv(ROWS), "Spanish")
    assert len(wl) == 5
    assert wl.target_languages == ("Wichi", "Yaqui")
    assert wl.concepts == ("year", "age", "adobe")
    assert wl["2"].segments == ("a", "n", "i", "o")
    assert wl["2"].borrowed_from_donor is True
    assert wl["1"].form == "año"


def test_missing_column_is_named(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("ID\tLANGUAGE\tCONCEPT\tFORM\tBORROWED\n1\tSpanish\tx\tx\t0\n", encoding="utf-8")
    with pytest.raises(WordlistFormatError, match="TOKENS"):
        load_wordlist(path, "Spanish")


def test_empty_tokens_reports_row(tsv):
    rows = ROWS + [("6", "Yaqui", "year", "?", "", 0)]
    with pytest.raises(WordlistRowError) as err:
        load_wordlist(tsv(rows), "Spanish")
    assert err.value.row == 7


def test_duplicate_id(tsv):
    with pytest.raises(DuplicateIdError):
        load_wordlist(tsv(ROWS + [("1", "Yaqui", "year", "x", "x", 0)]), "Spanish")


def test_donor_absent(tsv):
    with pytest.raises(ConfigurationError):
        load_wordlist(tsv(ROWS), "Portuguese")


def test_borrowed_must_be_binary(tsv):
    rows = list(ROWS)
    rows[3] = ("4", "Yaqui", "age", "x", "x a", 2)
    with pytest.raises(WordlistRowError, match="row 5"):
        load_wordlist(tsv(rows), "Spanish")


def test_single_donor_row(tsv):
    wl = load_wordlist(tsv([("1", "Spanish", "year", "año", "a ɲ o", 0)]), "Spanish")
    assert wl.target_languages == ()
    assert wl.concepts == ("year",)


def test_donor_marked_borrowed_is_reset(tsv, caplog):
    rows = [("1", "Spanish", "year", "año", "a ɲ o", 1)] + ROWS[1:]
    with caplog.at_level(logging.WARNING):
        wl = load_wordlist(tsv(rows), "Spanish")
    assert wl["1"].borrowed_from_donor is False
    assert "resetting" in caplog.text


def test_extra_columns_warn(tmp_path, caplog):
    path = tmp_path / "x.tsv"
    path.write_text(
        "ID\tLANGUAGE\tCONCEPT\tFORM\tTOKENS\tBORROWED\tNOTE\r\n"
        "1\tSpanish\tyear\taño\ta ɲ o\t0\tok\r\n"
        "2\tWichi\tyear\tanio\ta n i o\t1\t\r\n",
        encoding="utf-8",
    )
    with caplog.at_level(logging.WARNING):
        wl = load_wordlist(path, "Spanish")
    assert "NOTE" in caplog.text
    assert wl["2"].segments == ("a", "n", "i", "o")


def test_wordform_invariants():
    with pytest.raises(WordlistError):
        WordForm("1", "A", "c", "x", ())
    with pytest.raises(WordlistError):
        WordForm("1", "A", "c", "x", ("a b",))
    with pytest.raises(WordlistError):
        Wordlist((WordForm("1", "Spanish", "c", "x", ("x",), True),), "Spanish")


def test_concept_view(tsv):
    wl = load_wordlist(tsv(ROWS), "Spanish")
    donors, recipients = concept_view(wl, "year")
    assert [f.form for f in donors] == ["año"]
    assert [f.form for f in recipients] == ["anio"]
    assert concept_view(wl, "adobe")[0] == []
    with pytest.raises(KeyError):
        concept_view(wl, "moon")


def test_concept_view_donor_only(tsv):
    wl = load_wordlist(tsv(ROWS + [("9", "Spanish", "moon", "luna", "l u n a", 0)]), "Spanish")
    donors, recipients = concept_view(wl, "moon")
    assert len(donors) == 1 and recipients == []


def test_borrowing_rate(tsv):
    wl = load_wordlist(tsv(ROWS), "Spanish")
    assert borrowing_rate(wl, "Wichi") == 1.0
    assert borrowing_rate(wl, "Yaqui") == 0.0
    with pytest.raises(ValueError):
        borrowing_rate(wl, "Spanish")
    assert aggregate_borrowing_rate(wl) == pytest.approx(2 / 3)


def test_partition_and_counts(synthetic_wl):
    wl = synthetic_wl
    for concept in wl.concepts:
        donors, recipients = concept_view(wl, concept)
        all_ids = {f.id for f in wl.forms if f.concept == concept}
        assert {f.id for f in donors}.isdisjoint(f.id for f in recipients)
        assert {f.id for f in donors} | {f.id for f in recipients} == all_ids
    assert sum(len(wl.forms_of(lang)) for lang in wl.languages) == len(wl)


def test_round_trip(synthetic_wl, tmp_path):
    path = tmp_path / "rt.tsv"
    write_wordlist(synthetic_wl, path)
    again = load_wordlist(path, synthetic_wl.donor_language)
    assert again == synthetic_wl
    assert again.target_languages == synthetic_wl.target_languages


segment = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")),
    min_size=1, max_size=3,
).filter(lambda s: not any(ch.isspace() for ch in s))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.sampled_from("xyz"),
                          st.lists(segment, min_size=1, max_size=4), st.booleans()),
                min_size=1, max_size=12),
       st.text(alphabet="abc\\ \"'", max_size=6))
def test_round_trip_property(tmp_path_factory, rows, form_text):
    forms = [WordForm("d0", "A", "x", "d", ("d",))]
    for n, (lang, concept, segs, borrowed) in enumerate(rows, start=1):
        forms.append(WordForm(f"f{n}", lang, concept, form_text, tuple(segs), borrowed and lang != "A"))
    wl = Wordlist(tuple(forms), "A")
    path = tmp_path_factory.mktemp("rt") / "wl.tsv"
    write_wordlist(wl, path)
    assert load_wordlist(path, "A") == wl


def dataset_shape_rows():
    """Rows reproducing the language/concept/lexeme counts of the source dataset."""
    shape = {
        "Imb. Quechua": (1155, 1156), "Mapudungun": (1040, 1242), "Otomi": (1252, 2241),
        "Q'eqchi'": (1211, 1773), "Wichí": (1128, 1219), "Yaqui": (1242, 1433),
        "Zin. Tzotzil": (955, 1266), "Spanish": (1308, 1770),
    }
    rng = random.Random(0)
    concepts = [f"concept{i}" for i in range(1308)]
    rows = []
    for language, (n_concepts, n_lexemes) in shape.items():
        chosen = concepts if n_concepts == 1308 else rng.sample(concepts, n_concepts)
        extra = [rng.choice(chosen) for _ in range(n_lexemes - n_concepts)]
        for concept in list(chosen) + extra:
            rows.append((f"w{len(rows)}", language, concept, "pa", "p a", 0))
    return rows


def test_dataset_shaped_file(tmp_path):
    wl = load_wordlist(write_tsv(tmp_path / "t1.tsv", dataset_shape_rows()), "Spanish")
    assert len(wl) == 12100
    assert len(wl.target_languages) == 7
    assert len(wl.concepts) == 1308
    assert len(wl.forms_of("Spanish")) == 1770
    assert len(build_distance_records(wl)) == 12100 - 1770
