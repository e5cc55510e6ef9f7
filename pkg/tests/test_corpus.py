"""Corpus fixtures: loading, integrity, and golden-verdict stability."""

import warnings

import pytest

from rmikit.corpus import (ENTRY_NAMES, CorpusIntegrity, load_corpus,
                           load_entry, verify_corpus, verify_entry)


def test_all_entries_load():
    entries = load_corpus()
    assert [e.name for e in entries] == list(ENTRY_NAMES)
    for entry in entries:
        assert len(entry.program) > 0
        assert entry.expected


def test_unknown_entry_raises_integrity():
    with pytest.raises(CorpusIntegrity):
        load_entry("no_such_snippet")


def test_memcpy_pair_expectations():
    left = load_entry("memcpy_left")
    right = load_entry("memcpy_right")
    assert left.expected["sta"] == "fail"
    assert left.expected["relative_ni_seq_stl"] == "violated"
    assert right.expected["sta"] == "pass"
    assert right.expected["relative_ni_seq_stl"] == "holds"


def test_golden_verdicts_reproduce():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        matrix = verify_corpus()
    assert matrix["ok"], {
        name: {check: cell for check, cell in row.items() if not cell["ok"]}
        for name, row in matrix["entries"].items()
        if any(not cell["ok"] for cell in row.values())}


def test_verify_entry_shape():
    entry = load_entry("straightline_arith")
    results = verify_entry(entry)
    assert set(results) == set(entry.expected)
    assert all(cell["ok"] for cell in results.values())


def test_sta_report_is_cached():
    entry = load_entry("memcpy_left")
    assert entry.sta_report is entry.sta_report
