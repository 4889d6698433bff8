import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsglyph.autoencoder import SymbolicRepresentation
from tsglyph.aps import PhaseRecord
from tsglyph.features import (ALPHABET, AlignmentError, FeatureDictionary, build_dictionary,
                              extract, extract_matrix, parse, render, subsequences, symbol,
                              write_feature_csv)


def rep(text, depth=1):
    return SymbolicRepresentation(np.array(parse(text)), PhaseRecord(), 0, depth)


def names(d):
    return d.names()


def test_alphabet_rendering():
    assert symbol(0) == "a" and symbol(25) == "z" and symbol(26) == "A" and symbol(31) == "F"
    assert len(ALPHABET) == 62
    assert render([0, 1, 31]) == "abF"
    assert parse("abF") == (0, 1, 31)
    assert parse(render([3, 70, 5])) == (3, 70, 5)


def test_dictionary_aba():
    d = build_dictionary([rep("aba")])
    assert sorted(names(d)) == sorted(["a", "b", "ab", "ba"]) and len(d) == 4


def test_dictionary_aa():
    assert sorted(names(build_dictionary([rep("aa")]))) == ["a", "aa"]


def test_dictionary_order_is_deterministic():
    a = build_dictionary([rep("cab"), rep("bca")])
    b = build_dictionary([rep("bca"), rep("cab")])
    assert a.entries == b.entries
    assert list(a.entries) == sorted(a.entries)


def test_dictionary_errors():
    with pytest.raises(ValueError):
        build_dictionary([])
    with pytest.raises(AlignmentError):
        build_dictionary([rep("ab", 1), rep("ab", 2)])


def test_extract_examples():
    d = build_dictionary([rep("aba")])
    order = names(d)
    bits = dict(zip(order, extract(rep("ab"), d).bits))
    assert bits == {"a": 1, "b": 1, "ab": 1, "ba": 0}
    assert not extract(rep("cc"), d).bits.any()
    # multiplicity does not matter: "abab" and "aba" hold the same set
    assert np.array_equal(extract(rep("abab"), d).bits, extract(rep("aba"), d).bits)
    assert extract(rep("abab"), d, counts=True).bits.tolist() != extract(rep("aba"), d, counts=True).bits.tolist()


def test_extract_depth_mismatch():
    d = build_dictionary([rep("ab", 2)])
    with pytest.raises(AlignmentError):
        extract(rep("ab", 3), d)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=20), st.randoms())
def test_presence_depends_only_on_the_set(seq, rnd):
    d = FeatureDictionary(sorted({(i,) for i in range(6)} | {(i, j) for i in range(6) for j in range(6)}), 1)
    r1 = SymbolicRepresentation(np.array(seq), PhaseRecord(), 0, 1)
    doubled = SymbolicRepresentation(np.array(seq + seq), PhaseRecord(), 0, 1)
    b1 = extract(r1, d).bits
    assert b1.sum() == len(subsequences(r1))
    # repeating the sequence can add only the junction bigram
    extra = {(seq[-1], seq[0])} - subsequences(r1)
    assert extract(doubled, d).bits.sum() == b1.sum() + len(extra)
    assert len(d) <= 6 + 36


def test_test_extraction_never_grows_dictionary():
    d = build_dictionary([rep("abc")])
    n = len(d)
    X = extract_matrix([rep("xyz"), rep("abz")], d)
    assert X.shape == (2, n) and len(d) == n


def test_counts_flag():
    d = build_dictionary([rep("aab")])
    c = dict(zip(names(d), extract(rep("aaab"), d, counts=True).bits))
    assert c["a"] == 3 and c["aa"] == 2


def test_round_trip_and_csv(tmp_path):
    d = build_dictionary([rep("abca"), rep("bb")])
    d2 = FeatureDictionary.from_dict(d.to_dict())
    assert d2.entries == d.entries and d2.depth == d.depth
    X = extract_matrix([rep("abca"), rep("bb")], d)
    p = tmp_path / "f.csv"
    write_feature_csv(p, X, d, [0, 1])
    with open(p) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][-len(d):] == names(d)
    assert len(rows) == 3
