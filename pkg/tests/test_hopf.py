"""Shuffle-algebra unit tests: classification, products, coproduct, log/exp."""
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iscat import hopf

# Frozen coefficient table for the transmission-log expansion, degrees 1-5.
# Degree 5 carries all fourteen connected words (Catalan(4) = 14); the
# self-symmetric XXXYYXXYYY term is validated against the independent
# series_log oracle below and by a direct set-partition count.
LOGT_TABLE = {
    "XY": 1,
    "XXYY": -2,
    "XXXYYY": 12,
    "XXYXYY": 4,
    "XXXXYYYY": -144,
    "XXXYXYYY": -72,
    "XXXYYXYY": -24,
    "XXYXXYYY": -24,
    "XXYXYXYY": -8,
    "XXXXXYYYYY": 2880,
    "XXXXYXYYYY": 1728,
    "XXXXYYXYYY": 864,
    "XXXYXXYYYY": 864,
    "XXXYXYXYYY": 432,
    "XXXXYYYXYY": 288,
    "XXYXXXYYYY": 288,
    "XXXYXYYXYY": 144,
    "XXYXXYXYYY": 144,
    "XXXYYXXYYY": 144,
    "XXXYYXYXYY": 48,
    "XXYXXYYXYY": 48,
    "XXYXYXXYYY": 48,
    "XXYXYXYXYY": 16,
}

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429, 1430]


class TestClassification:
    def test_examples(self):
        assert hopf.classify_word("XY") == hopf.ADMISSIBLE_CONNECTED
        assert hopf.classify_word("XYXY") == hopf.ADMISSIBLE_DISCONNECTED
        assert hopf.classify_word("XXYY") == hopf.ADMISSIBLE_CONNECTED
        assert hopf.classify_word("YX") == hopf.INADMISSIBLE
        assert hopf.classify_word("XXY") == hopf.INADMISSIBLE
        assert hopf.classify_word("") == hopf.ADMISSIBLE_DISCONNECTED

    def test_bad_alphabet_rejected(self):
        with pytest.raises(ValueError):
            hopf.classify_word("XZ")

    def test_word_dataclass(self):
        w = hopf.Word("XXYY")
        assert w.degree == 2
        with pytest.raises(ValueError):
            hopf.Word("AB")

    def test_admissible_word_counts_are_catalan(self):
        for d in range(7):
            words = hopf.admissible_words(d)
            assert len(words) == CATALAN[d]
            assert words == sorted(words)
            assert all(hopf.is_admissible(w) for w in words)

    def test_connected_word_counts(self):
        for d in range(1, 7):
            conn = [w for w in hopf.admissible_words(d) if hopf.is_connected(w)]
            assert len(conn) == CATALAN[d - 1]


class TestShuffle:
    def test_raw_shuffle_unrestricted(self):
        assert hopf.raw_shuffle("X", "XY") == {"XXY": 2, "XYX": 1}

    def test_shuffle_xy_xy(self):
        s = hopf.shuffle("XY", "XY")
        assert s.coeffs == {"XYXY": Fraction(2), "XXYY": Fraction(4)}

    def test_shuffle_with_empty_is_identity(self):
        s = hopf.shuffle("", "XXYY")
        assert s.coeffs == {"XXYY": Fraction(1)}

    def test_shuffle_rejects_inadmissible(self):
        with pytest.raises(ValueError):
            hopf.shuffle("YX", "XY")

    def test_shuffle_total_count(self):
        # interleavings of lengths m, n total C(m+n, m)
        counts = hopf.raw_shuffle("XXYY", "XYXY")
        assert sum(counts.values()) == math.comb(8, 4)

    def test_admissibility_closed_under_shuffle(self):
        for w in hopf.shuffle("XXYY", "XY").coeffs:
            assert hopf.is_admissible(w)


class TestCoproduct:
    def test_xyxy(self):
        cp = hopf.coproduct("XYXY")
        assert cp.coeffs == {
            ("", "XYXY"): Fraction(1),
            ("XY", "XY"): Fraction(1),
            ("XYXY", ""): Fraction(1),
        }

    def test_xxyy_only_trivial_splits(self):
        cp = hopf.coproduct("XXYY")
        assert cp.coeffs == {("", "XXYY"): Fraction(1), ("XXYY", ""): Fraction(1)}

    def test_rejects_inadmissible(self):
        with pytest.raises(ValueError):
            hopf.coproduct("XYY")


class TestSeriesLogExp:
    def test_log_one_plus_xy_degree2(self):
        t = hopf.WordSeries({"": 1, "XY": 1}, 2)
        lg = hopf.series_log(t)
        assert lg.coeffs == {
            "XY": Fraction(1),
            "XYXY": Fraction(-1),
            "XXYY": Fraction(-2),
        }

    def test_exp_xy_degree2_part(self):
        ex = hopf.series_exp(hopf.WordSeries({"XY": 1}, 2))
        assert ex.homogeneous_part(2).coeffs == {
            "XYXY": Fraction(1),
            "XXYY": Fraction(2),
        }

    def test_log_requires_unit_constant(self):
        with pytest.raises(ValueError):
            hopf.series_log(hopf.WordSeries({"": 2, "XY": 1}, 2))

    def test_exp_requires_zero_constant(self):
        with pytest.raises(ValueError):
            hopf.series_exp(hopf.WordSeries({"": 1}, 2))


class TestLogTExpansion:
    def test_frozen_table_degrees_1_to_5(self):
        exp = hopf.logT_expansion(5)
        assert {w: int(c) for w, c in exp.coeffs.items()} == LOGT_TABLE

    def test_block_partition_counts_worked_example(self):
        # XXXYYXXYYY: position clusters XXX YY XX YYY admit 72 partitions
        # into {XYXY, XYXY, XY}, 144 into {XYXY, XY, XY, XY}, 36 into five XY
        assert hopf._block_partition_counts("XXXYYXXYYY") == {3: 72, 4: 144, 5: 36}
        assert hopf.word_log_coefficient("XXXYYXXYYY") == 144

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            hopf.logT_expansion(0)
        with pytest.raises(ValueError):
            hopf.logT_expansion(hopf.LOGT_DEGREE_CAP + 1)

    def test_matches_series_log_oracle_degree6(self):
        m = 6
        assert hopf.logT_expansion(m) == hopf.series_log(hopf.t_series(m))

    def test_exp_log_round_trip(self):
        m = 6
        assert hopf.series_exp(hopf.logT_expansion(m)) == hopf.t_series(m)

    def test_all_words_connected_through_degree6(self):
        exp = hopf.logT_expansion(6)
        for w in exp.coeffs:
            assert hopf.classify_word(w) == hopf.ADMISSIBLE_CONNECTED


class TestPrimitivity:
    def test_degree3_part_is_primitive(self):
        exp = hopf.logT_expansion(3)
        assert hopf.check_primitive(exp.homogeneous_part(3), 3)

    def test_single_disconnected_word_not_primitive(self):
        p = hopf.WordSeries({"XYXY": 1}, 2)
        assert not hopf.check_primitive(p, 2)

    def test_rejects_inhomogeneous(self):
        with pytest.raises(ValueError):
            hopf.check_primitive(hopf.WordSeries({"XY": 1, "XXYY": 1}, 2), 2)


# ---------------------------------------------------------------------------
# Property-based tests
# ---------------------------------------------------------------------------

_ADMISSIBLE_POOL = [w for d in range(4) for w in hopf.admissible_words(d)]
admissible_word = st.sampled_from(_ADMISSIBLE_POOL)
small_admissible_word = st.sampled_from(
    [w for d in range(3) for w in hopf.admissible_words(d)]
)


@given(a=admissible_word, b=admissible_word)
@settings(max_examples=60, deadline=None)
def test_shuffle_commutative(a, b):
    assert hopf.shuffle(a, b) == hopf.shuffle(b, a)


@given(a=small_admissible_word, b=small_admissible_word, c=small_admissible_word)
@settings(max_examples=40, deadline=None)
def test_shuffle_associative(a, b, c):
    m = (len(a) + len(b) + len(c)) // 2
    ab = hopf.shuffle(a, b).with_cutoff(m)
    bc = hopf.shuffle(b, c).with_cutoff(m)
    lhs = ab.shuffle(hopf.WordSeries.single(c, 1, m))
    rhs = hopf.WordSeries.single(a, 1, m).shuffle(bc)
    assert lhs == rhs


@given(a=admissible_word, b=admissible_word)
@settings(max_examples=40, deadline=None)
def test_coproduct_is_algebra_morphism(a, b):
    m = (len(a) + len(b)) // 2
    lhs = hopf.coproduct_series(hopf.shuffle(a, b))
    rhs = hopf.coproduct(a).with_cutoff(m).shuffle(hopf.coproduct(b).with_cutoff(m))
    assert lhs == rhs


@given(m=st.integers(min_value=1, max_value=5))
@settings(max_examples=10, deadline=None)
def test_t_series_is_group_like(m):
    t = hopf.t_series(m)
    # group-like statement: coproduct(T) == T (x) T
    tt = hopf.TensorSeries(
        {(w1, w2): c1 * c2 for w1, c1 in t.coeffs.items() for w2, c2 in t.coeffs.items()},
        m,
    )
    assert hopf.coproduct_series(t) == tt


@given(
    entries=st.lists(
        st.tuples(
            st.sampled_from([w for w in _ADMISSIBLE_POOL if w]),
            st.integers(min_value=-3, max_value=3),
        ),
        max_size=4,
    )
)
@settings(max_examples=30, deadline=None)
def test_exp_log_round_trip_random_series(entries):
    coeffs = {"": Fraction(1)}
    for w, c in entries:
        coeffs[w] = coeffs.get(w, Fraction(0)) + c
    s = hopf.WordSeries(coeffs, 4)
    assert hopf.series_exp(hopf.series_log(s)) == s


@given(d=st.integers(min_value=1, max_value=6))
@settings(max_examples=6, deadline=None)
def test_logT_words_connected_and_primitive(d):
    exp = hopf.logT_expansion(d)
    part = exp.homogeneous_part(d)
    assert all(hopf.is_connected(w) for w in part.coeffs)
    assert hopf.check_primitive(part, d)
