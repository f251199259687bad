import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIG_P, FIG_T
from hamtest.strings import (
    Instance,
    QueryOracle,
    hamming_distance,
    mismatch_set,
    occ_exact,
    occ_hamming,
    occ_k_bruteforce,
    read_instance,
    write_instance,
)


def naive_hd(a, b):
    """Independent character-by-character oracle."""
    assert len(a) == len(b)
    return sum(1 for x, y in zip(a, b) if x != y)


def naive_occ(pattern, text):
    m = len(pattern)
    return [i for i in range(len(text) - m + 1) if list(text[i : i + m]) == list(pattern)]


symbols = st.integers(0, 3)


class TestHammingDistance:
    def test_worked_example_alignment_zero(self):
        assert hamming_distance(FIG_P, FIG_T[0:10]) == 4

    def test_identity(self):
        assert hamming_distance([5, 1, 2], [5, 1, 2]) == 0

    def test_random_pairs_match_naive_loop(self):
        import random

        rng = random.Random(42)
        for _ in range(20):
            a = [rng.randrange(4) for _ in range(50)]
            b = [rng.randrange(4) for _ in range(50)]
            assert hamming_distance(a, b) == naive_hd(a, b)

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            hamming_distance([1, 2], [1, 2, 3])


class TestMismatchSet:
    def test_single_mismatch_at_alignment_ten(self):
        assert mismatch_set(FIG_P, FIG_T[10:20]) == [2]

    def test_three_mismatches_at_alignment_nineteen(self):
        assert mismatch_set(FIG_P, FIG_T[19:29]) == [0, 2, 4]

    def test_identical_inputs_empty(self):
        assert mismatch_set([1, 2, 3], [1, 2, 3]) == []

    @given(st.lists(symbols, min_size=1, max_size=40), st.data())
    @settings(max_examples=60)
    def test_cardinality_equals_distance(self, a, data):
        b = data.draw(st.lists(symbols, min_size=len(a), max_size=len(a)))
        ms = mismatch_set(a, b)
        assert ms == sorted(set(ms))
        assert len(ms) == hamming_distance(a, b)


class TestOccExact:
    def test_ab_in_abab(self):
        assert occ_exact([0, 1], [0, 1, 0, 1]) == [0, 2]

    def test_self_occurrence(self):
        assert occ_exact([2, 0, 1], [2, 0, 1]) == [0]

    def test_planted_position_found(self):
        import random

        rng = random.Random(7)
        text = [rng.randrange(3) for _ in range(200)]
        t = 57
        pattern = text[t : t + 40]
        assert t in occ_exact(pattern, text)

    @given(st.lists(symbols, min_size=1, max_size=8), st.lists(symbols, min_size=1, max_size=60))
    @settings(max_examples=80)
    def test_matches_naive_scan(self, pattern, text):
        if len(pattern) > len(text):
            text = text + pattern
        assert occ_exact(pattern, text) == naive_occ(pattern, text)


class TestOccKBruteforce:
    def test_worked_example_threshold_two(self, fig2):
        occ = occ_k_bruteforce(fig2, 2)
        assert 10 in occ and 20 in occ

    def test_threshold_m_everything(self, fig2):
        assert occ_k_bruteforce(fig2, fig2.m) == list(range(fig2.delta))

    def test_against_per_window_loop(self, fig2):
        expect = [
            i
            for i in range(fig2.delta)
            if naive_hd(fig2.pattern, fig2.text[i : i + fig2.m]) <= 2
        ]
        assert occ_k_bruteforce(fig2, 2) == expect

    def test_monotone_in_threshold(self, fig2):
        prev = set()
        for thr in range(0, fig2.m + 1):
            cur = set(occ_k_bruteforce(fig2, thr))
            assert prev <= cur
            prev = cur

    def test_exact_equals_threshold_zero(self, fig2):
        assert occ_exact(fig2.pattern, fig2.text) == occ_k_bruteforce(fig2, 0)


class TestInstance:
    def test_validates_thresholds(self):
        with pytest.raises(ValueError):
            Instance(pattern=[0, 1], text=[0, 1, 0], sigma=2, k=2)  # k >= m
        with pytest.raises(ValueError):
            Instance(pattern=[0, 1, 1], text=[0, 1, 0], sigma=2, k=2, kprime=2)

    def test_rejects_out_of_range_symbols(self):
        with pytest.raises(ValueError):
            Instance(pattern=[0, 5], text=[0, 1, 0], sigma=2, k=1)

    def test_rejects_zero_k(self):
        with pytest.raises(ValueError):
            Instance(pattern=[0, 1], text=[0, 0, 0], sigma=2, k=0)

    def test_delta_value(self):
        inst = Instance(pattern=[0, 1], text=[0, 1, 0, 1], sigma=2, k=1)
        assert inst.delta == 3


class TestQueryOracle:
    def test_counts_per_read_by_default(self, fig2):
        oracle = QueryOracle(fig2)
        for _ in range(3):
            assert oracle.pattern(2) == fig2.pattern[2]
        oracle.text_many([0, 0, 5])
        assert oracle.pattern_queries == 3
        assert oracle.text_queries == 3

    def test_dedupe_counts_distinct(self, fig2):
        oracle = QueryOracle(fig2, dedupe=True)
        for _ in range(3):
            oracle.pattern(2)
        oracle.text_many([0, 0, 5])
        assert oracle.pattern_queries == 1
        assert oracle.text_queries == 2

    def test_log_records_reads(self, fig2):
        oracle = QueryOracle(fig2, log=True)
        oracle.pattern(1)
        oracle.text(4)
        assert oracle.query_log == [("P", 1), ("T", 4)]
        assert oracle.total_queries == len(oracle.query_log)

    def test_values_match_instance(self, fig2):
        oracle = QueryOracle(fig2)
        got = oracle.text_many(np.arange(fig2.n))
        assert np.array_equal(got, fig2.text)


class TestInstanceFile:
    def test_round_trip(self, fig2, tmp_path):
        path = tmp_path / "fig.inst"
        write_instance(path, fig2, header={"dist": "manual", "seed": 0})
        inst, header = read_instance(path)
        assert np.array_equal(inst.pattern, fig2.pattern)
        assert np.array_equal(inst.text, fig2.text)
        assert (inst.sigma, inst.k, inst.kprime) == (2, 2, 0)
        assert header["dist"] == "manual"

    def test_comment_lines_anywhere(self, tmp_path):
        path = tmp_path / "c.inst"
        path.write_text("# a=1\n3 2 2 1 0\n# between\n0 1\n1 0 1\n")
        inst, header = read_instance(path)
        assert inst.n == 3 and header["a"] == "1"

    def test_rejects_out_of_range_symbols(self, tmp_path):
        path = tmp_path / "bad.inst"
        path.write_text("3 2 2 1 0\n0 1\n1 0 7\n")
        with pytest.raises(ValueError):
            read_instance(path)

    def test_rejects_wrong_counts(self, tmp_path):
        path = tmp_path / "bad2.inst"
        path.write_text("3 2 2 1 0\n0 1 1\n1 0 1\n")
        with pytest.raises(ValueError):
            read_instance(path)
