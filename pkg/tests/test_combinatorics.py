import pytest
from hypothesis import given, strategies as st

from timebinrng import (
    Combination,
    DomainError,
    NoEntropyError,
    binary_expansion,
    binomial,
    rank_combination,
    unrank_combination,
)

from oracles import all_combinations, pascal_triangle


class TestBinomial:
    def test_hand_countable(self):
        assert binomial(4, 2) == 6

    @pytest.mark.parametrize("n", [2, 5, 17, 64])
    def test_k_zero(self, n):
        assert binomial(n, 0) == 1

    def test_largest_value(self):
        # cross-checked against the Pascal-triangle oracle below
        assert binomial(64, 32) == 1832624140942590534

    def test_matches_pascal_triangle(self):
        rows = pascal_triangle(64)
        for n in range(65):
            for k in range(n + 1):
                assert binomial(n, k) == rows[n][k]

    @pytest.mark.parametrize("n,k", [(-1, 0), (4, 5), (65, 2), (4, -1)])
    def test_domain_errors(self, n, k):
        with pytest.raises(DomainError):
            binomial(n, k)


class TestRank:
    def test_latest_position_is_minimum(self):
        assert rank_combination(Combination(4, 1, (4,))) == 0

    def test_earliest_position_is_maximum(self):
        assert rank_combination(Combination(4, 1, (1,))) == binomial(4, 1) - 1

    def test_known_value(self):
        assert rank_combination(Combination(4, 2, (1, 3))) == 4

    def test_no_entropy_cases(self):
        with pytest.raises(NoEntropyError):
            rank_combination(Combination(4, 0, ()))
        with pytest.raises(NoEntropyError):
            rank_combination(Combination(4, 4, (1, 2, 3, 4)))

    def test_bijection_exhaustive(self):
        # every (n, k) with n <= 10: ranks hit {0, .., C(n,k)-1} exactly once
        for n in range(2, 11):
            for k in range(1, n):
                ranks = sorted(
                    rank_combination(Combination(n, k, pos))
                    for pos in all_combinations(n, k)
                )
                assert ranks == list(range(binomial(n, k)))

    def test_monotone_in_single_position_shift(self):
        # moving any one avalanche to an earlier window raises the rank
        for n in range(2, 9):
            for k in range(1, n):
                for pos in all_combinations(n, k):
                    base = rank_combination(Combination(n, k, pos))
                    for j in range(k):
                        earlier = pos[j] - 1
                        if earlier >= 1 and (j == 0 or earlier > pos[j - 1]):
                            moved = pos[:j] + (earlier,) + pos[j + 1 :]
                            assert rank_combination(Combination(n, k, moved)) > base


class TestUnrank:
    @pytest.mark.parametrize(
        "n,k,rank,expected",
        [(4, 2, 5, (1, 2)), (4, 1, 0, (4,)), (4, 2, 0, (3, 4))],
    )
    def test_known_values(self, n, k, rank, expected):
        assert unrank_combination(n, k, rank).positions == expected

    def test_round_trip_exhaustive(self):
        for n in range(2, 11):
            for k in range(1, n):
                for pos in all_combinations(n, k):
                    c = Combination(n, k, pos)
                    assert unrank_combination(n, k, rank_combination(c)) == c
                for f in range(binomial(n, k)):
                    assert rank_combination(unrank_combination(n, k, f)) == f

    @given(st.data())
    def test_round_trip_randomized_large_blocks(self, data):
        n = data.draw(st.integers(11, 64))
        k = data.draw(st.integers(1, n - 1))
        f = data.draw(st.integers(0, binomial(n, k) - 1))
        assert rank_combination(unrank_combination(n, k, f)) == f

    def test_rank_out_of_range(self):
        with pytest.raises(DomainError):
            unrank_combination(4, 2, 6)
        with pytest.raises(DomainError):
            unrank_combination(4, 2, -1)


class TestBinaryExpansion:
    def test_six_splits_into_four_plus_two(self):
        assert binary_expansion(4, 2).exponents == (2, 1)

    def test_power_of_two_is_single_subblock(self):
        assert binary_expansion(4, 1).exponents == (2,)

    def test_ten_splits_into_eight_plus_two(self):
        assert binary_expansion(5, 2).exponents == (3, 1)

    def test_exponents_recompose_binomial(self):
        for n in range(2, 65):
            for k in range(1, n):
                e = binary_expansion(n, k)
                assert e.exponents == tuple(sorted(e.exponents, reverse=True))
                assert sum(1 << i for i in e.exponents) == binomial(n, k)

    def test_rejects_k_edges(self):
        with pytest.raises(DomainError):
            binary_expansion(4, 0)
        with pytest.raises(DomainError):
            binary_expansion(4, 4)


class TestCombinationValidation:
    @pytest.mark.parametrize(
        "n,k,pos",
        [
            (1, 0, ()),  # n too small
            (65, 1, (1,)),  # n too large
            (4, 2, (3, 1)),  # not increasing
            (4, 2, (0, 1)),  # below range
            (4, 2, (3, 5)),  # above range
            (4, 2, (1,)),  # wrong arity
        ],
    )
    def test_invalid(self, n, k, pos):
        with pytest.raises(DomainError):
            Combination(n, k, pos)
