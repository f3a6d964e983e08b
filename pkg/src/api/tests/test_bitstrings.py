from itertools import product

import pytest

from services.bitstrings import (
    adversarial_forks,
    all_bitstrings,
    bit_at,
    compatible,
    compatible_by_search,
    consistent,
    encrypt_forks,
    exp2_tower,
)
from services.errors import DomainExplosion, DomainMismatch, PreconditionViolated


def chains(k: int, length: int):
    """Every w = <w_0 (k bits), w_1..w_length (single bits)>."""
    for head in all_bitstrings(k):
        for tail in product("01", repeat=length):
            yield [head, *tail]


def prefixes(k: int, levels: int):
    """Every fork prefix u_0..u_{levels-1}."""
    return product(*(list(all_bitstrings(exp2_tower(level, k))) for level in range(levels)))


class TestIndexing:
    """Binary indexing and tower widths"""

    def test_bit_at_reads_index_as_binary(self):
        assert bit_at("0100", "01") == "1"
        assert bit_at("0100", "00") == "0"
        assert bit_at("01", "") == "0"

    def test_bit_at_out_of_range(self):
        with pytest.raises(DomainMismatch):
            bit_at("01", "11")

    def test_tower(self):
        assert exp2_tower(0, 3) == 3
        assert exp2_tower(1, 1) == 2
        assert exp2_tower(2, 1) == 4
        assert exp2_tower(2, 2) == 16

    def test_tower_cap(self):
        assert exp2_tower(2, 2, cap=16) == 16
        with pytest.raises(DomainExplosion):
            exp2_tower(3, 2, cap=24)
        # stops before computing 2 ** 65536
        with pytest.raises(DomainExplosion):
            exp2_tower(5, 2, cap=24)

    def test_enumeration_guard(self):
        assert list(all_bitstrings(2)) == ["00", "01", "10", "11"]
        with pytest.raises(DomainExplosion):
            list(all_bitstrings(64))


class TestConsistency:
    """Exact chains and the existence-of-chain relation"""

    def test_consistent_chain(self):
        # u_1 = "01": index "1" -> "1"
        assert consistent(["1", "1"], ["1", "01"])
        assert not consistent(["1", "0"], ["1", "01"])
        assert not consistent(["0", "1"], ["1", "01"])

    def test_chain_shapes_are_checked(self):
        with pytest.raises(DomainMismatch):
            consistent(["1", "11"], ["1", "01"])
        with pytest.raises(DomainMismatch):
            consistent(["1", "1"], ["1", "011"])
        with pytest.raises(DomainMismatch):
            consistent(["1"], ["1", "01"])

    def test_compatible_needs_only_the_last_fork(self):
        # either u_0 value works as long as the right entry of u_1 carries w_1
        assert compatible(["0", "1"], "01") is False
        assert compatible(["1", "1"], "01") is True
        assert compatible(["0", "0"], "01") is True

    @pytest.mark.parametrize("k,length", [(1, 1), (1, 2), (2, 1)])
    def test_compatible_agrees_with_search(self, k, length):
        for w in chains(k, length):
            for u_last in all_bitstrings(exp2_tower(length, k)):
                assert compatible(w, u_last) == compatible_by_search(w, u_last)

    def test_consistent_implies_compatible(self):
        for w in chains(1, 2):
            for prefix in prefixes(1, 3):
                u = list(prefix)
                if consistent(w, u):
                    assert compatible(w, u[-1])


class TestEncryption:
    """Fork choices that keep one chain and rule out another"""

    def test_encrypt_forks_postconditions(self):
        for length in (1, 2):
            for w in chains(1, length):
                for wbar in chains(1, length):
                    if w[0] == wbar[0]:
                        continue
                    u = encrypt_forks(w, wbar)
                    assert consistent(w, u)
                    assert not compatible(wbar, u[-1])

    def test_encrypt_forks_requires_first_difference(self):
        with pytest.raises(PreconditionViolated):
            encrypt_forks(["0", "1"], ["0", "0"])

    def test_worked_example(self):
        # w and wbar agree on w_0 = 0 and differ at w_1
        assert adversarial_forks(["0", "1"], ["0", "0"], ["0"]) == ["11"]

    @pytest.mark.parametrize("length", [1, 2, 3])
    def test_adversarial_forks_postconditions(self, length):
        """Exhaustive over k = 1 chains and every valid prefix"""
        for w in chains(1, length):
            for wbar in chains(1, length):
                if w == wbar:
                    continue
                split = next(i for i, (a, b) in enumerate(zip(w, wbar)) if a != b)
                for prefix in prefixes(1, split):
                    prefix = list(prefix)
                    if split and prefix[0] != w[0]:
                        continue
                    if any(bit_at(prefix[j], prefix[j - 1]) != w[j] for j in range(1, split)):
                        continue
                    u = prefix + adversarial_forks(w, wbar, prefix)
                    assert len(u) == len(w)
                    assert consistent(w, u)
                    assert not compatible(wbar, u[-1])

    def test_identical_chains_rejected(self):
        with pytest.raises(PreconditionViolated):
            adversarial_forks(["0", "1"], ["0", "1"], ["0"])

    def test_prefix_length_checked(self):
        with pytest.raises(PreconditionViolated):
            adversarial_forks(["0", "1"], ["0", "0"], [])

    def test_prefix_must_carry_w(self):
        with pytest.raises(PreconditionViolated):
            adversarial_forks(["0", "1", "1"], ["0", "1", "0"], ["0", "00"])
