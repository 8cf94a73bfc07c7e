"""Entropy, density, and density-restoring partition tests."""

import itertools
import random
from fractions import Fraction

import pytest

from liftsim.entropy import (
    Bits,
    SetVar,
    as_fraction,
    cmp_pow,
    deficiency,
    density_restoring_partition,
    is_blockwise_dense,
    marginal_min_entropy,
    verify_partition_lemma,
)
from liftsim.errors import DomainError, ResourceError

D = Fraction(9, 10)


def singles(values, m):
    return SetVar({(v,) for v in values}, (m,))


# --- exact arithmetic helpers ---

def test_cmp_pow_basics():
    assert cmp_pow(Fraction(1, 2), 2, Fraction(-1)) == 0
    # 1/3 vs 4^(-9/10): tenth powers give 3^-10 vs 4^-9, i.e. 4^9 vs 3^10.
    assert cmp_pow(Fraction(1, 3), 4, Fraction(-9, 10)) == (
        1 if 4 ** 9 > 3 ** 10 else -1
    )
    assert cmp_pow(Fraction(1, 4), 4, Fraction(-9, 10)) < 0


def test_bits_canonical_equality():
    assert Bits(1, 1) == Bits(0, 2)
    assert Bits(0, Fraction(3, 2)) == Bits(-1, 3)
    assert hash(Bits(1, 1)) == hash(Bits(0, 2))
    assert Bits(0, 3) > Bits(Fraction(3, 2), 1)      # log2(3) > 1.5
    assert Bits(0, 3) < Bits(Fraction(8, 5), 1)      # log2(3) < 1.6
    assert float(Bits(1, 1)) == 1.0


def test_as_fraction_reads_floats_decimally():
    assert as_fraction(0.9) == Fraction(9, 10)
    assert as_fraction("0.9") == Fraction(9, 10)
    assert as_fraction(Fraction(1, 3)) == Fraction(1, 3)


# --- marginal min-entropy ---

def test_min_entropy_full_support_all_coords():
    v = SetVar(set(itertools.product((1, 2), repeat=3)), (2, 2, 2))
    assert marginal_min_entropy(v, (1, 2, 3)) == Bits(3)


def test_min_entropy_concentrated_coordinate():
    v = SetVar({(1, 1), (1, 2)}, (4, 4))
    assert marginal_min_entropy(v, (1,)) == Bits(0)
    assert marginal_min_entropy(v, (2,)) == Bits(1)
    assert marginal_min_entropy(v, ()) == Bits(0)


# --- deficiency ---

def test_deficiency_uniform_is_zero():
    v = SetVar(set(itertools.product((1, 2, 3, 4), repeat=2)), (4, 4))
    for I in [(1,), (2,), (1, 2), ()]:
        assert deficiency(v, I) == Bits(0)


def test_deficiency_bob_halved_set():
    # Y in {0,1}^4 with |Y| = 8: one bit of deficiency.
    v = SetVar({(y,) for y in range(8)}, (16,))
    assert deficiency(v, (1,)) == Bits(1)


def test_deficiency_fixed_coordinate():
    v = SetVar({(1, 1), (1, 2)}, (4, 4))
    assert deficiency(v, (1,)) == Bits(2)


def test_deficiency_monotone_under_marginalization():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 3)
        m = rng.choice([2, 4, 8])
        pop = list(itertools.product(range(1, m + 1), repeat=n))
        support = rng.sample(pop, rng.randint(1, min(24, len(pop))))
        v = SetVar(support, (m,) * n)
        full = tuple(range(1, n + 1))
        dJ = deficiency(v, full)
        for r in range(0, n + 1):
            for I in itertools.combinations(full, r):
                assert deficiency(v, I) <= dJ


# --- blockwise density ---

def test_density_full_domain():
    v = SetVar(set(itertools.product((1, 2, 3, 4), repeat=2)), (4, 4))
    assert is_blockwise_dense(v, D)


def test_density_fails_on_fixed_coordinate():
    v = SetVar({(1, 1), (1, 2)}, (4, 4))
    assert not is_blockwise_dense(v, D)


def test_essential_density_one_bit_slack():
    v = singles({1, 2, 3}, 4)
    # log2(3) >= 0.9*2 - 1 holds, but log2(3) >= 1.8 does not.
    assert is_blockwise_dense(v, D, essential=True)
    assert not is_blockwise_dense(v, D)


def test_density_subset_budget():
    v = SetVar(set(itertools.product((1, 2), repeat=5)), (2,) * 5)
    with pytest.raises(ResourceError):
        is_blockwise_dense(v, D, subset_budget=8)


# --- density-restoring partition ---

def reference_partition(v, delta):
    """Literal transcription of the procedure, with the documented tie-break,
    searching subsets exhaustively every round.  Kept separate from the
    implementation on purpose."""
    delta = as_fraction(delta)
    m = v.ambient[0] if v.ambient else 2
    remaining = set(v.support)
    out = []
    while remaining:
        size = len(remaining)
        counts = {}
        violating = []
        coords = v.coords
        for r in range(1, len(coords) + 1):
            for I in itertools.combinations(coords, r):
                pos = [coords.index(i) for i in I]
                c = {}
                for t in remaining:
                    key = tuple(t[p] for p in pos)
                    c[key] = c.get(key, 0) + 1
                counts[I] = c
                if cmp_pow(Fraction(max(c.values()), size), m, -delta * r) > 0:
                    violating.append(I)
        if not violating:
            out.append(((), (), frozenset(remaining)))
            break
        maximal = [I for I in violating
                   if not any(set(T) > set(I) for T in violating)]
        seeds = sorted(I[0] for I in violating if len(I) == 1)
        if seeds:
            cur = {seeds[0]}
            while True:
                ext = [j for j in coords if j not in cur and any(
                    set(T) >= cur | {j} for T in violating)]
                if not ext:
                    break
                cur.add(min(ext))
            I = tuple(sorted(cur))
        else:
            I = min(maximal, key=lambda T: tuple(sorted(T)))
        c = counts[I]
        best = max(c.values())
        alpha = min(k for k, cnt in c.items() if cnt == best)
        pos = [coords.index(i) for i in I]
        part = frozenset(t for t in remaining if tuple(t[p] for p in pos) == alpha)
        out.append((I, alpha, part))
        remaining -= part
    return out


def test_partition_already_dense_single_part():
    v = singles({1, 2, 3, 4}, 4)
    parts = density_restoring_partition(v, D)
    assert len(parts) == 1
    assert parts[0].coords == ()
    assert parts[0].label() == ""
    assert parts[0].support == v.support
    assert parts[0].delta_ratio == 1


def test_partition_three_points_in_four():
    v = singles({1, 2, 3}, 4)
    parts = density_restoring_partition(v, D)
    assert [(p.coords, p.alpha) for p in parts] == [((1,), (1,)), ((1,), (2,)), ((1,), (3,))]
    assert [p.delta_ratio for p in parts] == [Fraction(1), Fraction(3, 2), Fraction(3)]


def test_partition_square_matches_reference_oracle():
    v = SetVar({(1, 1), (1, 2), (2, 1), (2, 2)}, (4, 4))
    got = [(p.coords, p.alpha, p.support) for p in density_restoring_partition(v, D)]
    assert got == reference_partition(v, D)


def test_partition_matches_reference_oracle_randomly():
    rng = random.Random(20250809)
    for _ in range(150):
        n = rng.randint(1, 3)
        m = rng.choice([2, 4, 8])
        pop = list(itertools.product(range(1, m + 1), repeat=n))
        support = rng.sample(pop, rng.randint(1, min(30, len(pop))))
        v = SetVar(support, (m,) * n)
        got = [(p.coords, p.alpha, p.support) for p in density_restoring_partition(v, D)]
        assert got == reference_partition(v, D)


def test_partition_covers_disjointly():
    rng = random.Random(11)
    for _ in range(60):
        m = rng.choice([2, 4])
        n = rng.randint(1, 3)
        pop = list(itertools.product(range(1, m + 1), repeat=n))
        support = rng.sample(pop, rng.randint(1, len(pop)))
        v = SetVar(support, (m,) * n)
        parts = density_restoring_partition(v, D)
        union = set()
        total = 0
        for p in parts:
            assert p.support.isdisjoint(union)
            union |= p.support
            total += p.size
        assert union == set(v.support) and total == v.size
        # |X^(>=i)| = |X| * 2^(-delta_i) holds by definition of the stored ratio
        for p in parts:
            assert p.tail_size * p.delta_ratio == v.size


# --- partition lemma verification ---

def test_lemma_dense_case_vacuous():
    v = singles({1, 2, 3, 4}, 4)
    report = verify_partition_lemma(v, density_restoring_partition(v, D), D)
    assert report.ok and report.is_partition


def test_lemma_exact_rational_example():
    # X = {1,2,3} in [4], part 2 = {2}: 0 <= (2 - log 3) - 0.2 + log(3/2).
    v = singles({1, 2, 3}, 4)
    parts = density_restoring_partition(v, D)
    report = verify_partition_lemma(v, parts, D)
    assert report.ok
    assert report.parts[1].label == "x_{1}=(2)"
    assert report.parts[1].deficiency_ok


def test_lemma_random_battery():
    rng = random.Random(99)
    for _ in range(120):
        n = rng.randint(1, 3)
        m = 8
        pop = list(itertools.product(range(1, m + 1), repeat=n))
        support = rng.sample(pop, rng.randint(1, min(40, len(pop))))
        v = SetVar(support, (m,) * n)
        parts = density_restoring_partition(v, D)
        assert verify_partition_lemma(v, parts, D).ok


def test_lemma_rejects_fake_parts():
    v = singles({1, 2, 3}, 4)
    parts = density_restoring_partition(v, D)
    # Drop a part: no longer a partition.
    report = verify_partition_lemma(v, parts[:-1], D)
    assert not report.ok and not report.is_partition


def test_lemma_non_power_of_two_domain():
    rng = random.Random(3)
    for m in (3, 5, 6, 7):
        pop = list(itertools.product(range(1, m + 1), repeat=2))
        for _ in range(20):
            support = rng.sample(pop, rng.randint(1, min(20, len(pop))))
            v = SetVar(support, (m, m))
            parts = density_restoring_partition(v, D)
            assert verify_partition_lemma(v, parts, D).ok


def test_setvar_validation():
    with pytest.raises(DomainError):
        SetVar(set(), (4,))
    with pytest.raises(DomainError):
        SetVar({(1, 2)}, (4,))
