"""Gadget, composition, slice, and structured-rectangle tests."""

import itertools
import random
from fractions import Fraction

import pytest

from liftsim.core import (
    BobCube,
    ComposedInstance,
    GadgetSpec,
    PartialAssignment,
    Rect,
    bit_at,
    bob_count_slice,
    bob_deficiency,
    bob_restrict,
    bob_split_bit,
    compose_eval,
    full_rect,
    gadget_eval,
    is_structured,
    iter_slice,
    slice_count,
    slice_enumerate,
)
from liftsim.entropy import Bits
from liftsim.errors import DomainError, ResourceError

D = Fraction(9, 10)


def G(n, m):
    return ComposedInstance(n, GadgetSpec.index(m))


# --- gadget evaluation ---

def test_gadget_eval_examples():
    g4 = GadgetSpec.index(4)
    assert gadget_eval(g4, 2, "0110") == 1
    assert gadget_eval(GadgetSpec.index(2), 1, "00") == 0
    assert gadget_eval(g4, 4, "0001") == 1


def test_gadget_eval_domain_errors():
    g = GadgetSpec.index(4)
    with pytest.raises(DomainError):
        gadget_eval(g, 5, "0000")
    with pytest.raises(DomainError):
        gadget_eval(g, 0, "0000")
    with pytest.raises(DomainError):
        gadget_eval(g, 1, "000")
    with pytest.raises(DomainError):
        GadgetSpec.index(3)
    with pytest.raises(DomainError):
        GadgetSpec.index(1)


def test_bit_order_is_left_to_right():
    # "0110" stored as 6: bit 1 is the leftmost character.
    assert [bit_at(6, p, 4) for p in (1, 2, 3, 4)] == [0, 1, 1, 0]


def test_table_gadget_roundtrip():
    ind = GadgetSpec.index(2)
    table = {(x, y): ind.eval(x, y) for x in (1, 2) for y in range(4)}
    g = GadgetSpec.from_table(2, 2, table)
    for x in (1, 2):
        for y in range(4):
            assert g.eval(x, y) == ind.eval(x, y)
    with pytest.raises(DomainError):
        GadgetSpec.from_table(2, 2, {(1, 0): 0})


# --- composition ---

def test_compose_eval_examples():
    assert compose_eval(G(2, 2), (1, 2), ("10", "01")) == (1, 1)
    assert compose_eval(G(1, 4), (3,), ("0000",)) == (0,)
    assert compose_eval(G(2, 2), (2, 1), ("01", "01")) == (1, 0)


def test_compose_eval_dimension_mismatch():
    with pytest.raises(DomainError):
        compose_eval(G(2, 2), (1,), ("10", "01"))
    with pytest.raises(DomainError):
        compose_eval(G(2, 2), (1, 1), ("10",))


# --- slices ---

def test_slice_enumerate_n1_m2():
    got = {(xs, ys) for xs, ys in slice_enumerate(G(1, 2), (0,))}
    want = {((1,), (0b00,)), ((1,), (0b01,)), ((2,), (0b00,)), ((2,), (0b10,))}
    assert got == want
    assert len(got) == 4  # m * 2^(m-1)
    assert len(slice_enumerate(G(1, 2), (1,))) == 4


def test_slice_counts_product():
    g = G(2, 2)
    assert slice_count(g, (0, 0)) == 16
    assert len(slice_enumerate(g, (0, 0))) == 16


def test_slices_partition_full_domain():
    for n, m in [(1, 2), (1, 4), (2, 2)]:
        g = G(n, m)
        seen = set()
        total = 0
        for z in itertools.product((0, 1), repeat=n):
            sl = slice_enumerate(g, z)
            assert len(sl) == slice_count(g, z)
            for pair in sl:
                assert pair not in seen
                seen.add(pair)
            total += len(sl)
        assert total == g.alice_size * g.bob_size


def test_slice_sizes_equal_across_z():
    g = G(2, 4)
    sizes = {slice_count(g, z) for z in itertools.product((0, 1), repeat=2)}
    assert sizes == {g.m ** 2 * 2 ** (2 * (g.m - 1))}


def test_slice_budget_error_names_requirement():
    g = G(1, 16)
    with pytest.raises(ResourceError) as err:
        slice_enumerate(g, (0,), pair_budget=100)
    assert err.value.required == 16 * 2 ** 15
    assert err.value.budget == 100


# --- structured rectangles ---

def test_structured_full_rect():
    g = G(2, 2)
    rect = full_rect(g)
    assert is_structured(rect, PartialAssignment.free_everywhere(2), D, g)


def test_structured_inconsistent_fixed_output():
    g = G(1, 2)
    rect = Rect({(1,)}, {(0b10,), (0b11,)})  # y_1 = 1 always
    assert not is_structured(rect, PartialAssignment((0,)), D, g)


def test_structured_consistent_fixed_output():
    g = G(1, 2)
    rect = Rect({(1,)}, {(0b00,), (0b01,)})  # y_1 = 0 always
    assert is_structured(rect, PartialAssignment((0,)), D, g)


def test_structured_requires_constant_on_fixed():
    g = G(1, 2)
    rect = Rect({(1,), (2,)}, {(0b00,)})
    assert not is_structured(rect, PartialAssignment((0,)), D, g)


def test_structured_reduces_to_density_when_all_free():
    from liftsim.entropy import SetVar, is_blockwise_dense

    g = G(1, 4)
    rng = random.Random(5)
    rho = PartialAssignment.free_everywhere(1)
    for _ in range(40):
        X = {(x,) for x in rng.sample(range(1, 5), rng.randint(1, 4))}
        rect = Rect(X, g.full_Y())
        sv = SetVar(X, (4,))
        assert is_structured(rect, rho, D, g) == is_blockwise_dense(sv, D)


def test_structured_empty_rect_rejected():
    g = G(1, 2)
    with pytest.raises(DomainError):
        is_structured(Rect(set(), {(0,)}), PartialAssignment((None,)), D, g)


# --- partial assignments ---

def test_partial_assignment_basics():
    rho = PartialAssignment.from_string("0*1")
    assert str(rho) == "0*1"
    assert rho.free == (2,)
    assert rho.fix == (1, 3)
    assert rho.consistent((0, 1, 1))
    assert not rho.consistent((1, 1, 1))
    rho2 = rho.assign((2,), (1,))
    assert str(rho2) == "011"
    with pytest.raises(DomainError):
        rho.assign((1,), (0,))


# --- cube Bob sets agree with explicit ones ---

def test_cube_matches_explicit_small():
    n, m = 2, 4
    g = G(n, m)
    cube = BobCube(n, m, ())
    assert cube.size == g.bob_size
    explicit = cube.materialize()
    assert explicit == frozenset(g.bob_domain())

    c1 = cube.restrict({(1, 2): 1})
    e1 = bob_restrict(explicit, {(1, 2): 1}, m)
    assert c1.materialize() == e1
    assert c1.size == len(e1)

    z0, o1 = bob_split_bit(c1, 2, 3, m)
    ez, eo = bob_split_bit(e1, 2, 3, m)
    assert z0.materialize() == ez and o1.materialize() == eo

    assert c1.restrict({(1, 2): 0}) is None
    assert bob_restrict(e1, {(1, 2): 0}, m) == frozenset()

    assert bob_deficiency(c1, g) == Bits(1)
    assert bob_deficiency(e1, g) == Bits(1)


def test_cube_slice_counts_match_explicit():
    n, m = 2, 4
    g = G(n, m)
    rng = random.Random(17)
    cube = BobCube(n, m, ())
    for _ in range(30):
        pins = {}
        for _ in range(rng.randint(0, 4)):
            pins[(rng.randint(1, n), rng.randint(1, m))] = rng.randint(0, 1)
        c = cube.restrict(pins)
        if c is None:
            continue
        e = c.materialize()
        xs = tuple(rng.randint(1, m) for _ in range(n))
        z = tuple(rng.randint(0, 1) for _ in range(n))
        assert bob_count_slice(c, xs, z, g) == bob_count_slice(e, xs, z, g)


def test_cube_contains_and_pinned():
    c = BobCube(1, 4, (((1, 2), 1),))
    assert c.contains((0b0100,))
    assert not c.contains((0b0000,))
    assert c.pinned(1, 2) == 1 and c.pinned(1, 3) is None


def test_structured_with_cube_y():
    g = G(1, 4)
    cube = BobCube(1, 4, (((1, 2), 0),))
    rect = Rect({(2,)}, cube)
    assert is_structured(rect, PartialAssignment((0,)), D, g)
    assert not is_structured(rect, PartialAssignment((1,)), D, g)
    # unpinned position: outputs vary, not consistent with a fixed rho
    rect2 = Rect({(3,)}, cube)
    assert not is_structured(rect2, PartialAssignment((0,)), D, g)
