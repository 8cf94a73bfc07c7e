"""Gadgets, composed instances, rectangles, partial assignments, and slices.

Conventions used throughout: Alice's per-block value x is 1-based in [m];
Bob's per-block value y is an m-bit string, written left to right, so bit 1 is
the most significant bit of the integer that stores it.  The index gadget
returns bit x of y under that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import entropy
from .errors import DomainError, ResourceError

PAIR_BUDGET_DEFAULT = 2 ** 24  # cap on |X| * |Y| (and on slice sizes) for enumeration


class _BotType:
    """Failure outcome of a simulation; a single shared sentinel."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOT"

    def __str__(self):
        return "bot"


BOT = _BotType()


def asymptotic_gadget_size(n: int) -> int:
    """Block-domain size at which the theory's guarantees are stated: n**256.

    Informational only; it is astronomically beyond anything this harness can
    enumerate, which is why all closeness results here are measured trends.
    """
    return n ** 256


def bit_at(y: int, pos: int, m: int) -> int:
    """Bit `pos` (1-based, left to right) of the m-bit string stored in y."""
    if not 1 <= pos <= m:
        raise DomainError(f"bit position {pos} outside 1..{m}")
    return (y >> (m - pos)) & 1


def bits_str(y: int, m: int) -> str:
    return format(y, f"0{m}b")


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class GadgetSpec:
    """A two-party single-block gadget: the index gadget, or an explicit table."""

    kind: str               # "index" | "table"
    alice_size: int         # Alice's block domain is [alice_size]
    bob_bits: int           # Bob's block domain is {0,1}^bob_bits
    table: tuple = ()       # table kind only: ((x, y, bit), ...) total

    @classmethod
    def index(cls, m: int) -> "GadgetSpec":
        if m < 2 or not _is_power_of_two(m):
            raise DomainError(f"index gadget needs m a power of 2, m >= 2; got {m}")
        return cls("index", m, m)

    @classmethod
    def from_table(cls, alice_size: int, bob_bits: int, mapping) -> "GadgetSpec":
        if alice_size < 1 or bob_bits < 1:
            raise DomainError("table gadget needs nonempty domains")
        entries = []
        for x in range(1, alice_size + 1):
            for y in range(2 ** bob_bits):
                if (x, y) not in mapping:
                    raise DomainError(f"table gadget not total: missing ({x},{y})")
                b = mapping[(x, y)]
                if b not in (0, 1):
                    raise DomainError("table values must be bits")
                entries.append((x, y, b))
        return cls("table", alice_size, bob_bits, tuple(entries))

    @property
    def m(self) -> int:
        return self.alice_size

    def eval(self, x: int, y: int) -> int:
        if not 1 <= x <= self.alice_size:
            raise DomainError(f"x={x} outside [{self.alice_size}]")
        if not 0 <= y < 2 ** self.bob_bits:
            raise DomainError(f"y={y} is not a {self.bob_bits}-bit string")
        if self.kind == "index":
            return bit_at(y, x, self.bob_bits)
        for tx, ty, b in self.table:
            if tx == x and ty == y:
                return b
        raise DomainError("table gadget missing entry")  # unreachable: totality checked

    def preimage_count(self, b: int) -> dict:
        """Per-x count of y values with g(x, y) = b."""
        if self.kind == "index":
            return {x: 2 ** (self.bob_bits - 1) for x in range(1, self.alice_size + 1)}
        counts = {x: 0 for x in range(1, self.alice_size + 1)}
        for tx, ty, tb in self.table:
            if tb == b:
                counts[tx] += 1
        return counts


def gadget_eval(g: GadgetSpec, x: int, y) -> int:
    """g evaluated on one block; y may be an int or a '0101' string."""
    if isinstance(y, str):
        if len(y) != g.bob_bits or set(y) - {"0", "1"}:
            raise DomainError(f"y={y!r} is not a {g.bob_bits}-bit string")
        y = int(y, 2)
    return g.eval(x, y)


@dataclass(frozen=True)
class ComposedInstance:
    """G = g^n on [m]^n x ({0,1}^bob_bits)^n, evaluated blockwise."""

    n: int
    gadget: GadgetSpec

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("need n >= 1 blocks")

    @property
    def m(self) -> int:
        return self.gadget.alice_size

    @property
    def log_m(self) -> int:
        if not _is_power_of_two(self.m):
            raise DomainError("log m is integral only for power-of-two m")
        return self.m.bit_length() - 1

    @property
    def alice_size(self) -> int:
        return self.m ** self.n

    @property
    def bob_size(self) -> int:
        return 2 ** (self.gadget.bob_bits * self.n)

    def alice_domain(self):
        return itertools.product(range(1, self.m + 1), repeat=self.n)

    def bob_domain(self):
        return itertools.product(range(2 ** self.gadget.bob_bits), repeat=self.n)

    def full_X(self) -> frozenset:
        return frozenset(self.alice_domain())

    def full_Y(self, pair_budget: int = PAIR_BUDGET_DEFAULT):
        """Explicit Bob domain when it fits the budget, otherwise a full cube."""
        if self.bob_size <= pair_budget:
            return frozenset(self.bob_domain())
        return BobCube(self.n, self.gadget.bob_bits, ())

    def check_alice(self, xs):
        if len(xs) != self.n:
            raise DomainError(f"Alice input has {len(xs)} blocks, expected {self.n}")
        for x in xs:
            if not 1 <= x <= self.m:
                raise DomainError(f"Alice block value {x} outside [{self.m}]")

    def check_bob(self, ys):
        if len(ys) != self.n:
            raise DomainError(f"Bob input has {len(ys)} blocks, expected {self.n}")
        for y in ys:
            if not 0 <= y < 2 ** self.gadget.bob_bits:
                raise DomainError(f"Bob block value {y} out of range")


def compose_eval(G: ComposedInstance, xs, ys) -> tuple:
    """z with z_i = g(xs_i, ys_i)."""
    xs = tuple(xs)
    ys = tuple(int(y, 2) if isinstance(y, str) else y for y in ys)
    G.check_alice(xs)
    G.check_bob(ys)
    return tuple(G.gadget.eval(x, y) for x, y in zip(xs, ys))


@dataclass(frozen=True)
class PartialAssignment:
    """rho in {0,1,*}^n; entries use None for *."""

    entries: tuple

    def __init__(self, entries):
        entries = tuple(entries)
        for e in entries:
            if e not in (0, 1, None):
                raise DomainError("partial assignment entries must be 0, 1, or None")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def free_everywhere(cls, n: int) -> "PartialAssignment":
        return cls((None,) * n)

    @classmethod
    def from_string(cls, s: str) -> "PartialAssignment":
        return cls(tuple(None if c == "*" else int(c) for c in s))

    def __str__(self):
        return "".join("*" if e is None else str(e) for e in self.entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def free(self) -> tuple:
        return tuple(i + 1 for i, e in enumerate(self.entries) if e is None)

    @property
    def fix(self) -> tuple:
        return tuple(i + 1 for i, e in enumerate(self.entries) if e is not None)

    def value(self, i: int):
        return self.entries[i - 1]

    def consistent(self, z) -> bool:
        return all(e is None or e == zi for e, zi in zip(self.entries, z))

    def assign(self, I, bits) -> "PartialAssignment":
        out = list(self.entries)
        for i, b in zip(I, bits):
            if out[i - 1] is not None:
                raise DomainError(f"block {i} already fixed")
            out[i - 1] = b
        return PartialAssignment(out)


@dataclass(frozen=True)
class BobCube:
    """A subcube of Bob's domain: some (block, position) bits pinned.

    This is the large-m representation: explicit Bob sets stop fitting any
    budget around 2^24, while the closeness sweeps go up to m = 32 where the
    full domain has 2^32 strings per block.  Only bit-pinning restrictions are
    supported, which is exactly what single-bit announcements and pointer
    fixing produce.
    """

    n: int
    m: int
    fixed: tuple  # sorted ((block, pos), bit)

    def __init__(self, n, m, fixed):
        fixed = tuple(sorted(fixed))
        seen = {}
        for (blk, pos), b in fixed:
            if not (1 <= blk <= n and 1 <= pos <= m):
                raise DomainError(f"cube constraint ({blk},{pos}) out of range")
            if b not in (0, 1) or seen.setdefault((blk, pos), b) != b:
                raise DomainError("conflicting or non-bit cube constraint")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "fixed", fixed)

    @property
    def size(self) -> int:
        return 2 ** (self.n * self.m - len(self.fixed))

    def contains(self, ys) -> bool:
        return all(bit_at(ys[blk - 1], pos, self.m) == b for (blk, pos), b in self.fixed)

    def restrict(self, constraints):
        """Pin more bits; returns None if inconsistent."""
        merged = dict(self.fixed)
        for key, b in constraints.items():
            if merged.setdefault(key, b) != b:
                return None
        return BobCube(self.n, self.m, tuple(merged.items()))

    def pinned(self, blk: int, pos: int):
        return dict(self.fixed).get((blk, pos))

    def block_count(self, blk: int, extra: dict) -> int:
        """Number of y for one block consistent with this cube plus extra pins."""
        pins = {pos: b for (bl, pos), b in self.fixed if bl == blk}
        for pos, b in extra.items():
            if pins.setdefault(pos, b) != b:
                return 0
        return 2 ** (self.m - len(pins))

    def materialize(self, pair_budget: int = PAIR_BUDGET_DEFAULT) -> frozenset:
        if self.size > pair_budget:
            raise ResourceError("cube materialization", self.size, pair_budget)
        per_block = []
        for blk in range(1, self.n + 1):
            pins = {pos: b for (bl, pos), b in self.fixed if bl == blk}
            per_block.append(
                [y for y in range(2 ** self.m)
                 if all(bit_at(y, p, self.m) == b for p, b in pins.items())]
            )
        return frozenset(itertools.product(*per_block))


# --- uniform helpers over explicit frozensets and BobCube ---

def bob_size(Y) -> int:
    return Y.size if isinstance(Y, BobCube) else len(Y)

def bob_is_empty(Y) -> bool:
    return bob_size(Y) == 0

def bob_contains(Y, ys) -> bool:
    return Y.contains(ys) if isinstance(Y, BobCube) else tuple(ys) in Y

def bob_restrict(Y, constraints, m: int):
    """Subset with bit (block,pos) = b for each constraint; None-able for cubes,
    possibly-empty frozenset for explicit sets."""
    if isinstance(Y, BobCube):
        return Y.restrict(constraints)
    out = frozenset(
        ys for ys in Y
        if all(bit_at(ys[blk - 1], pos, m) == b for (blk, pos), b in constraints.items())
    )
    return out

def bob_split_bit(Y, blk: int, pos: int, m: int):
    """Partition by bit (blk,pos); returns (side0, side1), empty side as None."""
    if isinstance(Y, BobCube):
        return Y.restrict({(blk, pos): 0}), Y.restrict({(blk, pos): 1})
    zero = frozenset(ys for ys in Y if bit_at(ys[blk - 1], pos, m) == 0)
    one = Y - zero
    return (zero or None), (one or None)

def bob_split_fn(Y, fn):
    if isinstance(Y, BobCube):
        raise ResourceError("table split of a cube Bob set", Y.size, 0)
    zero = frozenset(ys for ys in Y if fn(ys) == 0)
    one = Y - zero
    return (zero or None), (one or None)

def bob_deficiency(Y, G: ComposedInstance) -> entropy.Bits:
    """D(Y) relative to the full Bob domain, in bits."""
    if isinstance(Y, BobCube):
        return entropy.Bits.rational(len(Y.fixed))
    if not Y:
        raise DomainError("deficiency of an empty set")
    return entropy.Bits.log2(Fraction(G.bob_size, len(Y)))

def bob_materialize(Y, pair_budget: int = PAIR_BUDGET_DEFAULT) -> frozenset:
    return Y.materialize(pair_budget) if isinstance(Y, BobCube) else Y

def bob_count_slice(Y, xs, z, G: ComposedInstance) -> int:
    """|{y in Y : g(xs_i, y_i) = z_i for all i}| without enumerating cubes."""
    if isinstance(Y, BobCube):
        if G.gadget.kind != "index":
            raise DomainError("cube slice counting is index-gadget only")
        total = 1
        for i, (x, b) in enumerate(zip(xs, z), start=1):
            total *= Y.block_count(i, {x: b})
            if total == 0:
                return 0
        return total
    return sum(1 for ys in Y if compose_eval(G, xs, ys) == tuple(z))


@dataclass(frozen=True)
class Rect:
    """A combinatorial rectangle X x Y with explicit X; Y explicit or a cube."""

    X: frozenset
    Y: object

    def __init__(self, X, Y):
        object.__setattr__(self, "X", frozenset(X))
        object.__setattr__(self, "Y", Y if isinstance(Y, BobCube) else frozenset(Y))

    @property
    def x_size(self) -> int:
        return len(self.X)

    @property
    def y_size(self) -> int:
        return bob_size(self.Y)

    @property
    def pair_count(self) -> int:
        return self.x_size * self.y_size

    @property
    def is_empty(self) -> bool:
        return self.x_size == 0 or self.y_size == 0

    def contains(self, xs, ys) -> bool:
        return tuple(xs) in self.X and bob_contains(self.Y, ys)


def full_rect(G: ComposedInstance, pair_budget: int = PAIR_BUDGET_DEFAULT) -> Rect:
    return Rect(G.full_X(), G.full_Y(pair_budget))


@dataclass(frozen=True)
class OuterFunction:
    """A (possibly partial) boolean function on {0,1}^n; missing z = undefined.

    Undefined inputs are promise violations: they never participate in error
    maximization.
    """

    n: int
    values: tuple  # sorted ((z, bit), ...)

    def __init__(self, n, values):
        pairs = []
        for z, b in (values.items() if isinstance(values, dict) else values):
            z = tuple(z)
            if len(z) != n or any(c not in (0, 1) for c in z) or b not in (0, 1):
                raise DomainError(f"bad outer-function entry {z}->{b}")
            pairs.append((z, b))
        if not pairs:
            raise DomainError("outer function needs at least one defined input")
        if len({z for z, _ in pairs}) != len(pairs):
            raise DomainError("duplicate outer-function entries")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", tuple(sorted(pairs)))

    def defined(self):
        return [z for z, _ in self.values]

    def __call__(self, z):
        z = tuple(z)
        for zz, b in self.values:
            if zz == z:
                return b
        return None

    def to_dict(self) -> dict:
        return {
            "format": "outer_function",
            "n": self.n,
            "values": {"".join(map(str, z)): b for z, b in self.values},
        }

    @classmethod
    def from_dict(cls, d) -> "OuterFunction":
        if d.get("format") != "outer_function":
            raise DomainError("not an outer-function record")
        return cls(d["n"], {tuple(int(c) for c in k): v for k, v in d["values"].items()})


def slice_count(G: ComposedInstance, z) -> int:
    """|G^{-1}(z)| in closed form (blockwise product)."""
    z = tuple(z)
    if len(z) != G.n:
        raise DomainError("z arity mismatch")
    total = 1
    for zi in z:
        total *= sum(G.gadget.preimage_count(zi).values())
    return total


def iter_slice(G: ComposedInstance, z):
    """Yield every (xs, ys) with G(xs, ys) = z, grouped by xs."""
    z = tuple(z)
    g = G.gadget
    allowed = {}
    for x in range(1, g.alice_size + 1):
        for b in (0, 1):
            allowed[(x, b)] = [y for y in range(2 ** g.bob_bits) if g.eval(x, y) == b]
    for xs in G.alice_domain():
        pools = [allowed[(x, zi)] for x, zi in zip(xs, z)]
        for ys in itertools.product(*pools):
            yield xs, ys


def slice_enumerate(G: ComposedInstance, z, pair_budget: int = PAIR_BUDGET_DEFAULT) -> list:
    """Materialize G^{-1}(z); refuses beyond the enumeration budget."""
    total = slice_count(G, z)
    if total > pair_budget:
        raise ResourceError(f"slice enumeration for z={z}", total, pair_budget)
    return list(iter_slice(G, z))


def is_structured(rect: Rect, rho: PartialAssignment, delta, G: ComposedInstance,
                  subset_budget: int = entropy.SUBSET_BUDGET_DEFAULT,
                  essential: bool = False) -> bool:
    """Whether X x Y is rho-structured: X delta-dense on free blocks, fixed on
    the rest, and every output of G on the rectangle consistent with rho.

    Output consistency only bites on fixed blocks (free positions of rho allow
    anything), so once X is constant on fix(rho) it reduces to a per-block bit
    scan of Y.
    """
    if rect.is_empty:
        raise DomainError("is_structured needs a nonempty rectangle")
    if rho.n != G.n:
        raise DomainError("rho arity mismatch")
    fix = rho.fix
    rep = next(iter(rect.X))
    for i in fix:
        if any(xs[i - 1] != rep[i - 1] for xs in rect.X):
            return False
    free = rho.free
    if free:
        proj = {tuple(xs[i - 1] for i in free) for xs in rect.X}
        sv = entropy.SetVar(proj, tuple(G.m for _ in free), free)
        if not entropy.is_blockwise_dense(sv, delta, essential=essential,
                                          subset_budget=subset_budget):
            return False
    if G.gadget.kind != "index" and fix:
        for xs in rect.X:
            for ys in bob_materialize(rect.Y):
                zz = compose_eval(G, xs, ys)
                if not rho.consistent(zz):
                    return False
        return True
    for i in fix:
        alpha = rep[i - 1]
        want = rho.value(i)
        if isinstance(rect.Y, BobCube):
            if rect.Y.pinned(i, alpha) != want:
                return False
        else:
            if any(bit_at(ys[i - 1], alpha, G.m) != want for ys in rect.Y):
                return False
    return True
