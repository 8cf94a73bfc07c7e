"""Exact min-entropy, deficiency, blockwise density, and the density-restoring partition.

All quantities are kept exact: probabilities are big-integer rationals and
entropies are values of the form ``r + log2(q)`` with r, q rational.  Every
inequality used by the partition-lemma verifier is decided by integer
arithmetic (raising both sides to a common power), never by floats.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ResourceError

SUBSET_BUDGET_DEFAULT = 2 ** 20  # cap on the number of enumerated coordinate subsets


def as_fraction(x) -> Fraction:
    """Coerce to an exact rational; floats go through their decimal repr.

    Fraction(0.9) would be the exact binary float 0.9000000000000000222...,
    which is never what a caller means by a density rate, so floats are read
    back from str().
    """
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def cmp_pow(q: Fraction, base, exponent) -> int:
    """Compare q against base**exponent exactly; returns -1, 0, or +1.

    exponent may be any rational; both sides are raised to its denominator so
    the comparison happens between rationals with integer exponents.
    """
    q = Fraction(q)
    if q <= 0:
        raise DomainError("cmp_pow requires a positive left side")
    base = Fraction(base)
    if base <= 0:
        raise DomainError("cmp_pow requires a positive base")
    exponent = as_fraction(exponent)
    lhs = q ** exponent.denominator
    rhs = base ** exponent.numerator
    if lhs < rhs:
        return -1
    if lhs > rhs:
        return 1
    return 0


def _split_pow2(n: int) -> tuple[int, int]:
    """n = 2**e * odd; returns (e, odd)."""
    e = (n & -n).bit_length() - 1
    return e, n >> e


@dataclass(frozen=True)
class Bits:
    """An exact quantity measured in bits: value = lin + log2(arg).

    The canonical form keeps arg an odd/odd positive rational, so equal values
    have equal fields and hashing is consistent.  Sums and differences stay in
    this form; comparisons reduce to integer comparisons via cmp_pow.
    """

    lin: Fraction
    arg: Fraction

    def __init__(self, lin=0, arg=1):
        lin = as_fraction(lin)
        arg = as_fraction(arg)
        if arg <= 0:
            raise DomainError("log2 argument must be positive")
        en, odd_n = _split_pow2(arg.numerator)
        ed, odd_d = _split_pow2(arg.denominator)
        object.__setattr__(self, "lin", lin + en - ed)
        object.__setattr__(self, "arg", Fraction(odd_n, odd_d))

    @classmethod
    def log2(cls, q) -> "Bits":
        return cls(0, q)

    @classmethod
    def rational(cls, r) -> "Bits":
        return cls(r, 1)

    def __add__(self, other: "Bits") -> "Bits":
        return Bits(self.lin + other.lin, self.arg * other.arg)

    def __sub__(self, other: "Bits") -> "Bits":
        return Bits(self.lin - other.lin, self.arg / other.arg)

    def __neg__(self) -> "Bits":
        return Bits(-self.lin, 1 / self.arg)

    def _cmp(self, other: "Bits") -> int:
        # self - other vs 0  <=>  arg ratio vs 2**(lin difference)
        return cmp_pow(self.arg / other.arg, 2, other.lin - self.lin)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __float__(self):
        return float(self.lin) + math.log2(float(self.arg))

    def __repr__(self):
        if self.arg == 1:
            return f"Bits({self.lin})"
        return f"Bits({self.lin} + log2({self.arg}))"


BITS_ZERO = Bits(0, 1)


@dataclass(frozen=True)
class SetVar:
    """A uniform random variable on an explicit support inside a product domain.

    support: tuples, one entry per coordinate in `coords`;
    ambient:  per-coordinate domain sizes;
    coords:   coordinate labels (ascending), kept so partition labels refer to
              the caller's original block indices.
    """

    support: frozenset
    ambient: tuple
    coords: tuple

    def __init__(self, support, ambient, coords=None):
        support = frozenset(support)
        ambient = tuple(ambient)
        if coords is None:
            coords = tuple(range(1, len(ambient) + 1))
        coords = tuple(coords)
        if not support:
            raise DomainError("SetVar support must be nonempty")
        if len(coords) != len(ambient):
            raise DomainError("coords and ambient lengths differ")
        if tuple(sorted(coords)) != coords:
            raise DomainError("coords must be ascending")
        for t in support:
            if len(t) != len(ambient):
                raise DomainError("support tuple arity does not match ambient")
        super().__setattr__("support", support)
        super().__setattr__("ambient", ambient)
        super().__setattr__("coords", coords)

    @property
    def size(self) -> int:
        return len(self.support)

    def _positions(self, I) -> list:
        pos = []
        for i in I:
            if i not in self.coords:
                raise DomainError(f"coordinate {i} not in {self.coords}")
            pos.append(self.coords.index(i))
        return sorted(pos)

    def project_counts(self, I) -> Counter:
        pos = self._positions(I)
        return Counter(tuple(t[p] for p in pos) for t in self.support)

    def restrict(self, I, alpha) -> "SetVar":
        """Sub-variable on {t : t_I = alpha}, projected to the other coordinates."""
        pos = self._positions(I)
        keep = [p for p in range(len(self.coords)) if p not in pos]
        alpha = tuple(alpha)
        sel = {
            tuple(t[p] for p in keep)
            for t in self.support
            if tuple(t[p] for p in pos) == alpha
        }
        return SetVar(
            sel,
            tuple(self.ambient[p] for p in keep),
            tuple(self.coords[p] for p in keep),
        )


def marginal_min_entropy(v: SetVar, I) -> Bits:
    """Min-entropy of v's marginal on coordinate set I, exactly, in bits."""
    I = tuple(I)
    if not I:
        return BITS_ZERO
    max_count = max(v.project_counts(I).values())
    return Bits.log2(Fraction(v.size, max_count))


def deficiency(v: SetVar, I) -> Bits:
    """Ambient bits of the I-marginal minus its min-entropy; 0 for I = ()."""
    I = tuple(I)
    if not I:
        return BITS_ZERO
    pos = v._positions(I)
    ambient_size = 1
    for p in pos:
        ambient_size *= v.ambient[p]
    max_count = max(v.project_counts(I).values())
    return Bits.log2(Fraction(ambient_size * max_count, v.size))


def _uniform_block_size(v: SetVar) -> int:
    if not v.ambient:
        return 2  # irrelevant: no nonempty subsets exist
    m = v.ambient[0]
    if any(a != m for a in v.ambient):
        raise DomainError("blockwise density needs a uniform per-coordinate domain")
    return m


def _nonempty_subsets(coords, subset_budget):
    n = len(coords)
    if n and 2 ** n > subset_budget:
        raise ResourceError("subset enumeration", 2 ** n, subset_budget)
    for r in range(1, n + 1):
        yield from itertools.combinations(coords, r)


def _max_prob(v: SetVar, I) -> Fraction:
    return Fraction(max(v.project_counts(I).values()), v.size)


def _violates(v: SetVar, I, delta: Fraction, m: int) -> bool:
    """H_inf(v_I) < delta*|I|*log2(m), i.e. some outcome is too heavy."""
    return cmp_pow(_max_prob(v, I), m, -delta * len(I)) > 0


def is_blockwise_dense(v: SetVar, delta, essential: bool = False,
                       subset_budget: int = SUBSET_BUDGET_DEFAULT) -> bool:
    """Every nonempty marginal has min-entropy rate >= delta (minus 1 bit if essential).

    Exhaustive over all 2^|J| - 1 nonempty coordinate subsets.
    """
    delta = as_fraction(delta)
    m = _uniform_block_size(v)
    for I in _nonempty_subsets(v.coords, subset_budget):
        p = _max_prob(v, I)
        if essential:
            p = p / 2  # H >= d|I|log m - 1  <=>  p <= 2 * m^(-d|I|)
        if cmp_pow(p, m, -delta * len(I)) > 0:
            return False
    return True


@dataclass(frozen=True)
class DensityPart:
    """One part of a density-restoring partition, in emission order.

    label reads "x_I = alpha"; delta is log2(|X| / |X^(>=i)|) where X^(>=i) is
    what remained just before this part was peeled off.
    """

    order: int            # 1-based emission index
    coords: tuple         # I_i, ascending original labels
    alpha: tuple          # fixed value on I_i
    support: frozenset    # the part, as full-arity tuples of the input SetVar
    size: int
    tail_size: int        # |X^(>=i)|
    input_size: int       # |X|

    @property
    def delta(self) -> Bits:
        return Bits.log2(self.delta_ratio)

    @property
    def delta_ratio(self) -> Fraction:
        return Fraction(self.input_size, self.tail_size)

    def label(self) -> str:
        if not self.coords:
            return ""
        idx = ",".join(str(i) for i in self.coords)
        val = ",".join(str(a) for a in self.alpha)
        return f"x_{{{idx}}}=({val})"


def _choose_violating_set(v: SetVar, delta: Fraction, m: int, subset_budget: int):
    """Deterministic maximal min-entropy-violating subset (possibly empty).

    Maximality must be genuine (no violating superset at all): a one-step
    greedy can stall below a violating superset, which would break the
    partition lemma.  Enumerate violating subsets, then grow from the smallest
    violating singleton, at each step committing to the smallest coordinate
    that still lies inside some violating superset; if only multi-coordinate
    sets violate (e.g. diagonal sets), fall back to the lexicographically
    smallest maximal violating set.
    """
    violating = [
        frozenset(I)
        for I in _nonempty_subsets(v.coords, subset_budget)
        if _violates(v, I, delta, m)
    ]
    if not violating:
        return ()
    singles = sorted(i for I in violating if len(I) == 1 for i in I)
    if singles:
        I = frozenset({singles[0]})
        while True:
            grown = False
            for j in sorted(set(v.coords) - I):
                if any(T >= I | {j} for T in violating):
                    I = I | {j}
                    grown = True
                    break
            if not grown:
                return tuple(sorted(I))
    maximal = [I for I in violating if not any(T > I for T in violating)]
    return tuple(sorted(min(maximal, key=lambda I: tuple(sorted(I)))))


def density_restoring_partition(v: SetVar, delta,
                                subset_budget: int = SUBSET_BUDGET_DEFAULT) -> list:
    """Split v.support into ordered parts, each fixed on a violating block set
    and delta-dense on the rest.

    While the remainder is nonempty: take the maximal subset I whose marginal
    is too concentrated, the heaviest outcome alpha on it (ties: smallest),
    peel off {x : x_I = alpha}.  A remainder that is already dense is emitted
    as a single part with the empty label, which ends the loop.
    """
    delta = as_fraction(delta)
    m = _uniform_block_size(v)
    input_size = v.size
    remaining = set(v.support)
    parts = []
    order = 0
    while remaining:
        order += 1
        cur = SetVar(remaining, v.ambient, v.coords)
        I = _choose_violating_set(cur, delta, m, subset_budget)
        if not I:
            parts.append(DensityPart(order, (), (), frozenset(remaining),
                                      len(remaining), len(remaining), input_size))
            break
        counts = cur.project_counts(I)
        best = max(counts.values())
        alpha = min(a for a, c in counts.items() if c == best)
        pos = cur._positions(I)
        part = frozenset(
            t for t in remaining if tuple(t[p] for p in pos) == alpha
        )
        parts.append(DensityPart(order, I, alpha, part,
                                 len(part), len(remaining), input_size))
        remaining -= part
    return parts


@dataclass(frozen=True)
class PartCheck:
    order: int
    label: str
    density_ok: bool
    deficiency_ok: bool


@dataclass(frozen=True)
class PartitionLemmaReport:
    ok: bool
    is_partition: bool
    parts: tuple

    def first_violation(self):
        for p in self.parts:
            if not (p.density_ok and p.deficiency_ok):
                return p
        return None


def verify_partition_lemma(v: SetVar, parts, delta,
                           subset_budget: int = SUBSET_BUDGET_DEFAULT) -> PartitionLemmaReport:
    """Check both partition-lemma bullets for every part, in exact arithmetic.

    Density: the part is delta-dense off its fixed coordinates.
    Deficiency: D(X^i on J\\I_i) <= D(X) - (1-delta)|I_i| log m + delta_i.
    The second is checked as one rational-vs-m^q comparison, so it stays exact
    even when m is not a power of two.
    """
    delta = as_fraction(delta)
    m = _uniform_block_size(v)
    seen = set()
    covered = 0
    checks = []
    for part in parts:
        covered += part.size
        seen |= set(part.support)
        rest = tuple(i for i in v.coords if i not in part.coords)
        if rest:
            sub = SetVar(
                {tuple(t[v.coords.index(i)] for i in rest) for t in part.support},
                tuple(m for _ in rest),
                rest,
            )
            density_ok = is_blockwise_dense(sub, delta, subset_budget=subset_budget)
            max_count = max(sub.project_counts(rest).values())
            lhs_arg = Fraction(m ** len(rest) * max_count, part.size)
        else:
            density_ok = True
            lhs_arg = Fraction(1)  # deficiency over no coordinates is 0
        # lhs <= D(X) + delta_i - (1-delta)|I| log m, with
        # D(X) = log2(m^|J| / |X|) and delta_i = log2(|X| / tail).
        rhs_arg = Fraction(m ** len(v.coords), v.size) * part.delta_ratio
        deficiency_ok = cmp_pow(lhs_arg / rhs_arg, m,
                                -(1 - delta) * len(part.coords)) <= 0
        checks.append(PartCheck(part.order, part.label(), density_ok, deficiency_ok))
    is_partition = covered == v.size and seen == set(v.support)
    ok = is_partition and all(c.density_ok and c.deficiency_ok for c in checks)
    return PartitionLemmaReport(ok, is_partition, tuple(checks))
