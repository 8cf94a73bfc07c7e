"""Protocol trees, decision trees, the refinement transform, and conversions.

A protocol tree is a rooted binary tree whose internal nodes belong to Alice
or Bob and map the owner's full input to the bit sent; leaves carry output
values.  The refinement transform rebuilds such a tree so that after every
Alice bit she also announces which part of a density-restoring partition her
input fell into, and Bob pins the pointed-to bits; the rectangle at every
iteration stays structured with respect to the running partial assignment.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from . import entropy
from .core import (
    BOT,
    ComposedInstance,
    GadgetSpec,
    PAIR_BUDGET_DEFAULT,
    PartialAssignment,
    Rect,
    bit_at,
    bob_deficiency,
    bob_restrict,
    bob_size,
    bob_split_bit,
    bob_split_fn,
)
from .entropy import Bits, as_fraction
from .errors import DomainError, ResourceError

ALICE = "alice"
BOB = "bob"
DEPTH_CAP_DEFAULT = 32


# --- node send-functions ---

class TableFn:
    """Extensional input -> bit map, stored as an explicit table."""

    kind = "table"

    def __init__(self, table):
        self.table = dict(table)
        for v in self.table.values():
            if v not in (0, 1):
                raise DomainError("table values must be bits")

    def __call__(self, inp):
        return self.table[tuple(inp)]

    def __eq__(self, other):
        return isinstance(other, TableFn) and self.table == other.table


class BitFn:
    """Bob reads a single bit: position `pos` of block `block`."""

    kind = "bit"

    def __init__(self, block: int, pos: int, m: int):
        self.block = block
        self.pos = pos
        self.m = m

    def __call__(self, ys):
        return bit_at(ys[self.block - 1], self.pos, self.m)

    def __eq__(self, other):
        return (isinstance(other, BitFn)
                and (self.block, self.pos, self.m) == (other.block, other.pos, other.m))


@dataclass
class PLeaf:
    value: object


@dataclass
class PNode:
    owner: str          # ALICE | BOB
    fn: object          # TableFn | BitFn (BitFn for Bob only)
    zero: object
    one: object

    def child(self, b):
        return self.one if b else self.zero


class ProtocolTree:
    """A deterministic protocol over the domain of G; cost is tree depth."""

    def __init__(self, G: ComposedInstance, root, depth_cap: int = DEPTH_CAP_DEFAULT):
        self.G = G
        self.root = root
        self._validate(depth_cap)

    def _validate(self, depth_cap):
        alice_size = self.G.alice_size
        bob_size = self.G.bob_size
        depth = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            depth = max(depth, d)
            if isinstance(node, PLeaf):
                continue
            if node.owner not in (ALICE, BOB):
                raise DomainError(f"unknown owner {node.owner!r}")
            fn = node.fn
            if isinstance(fn, TableFn):
                expect = alice_size if node.owner == ALICE else bob_size
                if len(fn.table) != expect:
                    raise DomainError(
                        f"{node.owner} table has {len(fn.table)} entries, needs {expect}"
                    )
            elif isinstance(fn, BitFn):
                if node.owner != BOB:
                    raise DomainError("bit-readout maps are Bob-side only")
                if not (1 <= fn.block <= self.G.n and 1 <= fn.pos <= self.G.gadget.bob_bits):
                    raise DomainError("bit-readout map out of range")
            else:
                raise DomainError("node map must be a TableFn or BitFn")
            stack.append((node.zero, d + 1))
            stack.append((node.one, d + 1))
        if depth > depth_cap:
            raise DomainError(f"protocol depth {depth} exceeds cap {depth_cap}")
        self.depth = depth

    @property
    def cost(self) -> int:
        return self.depth

    def leaves(self):
        """(transcript, leaf) pairs in left-to-right order."""
        out = []

        def walk(node, t):
            if isinstance(node, PLeaf):
                out.append((t, node))
            else:
                walk(node.zero, t + (0,))
                walk(node.one, t + (1,))

        walk(self.root, ())
        return out


def run_protocol(pt: ProtocolTree, xs, ys):
    """Deterministic transcript (tuple of bits) and the reached leaf's value."""
    xs = tuple(xs)
    ys = tuple(ys)
    pt.G.check_alice(xs)
    pt.G.check_bob(ys)
    node = pt.root
    transcript = []
    while not isinstance(node, PLeaf):
        b = node.fn(xs if node.owner == ALICE else ys)
        transcript.append(b)
        node = node.child(b)
    return tuple(transcript), node.value


def leaf_rectangles(pt: ProtocolTree, pair_budget: int = PAIR_BUDGET_DEFAULT) -> dict:
    """Map each leaf transcript to the rectangle of inputs reaching it.

    Rectangles are pairwise disjoint and cover the domain; empty ones are kept
    (as empty rectangles) so the partition property is checkable.
    """
    G = pt.G
    out = {}

    def walk(node, t, X, Y):
        if isinstance(node, PLeaf):
            out[t] = Rect(X, Y if Y is not None else frozenset())
            return
        if node.owner == ALICE:
            x1 = frozenset(x for x in X if node.fn(x))
            walk(node.zero, t + (0,), X - x1, Y)
            walk(node.one, t + (1,), x1, Y)
        else:
            if Y is None:
                y0 = y1 = None
            elif isinstance(node.fn, BitFn):
                y0, y1 = bob_split_bit(Y, node.fn.block, node.fn.pos, G.gadget.bob_bits)
            else:
                y0, y1 = bob_split_fn(Y, node.fn)
            walk(node.zero, t + (0,), X, y0)
            walk(node.one, t + (1,), X, y1)

    walk(pt.root, (), G.full_X(), G.full_Y(pair_budget))
    return out


# --- decision trees ---

@dataclass
class DLeaf:
    value: object  # 0, 1, or BOT


@dataclass
class DQuery:
    coord: int
    zero: object
    one: object


class DecisionTree:
    def __init__(self, n: int, root):
        self.n = n
        self.root = root
        self.depth = self._validate(root, frozenset(), 0)

    def _validate(self, node, path, d):
        if isinstance(node, DLeaf):
            return d
        if not 1 <= node.coord <= self.n:
            raise DomainError(f"query coordinate {node.coord} outside 1..{self.n}")
        if node.coord in path:
            raise DomainError(f"coordinate {node.coord} queried twice on a path")
        path = path | {node.coord}
        return max(self._validate(node.zero, path, d + 1),
                   self._validate(node.one, path, d + 1))

    @property
    def cost(self) -> int:
        return self.depth


def dt_eval(T: DecisionTree, z):
    """(leaf value, set of queried coordinates)."""
    z = tuple(z)
    if len(z) != T.n:
        raise DomainError("z arity mismatch")
    node = T.root
    queried = set()
    while isinstance(node, DQuery):
        queried.add(node.coord)
        node = node.one if z[node.coord - 1] else node.zero
    return node.value, frozenset(queried)


def _check_weights(components):
    components = [(as_fraction(w), t) for w, t in components]
    if not components or any(w <= 0 for w, _ in components):
        raise DomainError("mixture weights must be positive")
    if sum(w for w, _ in components) != 1:
        raise DomainError("mixture weights must sum to exactly 1")
    return components


class RandomizedProtocol:
    """A rational-weight mixture of deterministic protocols on one domain."""

    def __init__(self, components):
        self.components = _check_weights(components)
        G = self.components[0][1].G
        for _, t in self.components:
            if t.G != G:
                raise DomainError("mixture components must share the input domain")
        self.G = G

    @classmethod
    def point(cls, pt: ProtocolTree) -> "RandomizedProtocol":
        return cls([(Fraction(1), pt)])


class RandomizedDecisionTree:
    def __init__(self, n: int, components):
        self.components = _check_weights(components)
        for _, t in self.components:
            if t.n != n:
                raise DomainError("mixture components must share n")
        self.n = n

    @property
    def depth(self) -> int:
        return max(t.depth for _, t in self.components)

    def output_dist(self, z) -> dict:
        out = {}
        for w, t in self.components:
            v, _ = dt_eval(t, z)
            out[v] = out.get(v, Fraction(0)) + w
        return out


def dt_to_protocol(T, G: ComposedInstance, depth_cap: int = DEPTH_CAP_DEFAULT):
    """Simulate a decision tree by a protocol: each query of coordinate i costs
    Alice log m bits (the pointer x_i, high bit first) plus one Bob bit (the
    pointed-to y bit), so cost = depth * (log m + 1) exactly.
    """
    if isinstance(T, RandomizedDecisionTree):
        return RandomizedProtocol(
            [(w, dt_to_protocol(t, G, depth_cap)) for w, t in T.components]
        )
    if T.n != G.n:
        raise DomainError("decision tree arity does not match the instance")
    k = G.log_m

    def pointer_chain(dnode, i, t, prefix):
        if t > k:
            alpha = prefix + 1  # prefix holds x_i - 1
            reply = BitFn(i, alpha, G.m)
            return PNode(BOB, reply,
                         build(dnode.zero), build(dnode.one))
        shift = k - t
        fn = TableFn({xs: ((xs[i - 1] - 1) >> shift) & 1 for xs in G.alice_domain()})
        return PNode(ALICE, fn,
                     pointer_chain(dnode, i, t + 1, prefix << 1),
                     pointer_chain(dnode, i, t + 1, (prefix << 1) | 1))

    def build(dnode):
        if isinstance(dnode, DLeaf):
            return PLeaf(dnode.value)
        return pointer_chain(dnode, dnode.coord, 1, 0)

    return ProtocolTree(G, build(T.root), depth_cap=depth_cap)


# --- refined protocols ---

@dataclass
class RLeaf:
    rect: Rect
    rho: PartialAssignment
    value: object
    potential: Bits
    def_y: Bits


@dataclass
class RPart:
    """One density-restoring part inside an Alice iteration."""

    order: int            # 1-based announcement index
    coords: tuple         # I, ascending block labels
    alpha: tuple          # fixed pointer values on I
    X: frozenset
    delta_ratio: Fraction  # |X after bit| / |X^(>=order)|
    s_children: dict      # bit-string over I -> node or None ("impossible to send")

    def pins(self, s: str) -> dict:
        return {(i, a): int(c) for i, a, c in zip(self.coords, self.alpha, s)}


@dataclass
class RBranch:
    X: frozenset          # X^b, after Alice's bit
    parts: list
    part_of: dict         # x -> index into parts


@dataclass
class RAlice:
    rect: Rect
    rho: PartialAssignment
    fn: object            # the source node's Alice map
    branches: dict        # bit -> RBranch or None (empty X^b)
    potential: Bits
    def_y: Bits


@dataclass
class RBob:
    rect: Rect
    rho: PartialAssignment
    fn: object            # the source node's Bob map
    children: dict        # bit -> node or None (empty Y^b)
    potential: Bits
    def_y: Bits


class RefinedProtocol:
    """The refined form of a protocol: same input/output behavior, but every
    Alice bit is followed by a part announcement and a bit-fixing round, so
    each iteration starts at a structured rectangle."""

    def __init__(self, G, delta, root, source: ProtocolTree):
        self.G = G
        self.delta = delta
        self.root = root
        self.source = source

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, RBob):
                stack.extend(c for c in node.children.values() if c is not None)
            elif isinstance(node, RAlice):
                for br in node.branches.values():
                    if br is None:
                        continue
                    for part in br.parts:
                        stack.extend(c for c in part.s_children.values() if c is not None)

    def iteration_nodes(self):
        return [nd for nd in self.iter_nodes() if not isinstance(nd, RLeaf)]

    def leaves(self):
        """(refined transcript, leaf) pairs."""
        out = []

        def walk(node, t):
            if isinstance(node, RLeaf):
                out.append((t, node))
            elif isinstance(node, RBob):
                for b in (0, 1):
                    c = node.children[b]
                    if c is not None:
                        walk(c, t + (("b", b),))
            else:
                for b in (0, 1):
                    br = node.branches[b]
                    if br is None:
                        continue
                    for part in br.parts:
                        for s, c in sorted(part.s_children.items()):
                            if c is not None:
                                walk(c, t + (("b", b), ("i", part.order), ("s", s)))

        walk(self.root, ())
        return out


def _potential(X, rho, log_m) -> Bits:
    # D(X on free blocks); X is constant on fixed blocks, so |X_free| = |X|.
    return Bits.log2(Fraction(2 ** (log_m * len(rho.free)), len(X)))


def _s_strings(k):
    return ["".join(bits) for bits in itertools.product("01", repeat=k)]


def _bob_maps_are_bit_readouts(pt: ProtocolTree) -> bool:
    return all(
        isinstance(nd.fn, BitFn)
        for nd, _ in _walk_nodes(pt.root)
        if isinstance(nd, PNode) and nd.owner == BOB
    )


def refine(pt: ProtocolTree, delta=Fraction(9, 10), *,
           pair_budget: int = PAIR_BUDGET_DEFAULT,
           subset_budget: int = entropy.SUBSET_BUDGET_DEFAULT,
           y_mode: str = "auto") -> RefinedProtocol:
    """Build the refined protocol: Bob bits split Y; Alice bits split X, then a
    density-restoring partition of X on the free blocks is announced, and Bob
    pins the pointed-to bits, extending the partial assignment.

    Children whose rectangle would be empty are recorded as absent (None): the
    simulator treats an absent bit-fixing child as an impossible message.

    y_mode picks Bob's set representation: "explicit" materializes Y (budget
    permitting), "cube" tracks pinned bits only (valid when every Bob map is a
    single-bit readout), "auto" uses cubes exactly in that case.  The two
    representations produce the same refined protocol up to how Y is stored.
    """
    G = pt.G
    if G.gadget.kind != "index":
        raise DomainError("refinement is defined for the index gadget")
    delta = as_fraction(delta)
    k = G.log_m
    m = G.m
    if y_mode not in ("auto", "explicit", "cube"):
        raise DomainError(f"unknown y_mode {y_mode!r}")
    if y_mode == "cube" and not _bob_maps_are_bit_readouts(pt):
        raise DomainError("cube Bob sets need bit-readout Bob maps")
    use_cube = y_mode == "cube" or (y_mode == "auto" and _bob_maps_are_bit_readouts(pt))

    def build(v, X, Y, rho):
        pot = _potential(X, rho, k)
        defy = bob_deficiency(Y, G)
        rect = Rect(X, Y)
        if isinstance(v, PLeaf):
            return RLeaf(rect, rho, v.value, pot, defy)
        if v.owner == BOB:
            if isinstance(v.fn, BitFn):
                y0, y1 = bob_split_bit(Y, v.fn.block, v.fn.pos, G.gadget.bob_bits)
            else:
                y0, y1 = bob_split_fn(Y, v.fn)
            children = {
                0: build(v.zero, X, y0, rho) if y0 is not None else None,
                1: build(v.one, X, y1, rho) if y1 is not None else None,
            }
            return RBob(rect, rho, v.fn, children, pot, defy)
        branches = {}
        for b in (0, 1):
            Xb = frozenset(x for x in X if v.fn(x) == b)
            if not Xb:
                branches[b] = None
                continue
            free = rho.free
            proj = (lambda x: tuple(x[i - 1] for i in free))
            sv = entropy.SetVar({proj(x) for x in Xb}, (m,) * len(free), free)
            dparts = entropy.density_restoring_partition(sv, delta, subset_budget)
            parts = []
            part_of = {}
            for dp in dparts:
                Xi = frozenset(x for x in Xb if proj(x) in dp.support)
                s_children = {}
                for s in _s_strings(len(dp.coords)):
                    pins = {(i, a): int(c) for i, a, c in zip(dp.coords, dp.alpha, s)}
                    Ys = bob_restrict(Y, pins, G.gadget.bob_bits)
                    if Ys is None or bob_size(Ys) == 0:
                        s_children[s] = None
                        continue
                    rho2 = rho.assign(dp.coords, tuple(int(c) for c in s))
                    s_children[s] = build(v.child(b), Xi, Ys, rho2)
                parts.append(RPart(dp.order, dp.coords, dp.alpha, Xi,
                                   dp.delta_ratio, s_children))
                for x in Xi:
                    part_of[x] = len(parts) - 1
            branches[b] = RBranch(Xb, parts, part_of)
        return RAlice(rect, rho, v.fn, branches, pot, defy)

    X0 = G.full_X()
    if use_cube:
        from .core import BobCube

        Y0 = BobCube(G.n, G.gadget.bob_bits, ())
    else:
        Y0 = G.full_Y(pair_budget)
    root = build(pt.root, X0, Y0, PartialAssignment.free_everywhere(G.n))
    return RefinedProtocol(G, delta, root, pt)


def run_refined(rp: RefinedProtocol, xs, ys):
    """Run the refined protocol on a concrete input; value matches the source
    protocol, and dropping i- and s-messages recovers its transcript."""
    xs = tuple(xs)
    ys = tuple(ys)
    G = rp.G
    G.check_alice(xs)
    G.check_bob(ys)
    node = rp.root
    transcript = []
    while not isinstance(node, RLeaf):
        if isinstance(node, RBob):
            b = node.fn(ys)
            transcript.append(("b", b))
            node = node.children[b]
        else:
            b = node.fn(xs)
            br = node.branches[b]
            part = br.parts[br.part_of[xs]]
            s = "".join(
                str(bit_at(ys[i - 1], a, G.gadget.bob_bits))
                for i, a in zip(part.coords, part.alpha)
            )
            transcript.extend([("b", b), ("i", part.order), ("s", s)])
            node = part.s_children[s]
    return tuple(transcript), node.value


def project_transcript(refined_transcript) -> tuple:
    """Drop part announcements and bit-fixing messages, keeping the b bits."""
    return tuple(v for kind, v in refined_transcript if kind == "b")


# --- serialization: canonical nested JSON-friendly dicts ---

def _fn_to_dict(fn, domain):
    if isinstance(fn, BitFn):
        return {"kind": "bit", "block": fn.block, "pos": fn.pos}
    bits = "".join(str(fn.table[inp]) for inp in domain)
    return {"kind": "table", "bits": bits}


def _fn_from_dict(d, domain, m):
    if d["kind"] == "bit":
        return BitFn(d["block"], d["pos"], m)
    bits = d["bits"]
    table = {}
    n_entries = 0
    for inp, c in zip(domain, bits):
        table[inp] = int(c)
        n_entries += 1
    if n_entries != len(bits):
        raise DomainError("table bit string length does not match the domain")
    return TableFn(table)


def _leaf_value_out(v):
    return "bot" if v is BOT else v


def _leaf_value_in(v):
    return BOT if v == "bot" else v


def protocol_to_dict(pt: ProtocolTree, table_budget: int = 2 ** 20) -> dict:
    G = pt.G
    if G.bob_size > table_budget and any(
        isinstance(nd, PNode) and nd.owner == BOB and isinstance(nd.fn, TableFn)
        for nd, _ in _walk_nodes(pt.root)
    ):
        raise ResourceError("Bob table serialization", G.bob_size, table_budget)
    alice_domain = list(G.alice_domain())
    bob_domain = list(G.bob_domain()) if G.bob_size <= table_budget else []

    def node_out(node):
        if isinstance(node, PLeaf):
            return {"leaf": _leaf_value_out(node.value)}
        domain = alice_domain if node.owner == ALICE else bob_domain
        return {
            "owner": node.owner,
            "fn": _fn_to_dict(node.fn, domain),
            "0": node_out(node.zero),
            "1": node_out(node.one),
        }

    return {
        "format": "protocol",
        "n": G.n,
        "gadget": {"kind": G.gadget.kind, "m": G.m},
        "tree": node_out(pt.root),
    }


def _walk_nodes(root):
    stack = [(root, ())]
    while stack:
        node, path = stack.pop()
        yield node, path
        if isinstance(node, PNode):
            stack.append((node.zero, path + (0,)))
            stack.append((node.one, path + (1,)))


def protocol_from_dict(d) -> ProtocolTree:
    if d.get("format") != "protocol":
        raise DomainError("not a protocol record")
    if d["gadget"]["kind"] != "index":
        raise DomainError("only index-gadget protocols are serialized")
    G = ComposedInstance(d["n"], GadgetSpec.index(d["gadget"]["m"]))
    alice_domain = list(G.alice_domain())
    bob_domain = None

    def node_in(nd):
        nonlocal bob_domain
        if "leaf" in nd:
            return PLeaf(_leaf_value_in(nd["leaf"]))
        owner = nd["owner"]
        if owner == ALICE:
            dom = alice_domain
        else:
            if nd["fn"]["kind"] == "table":
                if bob_domain is None:
                    bob_domain = list(G.bob_domain())
                dom = bob_domain
            else:
                dom = []
        fn = _fn_from_dict(nd["fn"], dom, G.gadget.bob_bits)
        return PNode(owner, fn, node_in(nd["0"]), node_in(nd["1"]))

    return ProtocolTree(G, node_in(d["tree"]))


def dt_to_dict(T: DecisionTree) -> dict:
    def node_out(node):
        if isinstance(node, DLeaf):
            return {"leaf": _leaf_value_out(node.value)}
        return {"query": node.coord, "0": node_out(node.zero), "1": node_out(node.one)}

    return {"format": "decision_tree", "n": T.n, "tree": node_out(T.root)}


def dt_from_dict(d) -> DecisionTree:
    if d.get("format") != "decision_tree":
        raise DomainError("not a decision-tree record")

    def node_in(nd):
        if "leaf" in nd:
            return DLeaf(_leaf_value_in(nd["leaf"]))
        return DQuery(nd["query"], node_in(nd["0"]), node_in(nd["1"]))

    return DecisionTree(d["n"], node_in(d["tree"]))


def randomized_protocol_to_dict(rp: RandomizedProtocol) -> dict:
    return {
        "format": "randomized_protocol",
        "components": [
            {"weight": str(w), "protocol": protocol_to_dict(t)}
            for w, t in rp.components
        ],
    }


def randomized_protocol_from_dict(d) -> RandomizedProtocol:
    if d.get("format") != "randomized_protocol":
        raise DomainError("not a randomized-protocol record")
    return RandomizedProtocol(
        [(Fraction(c["weight"]), protocol_from_dict(c["protocol"]))
         for c in d["components"]]
    )


def load_fixture(path_or_obj):
    """Parse a protocol / randomized protocol / decision tree / outer function
    from a dict or a JSON file path."""
    from .core import OuterFunction

    if isinstance(path_or_obj, dict):
        d = path_or_obj
    else:
        with open(path_or_obj) as fh:
            d = json.load(fh)
    fmt = d.get("format")
    if fmt == "protocol":
        return protocol_from_dict(d)
    if fmt == "randomized_protocol":
        return randomized_protocol_from_dict(d)
    if fmt == "decision_tree":
        return dt_from_dict(d)
    if fmt == "outer_function":
        return OuterFunction.from_dict(d)
    raise DomainError(f"unknown fixture format {fmt!r}")
