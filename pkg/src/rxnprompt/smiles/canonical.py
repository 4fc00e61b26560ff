"""Canonical atom ranking and SMILES rendering.

Ranking is iterative invariant refinement: the initial invariant combines
element, aromatic flag, charge, degree, explicit H, isotope and the
chirality tag; refinement replaces each rank with (rank, sorted multiset
of (bond order, neighbor rank)) until the partition stabilises. Remaining
ties are broken by doubling all ranks and bumping the smallest-index atom
of the first tied class, then re-refining. Output is a depth-first
traversal from the rank-0 atom, neighbors in ascending rank.
"""

from __future__ import annotations

import random
from collections import defaultdict

from ..errors import SmilesError
from .graph import Atom, Bond, BondOrder, MolGraph, parse
from .validity import validate

_ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
_AROMATIC_BARE = {"B", "C", "N", "O", "P", "S"}


def _adjacency(graph: MolGraph) -> list[list[tuple[int, Bond]]]:
    adj: list[list[tuple[int, Bond]]] = [[] for _ in graph.atoms]
    for bond in graph.bonds:
        adj[bond.a].append((bond.b, bond))
        adj[bond.b].append((bond.a, bond))
    return adj


def _dense_rank(keys: list) -> list[int]:
    order = {key: i for i, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


def _refine(ranks: list[int], adj) -> list[int]:
    while True:
        keys = [
            (ranks[i], sorted((bond.order.value, ranks[j]) for j, bond in adj[i]))
            for i in range(len(ranks))
        ]
        new_ranks = _dense_rank([tuple([k[0]] + [tuple(p) for p in k[1]]) for k in keys])
        if new_ranks == ranks:
            return ranks
        ranks = new_ranks


def canonical_ranks(graph: MolGraph) -> list[int]:
    """Permutation assigning each atom a unique canonical rank 0..n-1."""
    adj = _adjacency(graph)
    n = len(graph.atoms)
    initial = [
        (
            atom.element,
            atom.aromatic,
            atom.charge,
            len(adj[i]),
            atom.explicit_h,
            atom.isotope or 0,
            atom.chirality,
        )
        for i, atom in enumerate(graph.atoms)
    ]
    ranks = _refine(_dense_rank(initial), adj)
    while len(set(ranks)) < n:
        doubled = [2 * r for r in ranks]
        counts = defaultdict(int)
        for r in doubled:
            counts[r] += 1
        tied_rank = min(r for r, c in counts.items() if c > 1)
        bump = min(i for i in range(n) if doubled[i] == tied_rank)
        doubled[bump] -= 1
        ranks = _refine(_dense_rank(doubled), adj)
    return ranks


def _atom_text(atom: Atom) -> str:
    bare_ok = (
        atom.element in _ORGANIC_SUBSET
        and atom.charge == 0
        and atom.isotope is None
        and atom.explicit_h == 0
        and not atom.chirality
        and (not atom.aromatic or atom.element in _AROMATIC_BARE)
    )
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if bare_ok:
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    parts.append(atom.chirality)
    if atom.explicit_h == 1:
        parts.append("H")
    elif atom.explicit_h > 1:
        parts.append(f"H{atom.explicit_h}")
    if atom.charge == 1:
        parts.append("+")
    elif atom.charge == -1:
        parts.append("-")
    elif atom.charge > 1:
        parts.append(f"+{atom.charge}")
    elif atom.charge < -1:
        parts.append(f"-{-atom.charge}")
    parts.append("]")
    return "".join(parts)


def _bond_text(bond: Bond, graph: MolGraph) -> str:
    both_aromatic = graph.atoms[bond.a].aromatic and graph.atoms[bond.b].aromatic
    if bond.order is BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    if bond.order is BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return "=" if bond.order is BondOrder.DOUBLE else "#"


def _digit_text(digit: int) -> str:
    if digit < 10:
        return str(digit)
    if digit < 100:
        return f"%{digit:02d}"
    raise SmilesError(f"ring closure digit {digit} out of range")


def write_smiles(graph: MolGraph, ranks: list[int]) -> str:
    """Render a graph to SMILES following the given rank order.

    The traversal starts at the rank-0 atom and visits neighbors in
    ascending rank; ring-closure bonds carry their digit at the first
    (opening) endpoint together with any non-default bond symbol.
    """
    if not graph.atoms:
        raise SmilesError("cannot render an empty graph")
    adj = _adjacency(graph)
    for i in range(len(adj)):
        adj[i].sort(key=lambda pair: ranks[pair[0]])
    start = ranks.index(min(ranks))

    # Pass 1: depth-first tree plus ring (back) bonds.
    visited = [False] * len(graph.atoms)
    used: set[tuple[int, int]] = set()
    tree_children: dict[int, list[tuple[int, Bond]]] = defaultdict(list)
    preorder: dict[int, int] = {}
    ring_pairs: list[tuple[int, int, Bond]] = []  # (opening atom, closing atom, bond)
    stack: list[tuple[int, object]] = [(start, iter(adj[start]))]
    visited[start] = True
    preorder[start] = 0
    while stack:
        u, it = stack[-1]
        advanced = False
        for v, bond in it:
            if bond.key() in used:
                continue
            used.add(bond.key())
            if visited[v]:
                ring_pairs.append((v, u, bond))
            else:
                visited[v] = True
                preorder[v] = len(preorder)
                tree_children[u].append((v, bond))
                stack.append((v, iter(adj[v])))
                advanced = True
                break
        if not advanced:
            stack.pop()
    if len(preorder) != len(graph.atoms):
        raise SmilesError("graph is disconnected; render compounds separately")

    ring_events: dict[int, list[tuple[int, Bond, bool]]] = defaultdict(list)
    for opener, closer, bond in ring_pairs:
        ring_events[opener].append((closer, bond, True))
        ring_events[closer].append((opener, bond, False))
    for atom_idx in ring_events:
        ring_events[atom_idx].sort(key=lambda ev: preorder[ev[0]])

    # Pass 2: emit text, allocating ring digits in write order.
    out: list[str] = []
    free_digits = list(range(1, 100))
    digit_of: dict[tuple[int, int], int] = {}

    def ring_text(u: int) -> str:
        parts = []
        for partner, bond, is_open in ring_events.get(u, []):
            if is_open:
                digit = free_digits.pop(0)
                digit_of[bond.key()] = digit
                parts.append(_bond_text(bond, graph) + _digit_text(digit))
            else:
                digit = digit_of.pop(bond.key())
                free_digits.insert(0, digit)
                free_digits.sort()
                parts.append(_digit_text(digit))
        return "".join(parts)

    emit: list[tuple] = [("atom", start, None)]
    while emit:
        item = emit.pop()
        if item[0] == "text":
            out.append(item[1])
            continue
        _, u, in_bond = item
        if in_bond is not None:
            out.append(_bond_text(in_bond, graph))
        out.append(_atom_text(graph.atoms[u]))
        out.append(ring_text(u))
        kids = tree_children.get(u, [])
        for i in range(len(kids) - 1, -1, -1):
            v, bond = kids[i]
            if i < len(kids) - 1:
                emit.append(("text", ")"))
                emit.append(("atom", v, bond))
                emit.append(("text", "("))
            else:
                emit.append(("atom", v, bond))
    return "".join(out)


def canonicalize_compound(s: str) -> str:
    """Canonical SMILES of one compound (no '.')."""
    result = validate(s)
    if not result.valid:
        raise SmilesError(f"cannot canonicalize invalid SMILES {s!r}: {result.reason}")
    graph = parse(s.strip())
    return write_smiles(graph, canonical_ranks(graph))


def canonicalize(s: str) -> str:
    """Canonical form of a SMILES string, compound by compound.

    Multi-compound strings are canonicalized per compound and re-joined
    in sorted order so the result is independent of compound order.
    """
    compounds = [part.strip() for part in s.strip().split(".")]
    canonical = [canonicalize_compound(part) for part in compounds]
    if len(canonical) == 1:
        return canonical[0]
    return ".".join(sorted(canonical))


def random_smiles(graph: MolGraph, rng: random.Random) -> str:
    """A random valid respelling of the graph (shuffled atom priorities)."""
    ranks = list(range(len(graph.atoms)))
    rng.shuffle(ranks)
    return write_smiles(graph, ranks)
