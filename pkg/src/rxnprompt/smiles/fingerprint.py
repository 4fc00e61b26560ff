"""Path-based hashed fingerprints and Tanimoto similarity."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Bond, BondOrder, MolGraph

FINGERPRINT_WIDTH = 2048
MAX_PATH_ATOMS = 7

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_ORDER_TEXT = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a; the stable hash behind fingerprints and embeddings."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width bit set stored as an int mask."""

    bits: int
    width: int = FINGERPRINT_WIDTH

    def count(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> list[int]:
        return [i for i in range(self.width) if self.bits >> i & 1]

    def union(self, other: "Fingerprint") -> "Fingerprint":
        if self.width != other.width:
            raise ValueError(f"fingerprint width mismatch: {self.width} != {other.width}")
        return Fingerprint(self.bits | other.bits, self.width)


def _atom_tag(graph: MolGraph, idx: int) -> str:
    atom = graph.atoms[idx]
    return f"{atom.element}|{int(atom.aromatic)}|{atom.charge}"


def path_strings(graph: MolGraph, max_atoms: int = MAX_PATH_ATOMS) -> set[str]:
    """All simple linear paths of 1..max_atoms atoms, canonical direction.

    Atoms are tagged element|aromatic|charge, bonds by their symbol; of the
    two traversal strings the lexicographically smaller one is kept.
    """
    adj: list[list[tuple[int, Bond]]] = [[] for _ in graph.atoms]
    for bond in graph.bonds:
        adj[bond.a].append((bond.b, bond))
        adj[bond.b].append((bond.a, bond))

    paths: set[str] = set()

    def extend(last: int, atoms: list[int], forward: str, backward: str) -> None:
        paths.add(min(forward, backward))
        if len(atoms) == max_atoms:
            return
        for nxt, bond in adj[last]:
            if nxt in atoms:
                continue
            tag = _atom_tag(graph, nxt)
            sym = _ORDER_TEXT[bond.order]
            extend(nxt, atoms + [nxt], forward + sym + tag, tag + sym + backward)

    for start in range(len(graph.atoms)):
        tag = _atom_tag(graph, start)
        extend(start, [start], tag, tag)
    return paths


def fingerprint(graph: MolGraph, width: int = FINGERPRINT_WIDTH) -> Fingerprint:
    """Hash every path string into a width-bit set (64-bit FNV mod width)."""
    bits = 0
    for path in path_strings(graph):
        bits |= 1 << (fnv1a_64(path.encode("utf-8")) % width)
    return Fingerprint(bits, width)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|, defined as 1.0 when both sets are empty."""
    if a.width != b.width:
        raise ValueError(f"fingerprint width mismatch: {a.width} != {b.width}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union
