"""Molecular graph model and the SMILES parser."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from ..errors import SmilesError
from .tokens import SmilesToken, TokenKind, ring_number, tokenize


class BondOrder(enum.Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


@dataclass
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: int = 0
    isotope: int | None = None
    chirality: str = ""  # '', '@' or '@@'; carried verbatim, never interpreted

    def label(self) -> tuple:
        """Attribute tuple used for isomorphism and canonical ranking."""
        return (
            self.element,
            self.aromatic,
            self.charge,
            self.explicit_h,
            self.isotope or 0,
            self.chirality,
        )


@dataclass
class Bond:
    a: int
    b: int
    order: BondOrder

    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass
class MolGraph:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def neighbors(self, idx: int) -> list[tuple[int, Bond]]:
        out = []
        for bond in self.bonds:
            if bond.a == idx:
                out.append((bond.b, bond))
            elif bond.b == idx:
                out.append((bond.a, bond))
        return out

    def degree(self, idx: int) -> int:
        return sum(1 for bond in self.bonds if idx in (bond.a, bond.b))


# Bracket-atom grammar: isotope, symbol, chirality, H count, charge, class.
_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>se|as|[A-Z][a-z]?|[bcnops]|\*)"
    r"(?P<chirality>@@|@)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+{1,2}|-{1,2}|\+\d+|-\d+)?"
    r"(?::\d+)?$"
)

_AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s", "se", "as"}


def _parse_bracket_atom(lexeme: str, position: int) -> Atom:
    body = lexeme[1:-1]
    m = _BRACKET_RE.match(body)
    if not m:
        raise SmilesError(f"malformed bracket atom {lexeme!r}", position)
    symbol = m.group("symbol")
    aromatic = symbol in _AROMATIC_SYMBOLS
    element = symbol.capitalize() if aromatic else symbol
    hcount = m.group("hcount")
    if hcount is None:
        explicit_h = 0
    elif hcount == "H":
        explicit_h = 1
    else:
        explicit_h = int(hcount[1:])
    charge_text = m.group("charge")
    if charge_text is None:
        charge = 0
    elif set(charge_text) <= {"+"}:
        charge = len(charge_text)
    elif set(charge_text) <= {"-"}:
        charge = -len(charge_text)
    else:
        charge = int(charge_text)
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    return Atom(
        element=element,
        aromatic=aromatic,
        charge=charge,
        explicit_h=explicit_h,
        isotope=isotope,
        chirality=m.group("chirality") or "",
    )


def _atom_from_token(token: SmilesToken) -> Atom:
    text = token.text
    if text.startswith("["):
        return _parse_bracket_atom(text, token.position)
    if text.islower():
        return Atom(element=text.upper(), aromatic=True)
    return Atom(element=text)


def parse(s: str) -> MolGraph:
    """Parse a single-compound SMILES string into a MolGraph.

    Callers split multi-compound strings on '.' first. Bonds written
    without a symbol default to aromatic between two aromatic atoms and
    single otherwise.
    """
    tokens = tokenize(s)
    graph = MolGraph()
    prev_atom: int | None = None
    pending_bond: BondOrder | None = None
    pending_bond_pos = 0
    branch_stack: list[int] = []
    # ring digit -> (atom index, bond order or None, position)
    open_rings: dict[int, tuple[int, BondOrder | None, int]] = {}
    bond_keys: set[tuple[int, int]] = set()

    def add_bond(a: int, b: int, order: BondOrder | None, position: int) -> None:
        if a == b:
            raise SmilesError("ring bond to the atom itself", position)
        if order is None:
            both_aromatic = graph.atoms[a].aromatic and graph.atoms[b].aromatic
            order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
        bond = Bond(a, b, order)
        if bond.key() in bond_keys:
            raise SmilesError(
                f"duplicate bond between atoms {bond.key()[0]} and {bond.key()[1]}", position
            )
        bond_keys.add(bond.key())
        graph.bonds.append(bond)

    for token in tokens:
        if token.kind is TokenKind.ATOM:
            atom = _atom_from_token(token)
            graph.atoms.append(atom)
            idx = len(graph.atoms) - 1
            if prev_atom is not None:
                add_bond(prev_atom, idx, pending_bond, token.position)
            pending_bond = None
            prev_atom = idx
        elif token.kind is TokenKind.BOND:
            if pending_bond is not None:
                raise SmilesError("two consecutive bond symbols", token.position)
            if prev_atom is None:
                raise SmilesError("bond symbol with no preceding atom", token.position)
            pending_bond = _BOND_SYMBOLS[token.text]
            pending_bond_pos = token.position
        elif token.kind is TokenKind.RING_CLOSURE:
            if prev_atom is None:
                raise SmilesError("ring closure with no preceding atom", token.position)
            digit = ring_number(token)
            if digit in open_rings:
                other, opened_order, _ = open_rings.pop(digit)
                if (
                    opened_order is not None
                    and pending_bond is not None
                    and opened_order is not pending_bond
                ):
                    raise SmilesError(
                        f"conflicting bond orders for ring {digit}", token.position
                    )
                order = pending_bond if pending_bond is not None else opened_order
                add_bond(other, prev_atom, order, token.position)
            else:
                open_rings[digit] = (prev_atom, pending_bond, token.position)
            pending_bond = None
        elif token.kind is TokenKind.BRANCH_OPEN:
            if prev_atom is None:
                raise SmilesError("branch with no preceding atom", token.position)
            if pending_bond is not None:
                raise SmilesError("bond symbol before '('", token.position)
            branch_stack.append(prev_atom)
        elif token.kind is TokenKind.BRANCH_CLOSE:
            if not branch_stack:
                raise SmilesError("unmatched ')'", token.position)
            if pending_bond is not None:
                raise SmilesError("bond symbol with no following atom", token.position)
            prev_atom = branch_stack.pop()
        elif token.kind is TokenKind.DOT:
            raise SmilesError("unexpected '.' inside a single compound", token.position)

    if pending_bond is not None:
        raise SmilesError("bond symbol with no following atom", pending_bond_pos)
    if branch_stack:
        raise SmilesError("unclosed '('", len(s))
    if open_rings:
        digit = min(open_rings)
        raise SmilesError(f"unclosed ring {digit}", open_rings[digit][2])
    if not graph.atoms:
        raise SmilesError("empty SMILES", 0)
    return graph
