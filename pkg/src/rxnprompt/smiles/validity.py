"""Chemical validity checking at the token-graph level.

A string is valid when every '.'-separated compound parses and every
atom's bond-order sum stays within the allowed valence for its element.
Aromatic bonds count 1.5 and the per-atom total is rounded up. A positive
charge raises the ceiling by the charge for N/P and O/S. Unknown elements
and bracket atoms carrying an explicit H count are exempt; implicit and
explicit hydrogens never enter the sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import SmilesError
from .graph import MolGraph, parse

# Maximum allowed bond-order sum per element (hypervalent forms included:
# P 3/5 -> 5, S 2/4/6 -> 6). Elements not listed are exempt.
VALENCE_CEILING = {
    "B": 3,
    "C": 4,
    "N": 3,
    "O": 2,
    "P": 5,
    "S": 6,
    "F": 1,
    "Cl": 1,
    "Br": 1,
    "I": 1,
    "H": 1,
}

_CHARGE_ADJUSTED = {"N", "P", "O", "S"}

_ELEMENT_NAMES = {
    "B": "boron",
    "C": "carbon",
    "N": "nitrogen",
    "O": "oxygen",
    "P": "phosphorus",
    "S": "sulfur",
    "F": "fluorine",
    "Cl": "chlorine",
    "Br": "bromine",
    "I": "iodine",
    "H": "hydrogen",
}


@dataclass
class ValidationResult:
    valid: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def check_graph_valences(graph: MolGraph) -> ValidationResult:
    """Apply the valence table to an already-parsed compound graph."""
    order_sum = [0.0] * len(graph.atoms)
    for bond in graph.bonds:
        order_sum[bond.a] += bond.order.valence
        order_sum[bond.b] += bond.order.valence
    for idx, atom in enumerate(graph.atoms):
        if atom.explicit_h > 0:
            continue
        ceiling = VALENCE_CEILING.get(atom.element)
        if ceiling is None:
            continue
        if atom.charge > 0 and atom.element in _CHARGE_ADJUSTED:
            ceiling += atom.charge
        total = math.ceil(order_sum[idx])
        if total > ceiling:
            name = _ELEMENT_NAMES.get(atom.element, atom.element)
            return ValidationResult(
                False, f"{name} valence {total} > {ceiling} (atom {idx})"
            )
    return ValidationResult(True)


def validate(s: str) -> ValidationResult:
    """Check every '.'-separated compound of ``s``; total function."""
    text = s.strip()
    if not text:
        return ValidationResult(False, "empty compound")
    for pos, compound in enumerate(text.split(".")):
        compound = compound.strip()
        if not compound:
            return ValidationResult(False, f"compound {pos} is empty")
        try:
            graph = parse(compound)
        except SmilesError as exc:
            return ValidationResult(False, str(exc))
        result = check_graph_valences(graph)
        if not result.valid:
            return result
    return ValidationResult(True)
