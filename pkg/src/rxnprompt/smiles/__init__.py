"""SMILES handling: lexing, parsing, validity, canonical form, fingerprints."""

from .canonical import (
    canonical_ranks,
    canonicalize,
    canonicalize_compound,
    random_smiles,
    write_smiles,
)
from .fingerprint import (
    FINGERPRINT_WIDTH,
    Fingerprint,
    fingerprint,
    fnv1a_64,
    path_strings,
    tanimoto,
)
from .graph import Atom, Bond, BondOrder, MolGraph, parse
from .tokens import SmilesToken, TokenKind, coarse_tokenize, tokenize
from .validity import VALENCE_CEILING, ValidationResult, check_graph_valences, validate

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "FINGERPRINT_WIDTH",
    "Fingerprint",
    "MolGraph",
    "SmilesToken",
    "TokenKind",
    "VALENCE_CEILING",
    "ValidationResult",
    "canonical_ranks",
    "canonicalize",
    "canonicalize_compound",
    "check_graph_valences",
    "coarse_tokenize",
    "fingerprint",
    "fnv1a_64",
    "parse",
    "path_strings",
    "random_smiles",
    "tanimoto",
    "tokenize",
    "validate",
    "write_smiles",
]
