"""SMILES lexing: strict tokenizer plus the coarse regex splitter.

The strict tokenizer drives the parser; the coarse splitter is shared by
the text metrics and the hashing embedder, which only need stable tokens,
not a validated lexeme stream.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from ..errors import SmilesError


class TokenKind(enum.Enum):
    ATOM = "atom"
    BOND = "bond"
    RING_CLOSURE = "ring_closure"
    BRANCH_OPEN = "branch_open"
    BRANCH_CLOSE = "branch_close"
    DOT = "dot"


@dataclass
class SmilesToken:
    kind: TokenKind
    text: str
    position: int


# Two-letter organic-subset halogens must be lexed before single letters.
_ORGANIC_TWO = ("Cl", "Br")
_ORGANIC_ONE = set("BCNOPSFI")
_AROMATIC_ONE = set("bcnops")
_BOND_CHARS = set("-=#:/\\")


def tokenize(s: str) -> list[SmilesToken]:
    """Lex a SMILES string into tokens covering the input exactly.

    Bracket atoms ('[...]') and '%NN' ring closures are single tokens.
    Raises SmilesError with the character offset on illegal input.
    """
    tokens: list[SmilesToken] = []
    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "[":
            end = s.find("]", i + 1)
            if end < 0:
                raise SmilesError("unterminated bracket atom", i)
            tokens.append(SmilesToken(TokenKind.ATOM, s[i : end + 1], i))
            i = end + 1
        elif s.startswith(_ORGANIC_TWO[0], i) or s.startswith(_ORGANIC_TWO[1], i):
            tokens.append(SmilesToken(TokenKind.ATOM, s[i : i + 2], i))
            i += 2
        elif ch in _ORGANIC_ONE or ch in _AROMATIC_ONE:
            tokens.append(SmilesToken(TokenKind.ATOM, ch, i))
            i += 1
        elif ch in _BOND_CHARS:
            tokens.append(SmilesToken(TokenKind.BOND, ch, i))
            i += 1
        elif ch == "%":
            if i + 2 >= n or not (s[i + 1].isdigit() and s[i + 2].isdigit()):
                raise SmilesError("'%' must be followed by two digits", i)
            tokens.append(SmilesToken(TokenKind.RING_CLOSURE, s[i : i + 3], i))
            i += 3
        elif ch.isdigit():
            tokens.append(SmilesToken(TokenKind.RING_CLOSURE, ch, i))
            i += 1
        elif ch == "(":
            tokens.append(SmilesToken(TokenKind.BRANCH_OPEN, ch, i))
            i += 1
        elif ch == ")":
            tokens.append(SmilesToken(TokenKind.BRANCH_CLOSE, ch, i))
            i += 1
        elif ch == ".":
            tokens.append(SmilesToken(TokenKind.DOT, ch, i))
            i += 1
        else:
            raise SmilesError(f"illegal character {ch!r}", i)
    return tokens


def ring_number(token: SmilesToken) -> int:
    """Ring-closure digit carried by a RING_CLOSURE token."""
    text = token.text
    return int(text[1:]) if text.startswith("%") else int(text)


# Classic SMILES splitting pattern: bracket atoms, two-letter halogens and
# '%NN' ring closures stay whole, everything else is a single character.
_COARSE_PATTERN = re.compile(
    r"\[[^\]]+\]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p"
    r"|\(|\)|\.|=|#|-|\+|\\|/|:|~|@|\?|>|\*|\$|%\d{2}|\d"
)


def coarse_tokenize(text: str) -> list[str]:
    """SMILES-aware token split with whitespace-word fallback.

    Whitespace-separated chunks fully covered by the SMILES pattern are
    split into SMILES tokens; any other chunk is kept as one word token.
    """
    out: list[str] = []
    for chunk in text.split():
        parts = _COARSE_PATTERN.findall(chunk)
        if "".join(parts) == chunk:
            out.extend(parts)
        else:
            out.append(chunk)
    return out
