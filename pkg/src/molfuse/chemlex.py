"""Rule-based SMILES lexing, corpus vocabularies, and fixed-length integer encoding.

The lexer is longest-match over a fixed rule table:

* bracket atoms ``[...]`` as a single token
* two-letter organic-subset halogens ``Cl``, ``Br``
* single-letter elements ``B C N O P S F I H``
* aromatic lowercase atoms ``b c n o s p``
* bond symbols ``= # / \\ - :``
* ring closures: single digits and two-digit ``%nn``
* branch parentheses, dot, ``+``, ``@@``, ``@``

Concatenating the emitted tokens always reproduces the input string.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "tokenize",
    "Vocabulary",
    "EncodedSeq",
    "build_vocab",
    "encode",
    "LexError",
    "UnlexableCharacterError",
    "UnterminatedBracketError",
    "EmptyCorpusError",
    "UnknownTokenError",
    "SequenceTooLongError",
]


class LexError(ValueError):
    """Base class for tokenizer failures."""


class UnlexableCharacterError(LexError):
    def __init__(self, smiles: str, position: int):
        self.position = position
        super().__init__(
            f"no lexing rule matches {smiles[position]!r} at position {position} in {smiles!r}"
        )


class UnterminatedBracketError(LexError):
    def __init__(self, smiles: str, position: int):
        self.position = position
        super().__init__(f"'[' at position {position} has no matching ']' in {smiles!r}")


class EmptyCorpusError(ValueError):
    pass


class UnknownTokenError(KeyError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"token {token!r} is not in the vocabulary")


class SequenceTooLongError(ValueError):
    pass


# Alternatives ordered so that the regex engine realizes longest match:
# bracket atoms and two-character tokens before their one-character prefixes.
_TOKEN_RE = re.compile(
    r"\[[^\]]+\]"
    r"|Cl|Br"
    r"|[BCNOPSFIH]"
    r"|[bcnosp]"
    r"|%\d\d"
    r"|[=#/\\\-:]"
    r"|\d"
    r"|[().+]"
    r"|@@|@"
)


def tokenize(smiles: str) -> list[str]:
    """Split a SMILES string into tokens by longest-match lexing.

    >>> tokenize("CS(=O)(=O)Cl")
    ['C', 'S', '(', '=', 'O', ')', '(', '=', 'O', ')', 'Cl']
    """
    if not smiles:
        raise LexError("empty SMILES string")
    tokens = []
    pos = 0
    n = len(smiles)
    while pos < n:
        m = _TOKEN_RE.match(smiles, pos)
        if m is None:
            if smiles[pos] == "[":
                raise UnterminatedBracketError(smiles, pos)
            raise UnlexableCharacterError(smiles, pos)
        tokens.append(m.group())
        pos = m.end()
    return tokens


class Vocabulary:
    """Bijective token -> index map. Indices start at 1; 0 is the padding id."""

    def __init__(self, tokens_in_order: list[str]):
        self._index = {}
        for tok in tokens_in_order:
            if tok in self._index:
                raise ValueError(f"duplicate token {tok!r}")
            self._index[tok] = len(self._index) + 1
        self._tokens = {i: t for t, i in self._index.items()}

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __getitem__(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownTokenError(token) from None

    def token(self, index: int) -> str:
        return self._tokens[index]

    def items(self):
        return self._index.items()

    def save(self, path: str | Path) -> None:
        """One "token<TAB>index" line per entry, sorted by index."""
        lines = [f"{tok}\t{idx}" for tok, idx in sorted(self._index.items(), key=lambda kv: kv[1])]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        pairs = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            tok, idx = line.rsplit("\t", 1)
            pairs.append((int(idx), tok))
        pairs.sort()
        vocab = cls([tok for _, tok in pairs])
        for idx, tok in pairs:
            if vocab[tok] != idx:
                raise ValueError(f"vocabulary file is not contiguous at index {idx}")
        return vocab


@dataclass(frozen=True)
class EncodedSeq:
    """Fixed-length integer encoding: ids[k] >= 1 for k < true_len, 0 after."""

    ids: np.ndarray
    true_len: int

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        object.__setattr__(self, "ids", ids)
        if ids.ndim != 1:
            raise ValueError("ids must be one-dimensional")


def build_vocab(corpus: list[list[str]]) -> Vocabulary:
    """Assign indices in first-appearance order over the corpus."""
    if not corpus:
        raise EmptyCorpusError("cannot build a vocabulary from an empty corpus")
    seen: dict[str, None] = {}
    for seq in corpus:
        for tok in seq:
            seen.setdefault(tok, None)
    return Vocabulary(list(seen))


def encode(tokens: list[str], vocab: Vocabulary, max_len: int) -> EncodedSeq:
    """Map tokens to their vocabulary ids, zero-padded at the end to max_len."""
    if len(tokens) > max_len:
        raise SequenceTooLongError(f"sequence of {len(tokens)} tokens exceeds max_len={max_len}")
    ids = np.zeros(max_len, dtype=np.int64)
    for k, tok in enumerate(tokens):
        ids[k] = vocab[tok]
    return EncodedSeq(ids=ids, true_len=len(tokens))


def decode(seq: EncodedSeq, vocab: Vocabulary) -> list[str]:
    """Inverse of :func:`encode` after stripping padding."""
    return [vocab.token(int(i)) for i in seq.ids[: seq.true_len]]
