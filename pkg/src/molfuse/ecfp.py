"""Extended-connectivity fingerprints (Morgan algorithm) and Tanimoto similarity.

Identifiers come from a fixed-seed FNV-1a 64-bit hash over canonical
byte encodings, so fingerprints are stable across runs and platforms
but deliberately not bit-compatible with any third-party toolkit. All
structural invariance properties (atom-order independence, radius
monotonicity, substructure sensitivity) hold.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .molgraph import Molecule, parse_molecule

__all__ = ["Fingerprint", "ecfp", "morgan_identifiers", "tanimoto", "LengthMismatchError"]


class LengthMismatchError(ValueError):
    pass


_FNV_OFFSET = 0xCBF29CE484222325  # fixed seed: standard FNV-1a 64-bit offset basis
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# bond order codes inside neighbor tuples; aromatic sorts after triple
_ORDER_CODE = {"single": 1, "double": 2, "triple": 3, "aromatic": 4}


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _initial_identifier(mol: Molecule, i: int) -> int:
    a = mol.atoms[i]
    key = f"{a.element}|{a.degree}|{a.total_h}|{a.valence}|{a.charge}|{int(a.aromatic)}"
    return _fnv1a(key.encode("ascii"))


def _update_identifier(own: int, neighbor_ids: list[tuple[int, int]]) -> int:
    parts = [struct.pack("<Q", own)]
    for order_code, nbr in sorted(neighbor_ids):
        parts.append(struct.pack("<BQ", order_code, nbr))
    return _fnv1a(b"".join(parts))


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # uint8 vector of 0/1
    radius: int

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.uint8))

    @property
    def nbits(self) -> int:
        return self.bits.shape[0]

    @property
    def set_count(self) -> int:
        return int(self.bits.sum())

    def to_hex(self) -> str:
        """Lowercase hex, most-significant bit first (bit 0 is the MSB)."""
        value = 0
        for k in np.flatnonzero(self.bits):
            value |= 1 << (self.nbits - 1 - int(k))
        return format(value, f"0{self.nbits // 4}x")

    @classmethod
    def from_hex(cls, text: str, radius: int = 2) -> "Fingerprint":
        nbits = len(text) * 4
        value = int(text, 16)
        bits = np.zeros(nbits, dtype=np.uint8)
        for k in range(nbits):
            if value >> (nbits - 1 - k) & 1:
                bits[k] = 1
        return cls(bits=bits, radius=radius)


def morgan_identifiers(mol: Molecule | str, radius: int = 2) -> set[int]:
    """All accepted substructure identifiers up to the given radius, pre-folding.

    Each iteration rehashes every atom's identifier together with its
    sorted (bond order, neighbor identifier) pairs; within an iteration,
    candidates whose circular environments cover the same bond set are
    kept once (the smallest identifier wins). Atoms with no neighbors
    keep their previous identifier, so extra radius adds nothing for
    them.
    """
    if isinstance(mol, str):
        mol = parse_molecule(mol)
    n = mol.n_atoms
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]  # (nbr, order, bond_idx)
    for b_idx, b in enumerate(mol.bonds):
        code = _ORDER_CODE[b.order]
        adj[b.i].append((b.j, code, b_idx))
        adj[b.j].append((b.i, code, b_idx))

    ids = [_initial_identifier(mol, i) for i in range(n)]
    ball = [{i} for i in range(n)]  # atoms within the current radius
    env: list[frozenset[int]] = [frozenset() for _ in range(n)]  # bonds within it
    accepted: set[int] = set(ids)

    for _ in range(radius):
        new_ids = list(ids)
        candidates: dict[frozenset[int], int] = {}
        for i in range(n):
            if not adj[i]:
                continue
            new_ids[i] = _update_identifier(ids[i], [(code, ids[j]) for j, code, _ in adj[i]])
            grown = set(env[i])
            reach = set(ball[i])
            for a in ball[i]:
                for j, _, b_idx in adj[a]:
                    grown.add(b_idx)
                    reach.add(j)
            env[i] = frozenset(grown)
            ball[i] = reach
            key = env[i]
            if key not in candidates or new_ids[i] < candidates[key]:
                candidates[key] = new_ids[i]
        accepted.update(candidates.values())
        ids = new_ids
    return accepted


def ecfp(mol: Molecule | str, radius: int = 2, nbits: int = 1024) -> Fingerprint:
    """Morgan fingerprint folded to a fixed-length bit vector."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits <= 0 or nbits & (nbits - 1):
        raise ValueError("nbits must be a power of two")
    bits = np.zeros(nbits, dtype=np.uint8)
    for identifier in morgan_identifiers(mol, radius):
        bits[identifier % nbits] = 1
    return Fingerprint(bits=bits, radius=radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Intersection over union of the set bits; 1.0 when both are empty."""
    if a.nbits != b.nbits:
        raise LengthMismatchError(f"fingerprint lengths differ: {a.nbits} vs {b.nbits}")
    union = int(np.bitwise_or(a.bits, b.bits).sum())
    if union == 0:
        return 1.0
    inter = int(np.bitwise_and(a.bits, b.bits).sum())
    return inter / union
