"""SMILES -> molecular graph, per-atom feature matrix, normalized adjacency.

The parser consumes tokens from :mod:`molfuse.chemlex` and resolves
branches, ring closures, and implicit hydrogens. Aromaticity is read
from the notation (lowercase atoms); stereo markers are parsed and
discarded. Bond orders count 1/2/3 and 1.5 for aromatic when filling
hydrogens to standard organic-subset valences.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chemlex import tokenize

__all__ = [
    "Atom",
    "Bond",
    "Molecule",
    "parse_molecule",
    "featurize",
    "normalized_adjacency",
    "dump_edges",
    "MoleculeParseError",
    "UnpairedRingClosureError",
    "UnmatchedParenthesisError",
    "UnknownElementError",
    "ELEMENT_TABLE",
    "FEATURE_WIDTH",
]


class MoleculeParseError(ValueError):
    pass


class UnpairedRingClosureError(MoleculeParseError):
    pass


class UnmatchedParenthesisError(MoleculeParseError):
    pass


class UnknownElementError(MoleculeParseError):
    pass


# Fixed 44-symbol table: 43 named elements plus a trailing "other" bucket.
ELEMENT_TABLE = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe",
    "As", "Al", "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co",
    "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn",
    "Zr", "Cr", "Pt", "Hg", "Pb", "other",
]
_ELEMENT_SLOT = {sym: i for i, sym in enumerate(ELEMENT_TABLE[:-1])}

FEATURE_WIDTH = 78  # 44 element + 11 degree + 11 hydrogens + 11 valence + 1 aromatic

# Known periodic symbols, for validating bracket atoms.
_PERIODIC = set(
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu".split()
)

_DEFAULT_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
    "F": 1, "Cl": 1, "Br": 1, "I": 1, "H": 1,
}

_BOND_VALUE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}

_BRACKET_RE = re.compile(
    r"^(?P<iso>\d+)?"
    r"(?P<sym>as|se|[A-Z][a-z]?|[bcnops])"
    r"(?P<chi>@{1,2})?"
    r"(?P<h>H\d*)?"
    r"(?P<chg>\+[0-9]*|-[0-9]*)?"
    r"(?::\d+)?$"
)


@dataclass
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: int | None = None  # None: fill to the default organic-subset valence
    # derived after parsing
    degree: int = 0
    total_h: int = 0
    valence: int = 0


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: str  # single | double | triple | aromatic


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, i: int) -> list[tuple[int, str]]:
        out = []
        for b in self.bonds:
            if b.i == i:
                out.append((b.j, b.order))
            elif b.j == i:
                out.append((b.i, b.order))
        return out


def _parse_bracket(token: str) -> Atom:
    body = token[1:-1]
    m = _BRACKET_RE.match(body)
    if m is None:
        raise MoleculeParseError(f"cannot parse bracket atom {token!r}")
    sym = m.group("sym")
    aromatic = sym[0].islower()
    element = sym.capitalize()
    if element not in _PERIODIC:
        raise UnknownElementError(f"unknown element {sym!r} in {token!r}")
    h_spec = m.group("h")
    if h_spec is None:
        n_h = 0
    elif h_spec == "H":
        n_h = 1
    else:
        n_h = int(h_spec[1:])
    chg_spec = m.group("chg")
    if chg_spec is None:
        charge = 0
    elif chg_spec in ("+", "-"):
        charge = 1 if chg_spec == "+" else -1
    elif set(chg_spec) <= {"+"}:
        charge = len(chg_spec)
    elif set(chg_spec) <= {"-"}:
        charge = -len(chg_spec)
    else:
        charge = int(chg_spec)
    return Atom(element=element, aromatic=aromatic, charge=charge, explicit_h=n_h)


def _atom_from_token(token: str) -> Atom | None:
    if token.startswith("["):
        return _parse_bracket(token)
    if token in ("Cl", "Br") or (len(token) == 1 and token in "BCNOPSFIH"):
        return Atom(element=token)
    if len(token) == 1 and token in "bcnosp":
        return Atom(element=token.upper(), aromatic=True)
    return None


def parse_molecule(smiles: str) -> Molecule:
    """Parse SMILES into a molecular graph with hydrogens and valences filled."""
    mol = Molecule()
    prev: int | None = None
    stack: list[int | None] = []
    pending: str | None = None  # explicit bond symbol awaiting its second atom
    rings: dict[str, tuple[int, str | None]] = {}
    bond_keys: set[tuple[int, int]] = set()

    def add_bond(i: int, j: int, order: str) -> None:
        if i == j:
            raise MoleculeParseError(f"self-bond on atom {i} in {smiles!r}")
        key = (min(i, j), max(i, j))
        if key in bond_keys:
            raise MoleculeParseError(f"duplicate bond {key} in {smiles!r}")
        bond_keys.add(key)
        mol.bonds.append(Bond(i, j, order))

    def implicit_order(i: int, j: int) -> str:
        if mol.atoms[i].aromatic and mol.atoms[j].aromatic:
            return "aromatic"
        return "single"

    for token in tokenize(smiles):
        atom = _atom_from_token(token)
        if atom is not None:
            mol.atoms.append(atom)
            idx = len(mol.atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending or implicit_order(prev, idx))
            elif pending is not None:
                raise MoleculeParseError(f"bond symbol with no preceding atom in {smiles!r}")
            pending = None
            prev = idx
        elif token == "(":
            if prev is None:
                raise UnmatchedParenthesisError(f"branch with no preceding atom in {smiles!r}")
            stack.append(prev)
        elif token == ")":
            if not stack:
                raise UnmatchedParenthesisError(f"unmatched ')' in {smiles!r}")
            prev = stack.pop()
        elif token == "=":
            pending = "double"
        elif token == "#":
            pending = "triple"
        elif token == ":":
            pending = "aromatic"
        elif token in ("-", "/", "\\"):
            pending = "single"  # stereo slashes are plain single bonds here
        elif token == ".":
            if pending is not None:
                raise MoleculeParseError(f"bond symbol before '.' in {smiles!r}")
            prev = None
        elif token in ("@", "@@"):
            continue  # stereo markers carry no 2D-graph information
        elif token.isdigit() or token.startswith("%"):
            if prev is None:
                raise UnpairedRingClosureError(f"ring digit with no atom in {smiles!r}")
            num = token[1:] if token.startswith("%") else token
            if num in rings:
                open_atom, open_bond = rings.pop(num)
                order = pending or open_bond
                if pending and open_bond and pending != open_bond:
                    raise MoleculeParseError(
                        f"conflicting bond orders on ring closure {num} in {smiles!r}"
                    )
                add_bond(open_atom, prev, order or implicit_order(open_atom, prev))
            else:
                rings[num] = (prev, pending)
            pending = None
        else:
            raise MoleculeParseError(f"unexpected token {token!r} in {smiles!r}")

    if rings:
        raise UnpairedRingClosureError(f"unpaired ring closure(s) {sorted(rings)} in {smiles!r}")
    if stack:
        raise UnmatchedParenthesisError(f"unclosed '(' in {smiles!r}")
    if not mol.atoms:
        raise MoleculeParseError(f"no atoms in {smiles!r}")

    _fill_derived(mol)
    return mol


def _fill_derived(mol: Molecule) -> None:
    n = mol.n_atoms
    bond_sum = [0.0] * n
    h_neighbors = [0] * n
    heavy_neighbors = [0] * n
    for b in mol.bonds:
        v = _BOND_VALUE[b.order]
        bond_sum[b.i] += v
        bond_sum[b.j] += v
        for a, other in ((b.i, b.j), (b.j, b.i)):
            if mol.atoms[other].element == "H":
                h_neighbors[a] += 1
            else:
                heavy_neighbors[a] += 1

    for i, atom in enumerate(mol.atoms):
        occupied = math.ceil(bond_sum[i] - 1e-9)
        if atom.explicit_h is not None:
            implicit = atom.explicit_h
        else:
            default = _DEFAULT_VALENCE.get(atom.element)
            if default is None:
                raise UnknownElementError(
                    f"element {atom.element!r} requires a bracket atom with explicit H count"
                )
            implicit = max(0, default - occupied - abs(atom.charge))
        atom.degree = heavy_neighbors[i]
        atom.total_h = implicit + h_neighbors[i]
        atom.valence = occupied + implicit


def featurize(mol: Molecule) -> np.ndarray:
    """Per-atom feature matrix of shape (n, 78).

    Layout: [0..43] one-hot element over :data:`ELEMENT_TABLE` (unknown
    elements take the final "other" slot), [44..54] one-hot degree 0-10,
    [55..65] one-hot total hydrogens 0-10, [66..76] one-hot valence
    0-10, [77] aromaticity bit. Out-of-range counts clamp to the last
    bucket.
    """
    x = np.zeros((mol.n_atoms, FEATURE_WIDTH), dtype=np.float64)
    for i, atom in enumerate(mol.atoms):
        x[i, _ELEMENT_SLOT.get(atom.element, 43)] = 1.0
        x[i, 44 + min(atom.degree, 10)] = 1.0
        x[i, 55 + min(atom.total_h, 10)] = 1.0
        x[i, 66 + min(atom.valence, 10)] = 1.0
        x[i, 77] = 1.0 if atom.aromatic else 0.0
    return x


def normalized_adjacency(mol: Molecule) -> np.ndarray:
    """Symmetrically normalized adjacency with self-loops.

    Returns D^(-1/2) (A + I) D^(-1/2) where D is the degree matrix of
    A + I; entries lie in [0, 1] and the diagonal is strictly positive.
    """
    n = mol.n_atoms
    a = np.eye(n, dtype=np.float64)
    for b in mol.bonds:
        a[b.i, b.j] = 1.0
        a[b.j, b.i] = 1.0
    d_inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return a * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def dump_edges(mol: Molecule, path: str | Path) -> None:
    """Debug dump: "n m" header then one "i j order" line per bond (aromatic = 4)."""
    code = {"single": 1, "double": 2, "triple": 3, "aromatic": 4}
    lines = [f"{mol.n_atoms} {len(mol.bonds)}"]
    lines += [f"{b.i} {b.j} {code[b.order]}" for b in mol.bonds]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
