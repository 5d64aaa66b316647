"""Builders for Heisenberg-type spin Hamiltonians and observables.

All lattices are open-boundary; sites are indexed row-major from 0, and the
alternating sign in staggered operators follows that 0-based index.  Model
parameters stay symbolic (``x`` for the XXZ anisotropy sweep, ``g`` for the
staggered field), so a built operator can be expanded once and bound at many
parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pauli import ParamPoly, PauliString, PauliSum

__all__ = [
    "LatticeSpec",
    "build_xxz",
    "build_zz_correlation",
    "build_staggered_afm",
    "build_staggered_magnetisation",
]


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary chain or rectangular grid with row-major site indexing."""

    kind: str  # "chain" | "square-grid"
    rows: int = 0
    cols: int = 0
    n_sites_chain: int = 0

    @classmethod
    def chain(cls, n_sites: int) -> "LatticeSpec":
        if n_sites < 2:
            raise ValueError("chain needs at least 2 sites")
        return cls(kind="chain", n_sites_chain=n_sites)

    @classmethod
    def grid(cls, rows: int, cols: int) -> "LatticeSpec":
        if rows < 1 or cols < 1 or rows * cols < 2:
            raise ValueError("grid needs at least 2 sites")
        return cls(kind="square-grid", rows=rows, cols=cols)

    @property
    def n_sites(self) -> int:
        return self.n_sites_chain if self.kind == "chain" else self.rows * self.cols

    def edges(self) -> list[tuple[int, int]]:
        """Nearest-neighbour pairs (i, j) with i < j, each exactly once."""
        if self.kind == "chain":
            return [(i, i + 1) for i in range(self.n_sites_chain - 1)]
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                site = r * self.cols + c
                if c + 1 < self.cols:
                    out.append((site, site + 1))
                if r + 1 < self.rows:
                    out.append((site, site + self.cols))
        return sorted(out)


def _two_site(n: int, i: int, j: int, letter: str) -> PauliString:
    xb = 1 if letter in ("X", "Y") else 0
    zb = 1 if letter in ("Z", "Y") else 0
    return PauliString(n, (xb << i) | (xb << j), (zb << i) | (zb << j))


def build_xxz(lattice: LatticeSpec) -> PauliSum:
    """XXZ Hamiltonian over parameter ``x``.

    H = 1/(4q) * sum over edges of (Z_i Z_j + x * (X_i X_j + Y_i Y_j)),
    with q the number of sites; 3 strings per edge.
    """
    q = lattice.n_sites
    norm = 1.0 / (4.0 * q)
    x_coeff = ParamPoly.variable("x", coeff=norm)
    terms = []
    for i, j in lattice.edges():
        terms.append((_two_site(q, i, j, "Z"), ParamPoly.constant(norm)))
        terms.append((_two_site(q, i, j, "X"), x_coeff))
        terms.append((_two_site(q, i, j, "Y"), x_coeff))
    return PauliSum(q, terms)


def build_zz_correlation(lattice: LatticeSpec, i: int, j: int) -> PauliSum:
    """The two-point correlation operator Z_i Z_j (unit coefficient)."""
    q = lattice.n_sites
    if not (0 <= i < q and 0 <= j < q):
        raise ValueError(f"site out of range for {q}-site lattice")
    if i == j:
        raise ValueError("correlation needs two distinct sites")
    return PauliSum(q, {_two_site(q, i, j, "Z"): 1.0})


def build_staggered_afm(n_sites: int) -> PauliSum:
    """Isotropic Heisenberg chain with a staggered Z field over parameter ``g``.

    H = 1/4 * sum over edges of (XX + YY + ZZ) + g/2 * sum_k (-1)^k Z_k.
    """
    if n_sites < 2:
        raise ValueError("chain needs at least 2 sites")
    lattice = LatticeSpec.chain(n_sites)
    terms = []
    for i, j in lattice.edges():
        for letter in ("X", "Y", "Z"):
            terms.append((_two_site(n_sites, i, j, letter), ParamPoly.constant(0.25)))
    for k in range(n_sites):
        sign = -0.5 if k % 2 else 0.5
        terms.append(
            (PauliString(n_sites, 0, 1 << k), ParamPoly.variable("g", coeff=sign))
        )
    return PauliSum(n_sites, terms)


def build_staggered_magnetisation(n_sites: int) -> PauliSum:
    """Staggered magnetisation M = 1/2 * sum_k (-1)^k Z_k."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    terms = []
    for k in range(n_sites):
        sign = -0.5 if k % 2 else 0.5
        terms.append((PauliString(n_sites, 0, 1 << k), ParamPoly.constant(sign)))
    return PauliSum(n_sites, terms)
