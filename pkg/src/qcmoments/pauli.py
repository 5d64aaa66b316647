"""Pauli-string algebra with symbolic parameter-polynomial coefficients.

An n-qubit Pauli string is stored as a pair of integer bitmasks
``(x_mask, z_mask)``; bit ``i`` of each mask refers to qubit ``i``.  Qubit
``i`` carries

    (x, z) = (0, 0) -> I    (1, 0) -> X    (0, 1) -> Z    (1, 1) -> Y

so a string is the tensor product over qubits of ``i**(x*z) * X**x * Z**z``
(the ``i`` factor makes ``(1, 1)`` equal to Y rather than XZ).  A product of
two strings is again a string up to an overall power of ``i``; that phase is
returned separately and never stored in the masks.

Coefficients of operator sums are sparse polynomials in named real
parameters (:class:`ParamPoly`).  Keeping coefficients symbolic lets one
expensive operator expansion serve arbitrarily many parameter values: a
:class:`PauliSum` is expanded once and then ``bind``-ed per value, which is
pure coefficient arithmetic.

Canonical orderings (monomials sorted by name, strings sorted by
``(z_mask, x_mask)``) make every operation deterministic, so serialized
output and downstream floating-point sums are reproducible bit for bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = [
    "ZERO_TOL",
    "ParamPoly",
    "PauliString",
    "PauliSum",
    "mul_strings",
    "sum_multiply",
    "sum_power",
    "bind",
]

# Coefficients with magnitude below this are dropped everywhere.
ZERO_TOL = 1e-15

# i**e for e = 0..3; phases of Pauli products live in this cyclic group.
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}

# A monomial is a tuple of (name, exponent) pairs sorted by name, exp >= 1.
Monomial = tuple[tuple[str, int], ...]

_MONO_CACHE: dict[tuple[Monomial, Monomial], Monomial] = {}


def _mono_product(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    key = (a, b)
    hit = _MONO_CACHE.get(key)
    if hit is not None:
        return hit
    exps: dict[str, int] = dict(a)
    for name, e in b:
        exps[name] = exps.get(name, 0) + e
    out = tuple(sorted(exps.items()))
    _MONO_CACHE[key] = out
    return out


class ParamPoly:
    """Sparse multivariate polynomial with complex coefficients.

    Terms map a monomial (sorted tuple of ``(parameter, exponent)`` pairs)
    to its coefficient; the empty monomial is the constant term.  Instances
    are immutable by convention: all operations return new objects and the
    term dict is never mutated after construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, complex] | None = None):
        pruned = {}
        if terms:
            for mono, coeff in sorted(terms.items()):
                c = complex(coeff)
                if abs(c) >= ZERO_TOL:
                    pruned[mono] = c
        self.terms: dict[Monomial, complex] = pruned

    @classmethod
    def constant(cls, value: complex) -> "ParamPoly":
        return cls({(): complex(value)})

    @classmethod
    def variable(cls, name: str, power: int = 1, coeff: complex = 1.0) -> "ParamPoly":
        if power < 1:
            raise ValueError("power must be >= 1")
        return cls({((name, power),): complex(coeff)})

    @classmethod
    def zero(cls) -> "ParamPoly":
        return cls()

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> complex:
        """Value of a parameter-free polynomial; error if parameters remain."""
        if not self.terms:
            return 0j
        if not self.is_constant():
            names = sorted(self.parameters())
            raise ValueError(f"polynomial still depends on parameters {names}")
        return self.terms[()]

    def parameters(self) -> set[str]:
        return {name for mono in self.terms for name, _ in mono}

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max((sum(e for _, e in mono) for mono in self.terms), default=0)

    def evaluate(self, assignment: Mapping[str, float]) -> complex:
        """Evaluate at real parameter values; every parameter must be bound."""
        total = 0j
        for mono, coeff in self.terms.items():
            value = coeff
            for name, exp in mono:
                try:
                    value *= assignment[name] ** exp
                except KeyError:
                    raise ValueError(f"unbound parameter {name!r}") from None
            total += value
        return total

    def __add__(self, other) -> "ParamPoly":
        if not isinstance(other, (ParamPoly, int, float, complex)):
            return NotImplemented
        other = _as_poly(other)
        merged = dict(self.terms)
        for mono, coeff in other.terms.items():
            merged[mono] = merged.get(mono, 0j) + coeff
        return ParamPoly(merged)

    __radd__ = __add__

    def __neg__(self) -> "ParamPoly":
        return ParamPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "ParamPoly":
        if not isinstance(other, (ParamPoly, int, float, complex)):
            return NotImplemented
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "ParamPoly":
        return _as_poly(other) + (-self)

    def __mul__(self, other) -> "ParamPoly":
        if not isinstance(other, (ParamPoly, int, float, complex)):
            return NotImplemented
        other = _as_poly(other)
        out: dict[Monomial, complex] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = _mono_product(ma, mb)
                out[mono] = out.get(mono, 0j) + ca * cb
        return ParamPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float, complex)):
            other = ParamPoly.constant(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None  # mutable-dict backed; not usable as a key

    def format_text(self) -> str:
        """Render as e.g. ``(0.25)*x^1 + (-0.5)`` (round-trips exactly)."""
        if not self.terms:
            return "(0.0)"
        pieces = []
        for mono, coeff in self.terms.items():
            if coeff.imag == 0.0:
                body = repr(coeff.real)
            else:
                body = repr(coeff)[1:-1]  # strip complex()'s own parens
            factors = "".join(f"*{name}^{exp}" for name, exp in mono)
            pieces.append(f"({body}){factors}")
        return " + ".join(pieces)

    def __repr__(self) -> str:
        return f"ParamPoly[{self.format_text()}]"


def _as_poly(value) -> ParamPoly:
    if isinstance(value, ParamPoly):
        return value
    if isinstance(value, (int, float, complex)):
        return ParamPoly.constant(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as a polynomial")


@dataclass(frozen=True, slots=True)
class PauliString:
    """One tensor product of single-qubit Paulis in X/Z bitmask encoding."""

    n_qubits: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        top = 1 << self.n_qubits
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask uses bits beyond n_qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse e.g. ``"XIZY"``; qubit 0 is the leftmost letter."""
        if not label:
            raise ValueError("empty label")
        x = z = 0
        for i, letter in enumerate(label):
            try:
                xb, zb = _LETTER_BITS[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(label), x, z)

    def label(self) -> str:
        return "".join(
            _LETTERS[(self.x_mask >> i & 1, self.z_mask >> i & 1)]
            for i in range(self.n_qubits)
        )

    @property
    def weight(self) -> int:
        """Number of non-identity qubits."""
        return (self.x_mask | self.z_mask).bit_count()

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def sort_key(self) -> tuple[int, int]:
        return (self.z_mask, self.x_mask)

    def __str__(self) -> str:
        return self.label()


def mul_strings(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two strings as ``(phase, string)`` with phase in {1,i,-1,-i}."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    phase, x, z = _mul_masks(a.x_mask, a.z_mask, b.x_mask, b.z_mask)
    return phase, PauliString(a.n_qubits, x, z)


def _mul_masks(ax: int, az: int, bx: int, bz: int) -> tuple[complex, int, int]:
    # i-exponent per qubit: Y-phases of the factors, the ZX reorder sign,
    # minus the Y-phase re-absorbed into the product string.
    cx = ax ^ bx
    cz = az ^ bz
    e = (
        (ax & az).bit_count()
        + (bx & bz).bit_count()
        + 2 * (az & bx).bit_count()
        - (cx & cz).bit_count()
    ) & 3
    return _PHASES[e], cx, cz


class PauliSum:
    """Linear combination of Pauli strings with :class:`ParamPoly` coefficients.

    Terms are kept in canonical ``(z_mask, x_mask)`` order and empty
    coefficients are dropped, so iteration order (and hence every derived
    floating-point reduction) is deterministic.  Instances are immutable by
    convention.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliString, ParamPoly | complex]
        | Iterable[tuple[PauliString, ParamPoly | complex]]
        | None = None,
    ):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        self.n_qubits = n_qubits
        collected: dict[PauliString, ParamPoly] = {}
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for string, coeff in items:
            if string.n_qubits != n_qubits:
                raise ValueError("term qubit count differs from sum qubit count")
            poly = _as_poly(coeff)
            if string in collected:
                poly = collected[string] + poly
            collected[string] = poly
        self.terms: dict[PauliString, ParamPoly] = {
            s: p
            for s, p in sorted(collected.items(), key=lambda kv: kv[0].sort_key())
            if not p.is_zero()
        }

    @classmethod
    def _from_raw(
        cls, n_qubits: int, raw: dict[tuple[int, int], dict[Monomial, complex]]
    ) -> "PauliSum":
        """Fast path used by :func:`sum_multiply`: masks and monomial dicts."""
        out = cls.__new__(cls)
        out.n_qubits = n_qubits
        terms: dict[PauliString, ParamPoly] = {}
        for (x, z) in sorted(raw, key=lambda m: (m[1], m[0])):
            poly = ParamPoly(raw[(x, z)])
            if not poly.is_zero():
                terms[PauliString(n_qubits, x, z)] = poly
        out.terms = terms
        return out

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: ParamPoly | complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {PauliString.identity(n_qubits): coeff})

    @classmethod
    def from_label_terms(
        cls, terms: Iterable[tuple[str, ParamPoly | complex]]
    ) -> "PauliSum":
        pairs = [(PauliString.from_label(label), c) for label, c in terms]
        if not pairs:
            raise ValueError("need at least one labelled term")
        return cls(pairs[0][0].n_qubits, pairs)

    def strings(self) -> list[PauliString]:
        return list(self.terms)

    def coefficient(self, string: PauliString) -> ParamPoly:
        return self.terms.get(string, ParamPoly.zero())

    def parameters(self) -> set[str]:
        out: set[str] = set()
        for poly in self.terms.values():
            out |= poly.parameters()
        return out

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[PauliString, ParamPoly]]:
        return iter(self.terms.items())

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit-count mismatch in sum")
        merged = dict(self.terms)
        for s, p in other.terms.items():
            merged[s] = merged[s] + p if s in merged else p
        return PauliSum(self.n_qubits, merged)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def __neg__(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {s: -p for s, p in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return sum_multiply(self, other)
        scale = _as_poly(other)
        return PauliSum(self.n_qubits, {s: p * scale for s, p in self.terms.items()})

    def __rmul__(self, other):
        # Coefficients commute, so scalar and polynomial factors act either side.
        return self * other

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    __hash__ = None

    def bind(self, assignment: Mapping[str, float]) -> "PauliSum":
        """Evaluate all coefficients at real parameter values.

        Every parameter appearing anywhere in the sum must be assigned;
        terms whose bound coefficient falls below ``ZERO_TOL`` are dropped.
        """
        bound: dict[PauliString, ParamPoly] = {}
        for s, p in self.terms.items():
            value = p.evaluate(assignment)
            if abs(value) >= ZERO_TOL:
                bound[s] = ParamPoly.constant(value)
        out = PauliSum.__new__(PauliSum)
        out.n_qubits = self.n_qubits
        out.terms = bound  # input order is canonical already
        return out

    def is_hermitian(
        self, assignment: Mapping[str, float] | None = None, tol: float = 1e-12
    ) -> bool:
        """Check that all coefficients are real once parameters take real values.

        Pauli strings are Hermitian, so real coefficients are exactly the
        Hermiticity condition.  Symbolic sums are probed at ``assignment``
        (or at a fixed generic point when none is given).
        """
        params = self.parameters()
        if assignment is None:
            assignment = {name: 0.6180339887 + 0.1 * i for i, name in enumerate(sorted(params))}
        for poly in self.terms.values():
            if abs(poly.evaluate(assignment).imag) > tol:
                return False
        return True

    def to_text(self) -> str:
        """One term per line: ``<coeff-poly> <label>``, canonical order."""
        return "".join(f"{p.format_text()} {s.label()}\n" for s, p in self.terms.items())

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        terms: list[tuple[PauliString, ParamPoly]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                poly_part, label = line.rsplit(maxsplit=1)
            except ValueError:
                raise ValueError(f"line {lineno}: expected '<coeff-poly> <string>'") from None
            string = PauliString.from_label(label)
            terms.append((string, _parse_poly(poly_part, lineno)))
        if not terms:
            if n_qubits is None:
                raise ValueError("empty operator text needs an explicit qubit count")
            return cls.zero(n_qubits)
        n = n_qubits if n_qubits is not None else terms[0][0].n_qubits
        return cls(n, terms)

    def __repr__(self) -> str:
        if not self.terms:
            return f"PauliSum(n_qubits={self.n_qubits}, 0)"
        body = " + ".join(
            f"[{p.format_text()}]*{s.label()}" for s, p in list(self.terms.items())[:4]
        )
        more = "" if len(self.terms) <= 4 else f" ... ({len(self.terms)} terms)"
        return f"PauliSum({body}{more})"


_MONO_PIECE = re.compile(r"\((?P<coeff>[^()]*)\)(?P<factors>(?:\*\w+\^\d+)*)$")


def _parse_poly(text: str, lineno: int) -> ParamPoly:
    terms: dict[Monomial, complex] = {}
    for piece in text.split(" + "):
        piece = piece.strip()
        m = _MONO_PIECE.fullmatch(piece)
        if m is None:
            raise ValueError(f"line {lineno}: malformed coefficient term {piece!r}")
        try:
            coeff = complex(m.group("coeff"))
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {m.group('coeff')!r}") from None
        exps: dict[str, int] = {}
        for factor in m.group("factors").split("*")[1:]:
            name, exp = factor.split("^")
            exps[name] = exps.get(name, 0) + int(exp)
        mono = tuple(sorted(exps.items()))
        terms[mono] = terms.get(mono, 0j) + coeff
    return ParamPoly(terms)


def sum_multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Distributive product of two sums with like strings collected.

    Phases from string products are folded into coefficients; terms whose
    collected coefficient vanishes are dropped.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    # Flatten the right operand once; attribute lookups stay out of the hot loop.
    rhs = [
        (s.x_mask, s.z_mask, (s.x_mask & s.z_mask).bit_count(), p.terms)
        for s, p in b.terms.items()
    ]
    phases = _PHASES
    acc: dict[tuple[int, int], dict[Monomial, complex]] = {}
    for sa, pa in a.terms.items():
        ax, az = sa.x_mask, sa.z_mask
        ya = (ax & az).bit_count()
        a_terms = pa.terms
        for bx, bz, yb, b_terms in rhs:
            cx = ax ^ bx
            cz = az ^ bz
            e = (ya + yb + 2 * (az & bx).bit_count() - (cx & cz).bit_count()) & 3
            phase = phases[e]
            bucket = acc.get((cx, cz))
            if bucket is None:
                bucket = acc[(cx, cz)] = {}
            for ma, ca in a_terms.items():
                pc = phase * ca
                for mb, cb in b_terms.items():
                    mono = _mono_product(ma, mb)
                    prev = bucket.get(mono)
                    bucket[mono] = pc * cb if prev is None else prev + pc * cb
    return PauliSum._from_raw(a.n_qubits, acc)


def sum_power(a: PauliSum, k: int) -> list[PauliSum]:
    """Powers ``[a, a^2, ..., a^k]`` for k in 1..4, collected between steps."""
    if not 1 <= k <= 4:
        raise ValueError(f"power order must be in 1..4, got {k}")
    powers = [a]
    for _ in range(k - 1):
        powers.append(sum_multiply(a, powers[-1]))
    return powers


def bind(a: PauliSum, assignment: Mapping[str, float]) -> PauliSum:
    """Functional alias for :meth:`PauliSum.bind`."""
    return a.bind(assignment)
