"""Moment/cumulant machinery and the fourth-order Lanczos estimators.

Given Hamiltonian moments m_k = <H^k> (k = 1..4) taken in any trial state
with nonzero ground-state overlap, the cumulants c_n follow the recursion

    c_n = m_n - sum_{p=0}^{n-2} binom(n-1, p) * c_{p+1} * m_{n-1-p}

and the fourth-order ground-energy estimate is

    E = c1 - c2^2 / (c3^2 - c2*c4) * (sqrt(3*c3^2 - 2*c2*c4) - c3).

Arbitrary ground-state observables are obtained from the same moment data:
extend H to H + lambda*A with ``lambda`` a symbolic coefficient parameter,
expand the powers once, and differentiate the energy estimate at lambda = 0
by a central finite difference.  Both +epsilon and -epsilon evaluations
recombine one expectation table, so the derivative parameter never touches
the state — only the classical post-processing.

All moment accumulations use ``math.fsum``: fourth powers of lattice models
contribute tens of thousands of mixed-sign terms and naive summation loses
the fourth cumulant to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .pauli import ParamPoly, PauliString, PauliSum, sum_power
from .states import State, expectation_table

__all__ = [
    "OBSERVABLE_PARAM",
    "MomentSet",
    "CumulantSet",
    "QcmResult",
    "SweepRow",
    "EstimatorError",
    "NegativeRadicandError",
    "SingularDenominatorError",
    "cumulant_sequence",
    "cumulants",
    "compute_moments",
    "lanczos_energy",
    "observable_estimate",
    "richardson_consistency",
    "qcm_sweep",
]

# Reserved coefficient-parameter name for the observable extension H + lambda*A.
OBSERVABLE_PARAM = "lambda"

MomentSource = Union[State, Mapping[PauliString, float]]


class EstimatorError(RuntimeError):
    """The fourth-order estimate left its validity region."""

    def __init__(self, message: str, *, denominator: float, radicand: float,
                 sign: str | None = None):
        tag = f" at {sign}" if sign else ""
        super().__init__(message + tag)
        self.denominator = denominator
        self.radicand = radicand
        self.sign = sign


class NegativeRadicandError(EstimatorError):
    pass


class SingularDenominatorError(EstimatorError):
    pass


@dataclass(frozen=True)
class MomentSet:
    """<H^k> for k = 1..4."""

    m1: float
    m2: float
    m3: float
    m4: float

    def validate(self, *, var_tol: float = 1e-10, cs_tol: float = 1e-8) -> None:
        """Consistency checks that hold for moments of any valid state."""
        if self.m2 < self.m1**2 - var_tol:
            raise ValueError("m2 < m1^2: variance would be negative")
        if self.m4 < self.m2**2 - cs_tol:
            raise ValueError("m4 < m2^2: Cauchy-Schwarz on H^2 violated")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m1, self.m2, self.m3, self.m4)


@dataclass(frozen=True)
class CumulantSet:
    """Connected moments c_n for n = 1..4."""

    c1: float
    c2: float
    c3: float
    c4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.c1, self.c2, self.c3, self.c4)


@dataclass(frozen=True)
class QcmResult:
    """Fourth-order energy estimate plus the diagnostics that gate it."""

    energy: float
    mode: str  # "lanczos" | "eigenstate-fallback"
    denominator: float  # c3^2 - c2*c4
    radicand: float  # 3*c3^2 - 2*c2*c4


def cumulant_sequence(moments: Sequence) -> list:
    """Cumulants generated from the defining recursion, any ring elements.

    Works for floats and for symbolic coefficients alike (only +, -, * and
    integer binomials are used), so tests can expand the recursion
    symbolically and compare against independently derived closed forms.
    """
    ms = [1] + list(moments)  # ms[0] = <H^0>
    cs: list = []
    for n in range(1, len(ms)):
        value = ms[n]
        for p in range(0, n - 1):
            value = value - math.comb(n - 1, p) * cs[p] * ms[n - 1 - p]
        cs.append(value)
    return cs


def cumulants(moments: MomentSet) -> CumulantSet:
    c1, c2, c3, c4 = cumulant_sequence(moments.as_tuple())
    return CumulantSet(c1, c2, c3, c4)


def _table_value(table: Mapping[PauliString, float], string: PauliString) -> float:
    if string.is_identity():
        return 1.0
    try:
        return table[string]
    except KeyError:
        raise ValueError(
            f"expectation table is missing string {string.label()}"
        ) from None


def _moment_of(power: PauliSum, table: Mapping[PauliString, float]) -> float:
    contributions = []
    for string, poly in power.terms.items():
        coeff = poly.constant_value()
        if abs(coeff.imag) > 1e-9 * max(1.0, abs(coeff)):
            raise ValueError(
                f"non-real coefficient {coeff} on {string.label()}:"
                " moments need a Hermitian operator"
            )
        contributions.append(coeff.real * _table_value(table, string))
    return math.fsum(contributions)


def union_strings(powers: Iterable[PauliSum]) -> set[PauliString]:
    out: set[PauliString] = set()
    for p in powers:
        out.update(p.terms)
    return out


def _resolve_table(
    source: MomentSource, powers: Sequence[PauliSum], extra: Iterable[PauliString] = ()
) -> Mapping[PauliString, float]:
    if isinstance(source, Mapping):
        return source
    needed = union_strings(powers)
    needed.update(extra)
    return expectation_table(source, sorted(needed, key=lambda s: s.sort_key()))


def compute_moments(h_powers: Sequence[PauliSum], source: MomentSource) -> MomentSet:
    """Moments m_1..m_4 of a bound operator from a state or expectation table.

    ``h_powers`` must be the four powers produced by :func:`sum_power` on a
    Hermitian, fully bound operator.  A table source must cover every
    non-identity string appearing in the powers.
    """
    if len(h_powers) != 4:
        raise ValueError("need exactly the first four powers")
    table = _resolve_table(source, h_powers)
    m = [_moment_of(p, table) for p in h_powers]
    return MomentSet(*m)


def lanczos_energy(c: CumulantSet, eigen_tol: float | None = None) -> QcmResult:
    """Fourth-order ground-energy estimate from cumulants.

    At an exact eigenstate all connected moments vanish and the closed form
    is 0/0; the estimate then falls back to c1 (its limit).  The fallback
    threshold is relative to max(1, c1^2) so behaviour is scale-free.
    A negative radicand is reported as an error, never clamped: it means the
    estimate left its validity region.
    """
    c1, c2, c3, c4 = c.as_tuple()
    tol = eigen_tol if eigen_tol is not None else 1e-10 * max(1.0, c1 * c1)
    denominator = c3 * c3 - c2 * c4
    radicand = 3.0 * c3 * c3 - 2.0 * c2 * c4
    if c2 < tol:
        return QcmResult(c1, "eigenstate-fallback", denominator, radicand)
    if radicand < 0.0:
        raise NegativeRadicandError(
            f"negative radicand {radicand:.6g}",
            denominator=denominator, radicand=radicand,
        )
    scale = max(c2**3, c3 * c3, abs(c2 * c4))
    if denominator == 0.0 or abs(denominator) < 1e-14 * scale:
        raise SingularDenominatorError(
            f"denominator {denominator:.6g} below resolution",
            denominator=denominator, radicand=radicand,
        )
    energy = c1 - c2 * c2 / denominator * (math.sqrt(radicand) - c3)
    return QcmResult(energy, "lanczos", denominator, radicand)


def _energy_at(
    powers: Sequence[PauliSum],
    assignment: Mapping[str, float],
    table: Mapping[PauliString, float],
    eigen_tol: float | None,
) -> QcmResult:
    bound = [p.bind(assignment) for p in powers]
    return lanczos_energy(cumulants(compute_moments(bound, table)), eigen_tol)


def _check_extension_operands(h: PauliSum, a: PauliSum) -> None:
    if h.n_qubits != a.n_qubits:
        raise ValueError("operator qubit counts differ")
    for op, name in ((h, "hamiltonian"), (a, "observable")):
        params = op.parameters()
        if params:
            raise ValueError(f"{name} must be fully bound, found parameters {sorted(params)}")


def observable_estimate(
    h: PauliSum,
    a: PauliSum,
    source: MomentSource,
    epsilon: float = 1e-4,
    *,
    eigen_tol: float | None = None,
) -> float:
    """Ground-state expectation of ``a`` from moments of ``h + lambda*a``.

    Expands the extended operator's powers once, evaluates the fourth-order
    energy at lambda = +/-epsilon from a single expectation table, and
    returns the central difference.  Estimator failures at either sign
    propagate tagged with the sign.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    _check_extension_operands(h, a)
    powers = sum_power(h + ParamPoly.variable(OBSERVABLE_PARAM) * a, 4)
    table = _resolve_table(source, powers, extra=a.terms)
    energies = {}
    for sign, lam in (("+epsilon", epsilon), ("-epsilon", -epsilon)):
        try:
            energies[sign] = _energy_at(powers, {OBSERVABLE_PARAM: lam}, table, eigen_tol)
        except EstimatorError as err:
            raise type(err)(
                str(err), denominator=err.denominator, radicand=err.radicand, sign=sign
            ) from err
    return (energies["+epsilon"].energy - energies["-epsilon"].energy) / (2.0 * epsilon)


def richardson_consistency(
    h: PauliSum,
    a: PauliSum,
    source: MomentSource,
    epsilon: float = 1e-4,
    *,
    eigen_tol: float | None = None,
) -> tuple[float, float, float]:
    """Estimates at epsilon and epsilon/2 plus their gap.

    The central difference is second-order accurate, so the gap bounds the
    truncation error; a large gap flags an ill-chosen step.
    """
    full = observable_estimate(h, a, source, epsilon, eigen_tol=eigen_tol)
    half = observable_estimate(h, a, source, epsilon / 2.0, eigen_tol=eigen_tol)
    return full, half, abs(full - half)


@dataclass(frozen=True)
class SweepRow:
    """One parameter point of a moment sweep; None marks a failed estimate."""

    params: dict[str, float]
    e_direct: float
    e_l4: float | None
    a_direct: float | None
    a_l4: float | None
    status: str


def qcm_sweep(
    h_powers: Sequence[PauliSum],
    a: PauliSum | None,
    table: Mapping[PauliString, float],
    grid: Mapping[str, Sequence[float]],
    epsilon: float = 1e-4,
    *,
    eigen_tol: float | None = None,
) -> list[SweepRow]:
    """Evaluate direct and fourth-order estimates over a parameter grid.

    The grid is the cartesian product of the value lists in key order.  All
    work is coefficient recombination against the supplied table: no state
    contraction happens inside the sweep, which is what makes dense grids
    essentially free once the table exists.  Per-point estimator failures
    are recorded in the row status and never abort the sweep.
    """
    if len(h_powers) != 4:
        raise ValueError("need exactly the first four powers")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    names = list(grid)
    covered = union_strings(h_powers)
    missing = [s for s in covered if not s.is_identity() and s not in table]
    if missing:
        raise ValueError(
            f"table is missing {len(missing)} strings, e.g. {missing[0].label()}"
        )
    points: list[tuple[float, ...]] = [()]
    for name in names:
        values = list(grid[name])
        points = [p + (v,) for p in points for v in values]
    rows: list[SweepRow] = []
    for point in points:
        assignment = dict(zip(names, point))
        base = dict(assignment)
        if a is not None:
            base[OBSERVABLE_PARAM] = 0.0
        status_parts: list[str] = []
        bound = [p.bind(base) for p in h_powers]
        m = compute_moments(bound, table)
        e_direct = m.m1
        e_l4 = None
        try:
            e_l4 = lanczos_energy(cumulants(m), eigen_tol).energy
        except EstimatorError as err:
            status_parts.append(_status_tag(err, "lambda=0"))
        a_direct = None
        a_l4 = None
        if a is not None:
            a_direct = _moment_of(a.bind(assignment), table)
            plus = minus = None
            try:
                plus = _energy_at(
                    h_powers, {**assignment, OBSERVABLE_PARAM: epsilon}, table, eigen_tol
                )
            except EstimatorError as err:
                status_parts.append(_status_tag(err, "+epsilon"))
            try:
                minus = _energy_at(
                    h_powers, {**assignment, OBSERVABLE_PARAM: -epsilon}, table, eigen_tol
                )
            except EstimatorError as err:
                status_parts.append(_status_tag(err, "-epsilon"))
            if plus is not None and minus is not None:
                a_l4 = (plus.energy - minus.energy) / (2.0 * epsilon)
        status = "ok" if not status_parts else ";".join(status_parts)
        rows.append(SweepRow(assignment, e_direct, e_l4, a_direct, a_l4, status))
    return rows


def _status_tag(err: EstimatorError, where: str) -> str:
    kind = "negative-radicand" if isinstance(err, NegativeRadicandError) else \
        "singular-denominator" if isinstance(err, SingularDenominatorError) else "estimator-error"
    return f"{kind}@{where}"
