"""Experiment runner: seeded sweeps, measurement census, CSV/JSON emission.

Three subcommands, all driven by an :class:`ExperimentConfig` that merges
built-in defaults, an optional flat ``key = value`` config file and command
line flags (flags win):

* ``qcm fig1``   three-trial-state XXZ sweep: energy and a two-point ZZ
  correlation estimated across the anisotropy range from expectation tables
  of just three fixed trial states, against per-point exact values.
* ``qcm fig2``   noise-robustness sweep: staggered magnetisation of a
  staggered-field Heisenberg chain estimated from randomly rotated,
  depolarized trial states, against the exact ground-state value.
* ``qcm census`` measurement-cost table for the fourth-power expansion.

Determinism contract: a fixed (config, seed) pair produces byte-identical
output files.  Per-row randomness is seeded from
``numpy.random.SeedSequence(seed, spawn_key=(g_index, fidelity_index,
trial_index))``, so results do not depend on evaluation order; noise levels
reuse the same trial state by construction and are deliberately excluded
from the spawn key.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np

from .measure import CENSUS_CONVENTIONS, census
from .models import (
    LatticeSpec,
    build_staggered_afm,
    build_staggered_magnetisation,
    build_xxz,
    build_zz_correlation,
)
from .moments import (
    OBSERVABLE_PARAM,
    EstimatorError,
    NegativeRadicandError,
    SingularDenominatorError,
    compute_moments,
    cumulants,
    lanczos_energy,
    qcm_sweep,
    union_strings,
)
from .pauli import ParamPoly, PauliSum, sum_power
from .states import (
    DensityMatrix,
    FidelityTargetError,
    StateVector,
    depolarize,
    depolarize_global,
    exact_ground_state,
    expectation,
    expectation_table,
    random_gue_hermitian,
    rotate_trial,
    tune_theta_for_fidelity,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FIG1_COLUMNS",
    "FIG2_COLUMNS",
    "parse_config_file",
    "run_fig1",
    "run_fig2",
    "run_census",
    "emit",
    "main",
]

FIG1_COLUMNS = [
    "x", "trial_label", "E_exact", "E_direct", "E_L4",
    "C_exact", "C_direct", "C_L4", "status",
]
FIG2_COLUMNS = [
    "g", "F_target", "F_achieved", "p", "trial_index",
    "M_exact", "M_direct", "M_L4", "status",
]

# Trial states are exact ground states at these anisotropy anchors; each
# serves the half-open interval ending at its right boundary.
_FIG1_TRIALS = (("ferro", -1.0), ("neel", 0.0), ("afm", 1.0))
_REGION_EDGE_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid configuration (bad value, bad file, bad combination)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    rows: int = 4
    cols: int = 3
    sites: int = 6
    corr_i: int = 0
    corr_j: int = 5
    x_min: float = -0.975
    x_max: float = 0.975
    x_step: float = 0.05
    g_min: float = 0.0
    g_max: float = 2.0
    g_step: float = 0.1
    epsilon: float = 1e-4
    fidelities: tuple[float, ...] = (0.4, 0.7, 0.9)
    noise: tuple[float, ...] = (0.01, 0.1, 0.5)
    trials: int = 10
    seed: int = 42
    noise_mode: str = "per-qubit"
    out: str | None = None
    fmt: str = "csv"
    with_correlation: bool = False
    dump_operator: str | None = None

    def validate(self) -> None:
        if self.experiment not in ("fig1", "fig2", "census"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        if self.experiment in ("fig1", "census"):
            if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
                raise ConfigError("grid needs at least 2 sites")
            q = self.rows * self.cols
            if not (0 <= self.corr_i < q and 0 <= self.corr_j < q):
                raise ConfigError("correlation sites out of range")
            if self.corr_i == self.corr_j:
                raise ConfigError("correlation sites must differ")
        if self.experiment == "fig1":
            if self.x_step <= 0:
                raise ConfigError("x_step must be positive")
            if self.x_max < self.x_min:
                raise ConfigError("empty x grid")
            if self.x_min <= -1.0 or self.x_max >= 1.0:
                raise ConfigError("x grid must lie strictly inside (-1, 1)")
        if self.experiment == "fig2":
            if self.sites < 2:
                raise ConfigError("chain needs at least 2 sites")
            if self.g_step <= 0:
                raise ConfigError("g_step must be positive")
            if self.g_max < self.g_min:
                raise ConfigError("empty g grid")
            if not self.fidelities:
                raise ConfigError("need at least one fidelity target")
            if any(not 0.0 < f <= 1.0 for f in self.fidelities):
                raise ConfigError("fidelity targets must lie in (0, 1]")
            if not self.noise:
                raise ConfigError("need at least one noise level")
            if any(not 0.0 <= p <= 1.0 for p in self.noise):
                raise ConfigError("noise levels must lie in [0, 1]")
            if self.trials < 1:
                raise ConfigError("need at least one trial")
            if not 0 <= self.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            if self.noise_mode not in ("per-qubit", "global"):
                raise ConfigError("noise_mode must be per-qubit or global")


_FIELD_PARSERS = {
    "experiment": str,
    "rows": int,
    "cols": int,
    "sites": int,
    "corr_i": int,
    "corr_j": int,
    "x_min": float,
    "x_max": float,
    "x_step": float,
    "g_min": float,
    "g_max": float,
    "g_step": float,
    "epsilon": float,
    "fidelities": lambda s: _float_tuple(s),
    "noise": lambda s: _float_tuple(s),
    "trials": int,
    "seed": int,
    "noise_mode": str,
    "out": str,
    "fmt": str,
    "with_correlation": lambda s: _parse_bool(s),
    "dump_operator": str,
}

# Config-file / flag spellings that differ from the dataclass field name.
_KEY_ALIASES = {"format": "fmt"}


def _float_tuple(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    parts = [p for p in str(value).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"empty list value {value!r}")
    return tuple(float(p) for p in parts)


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def parse_config_file(path: str) -> dict[str, str]:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip()] = value.strip()
    return values


def build_config(
    experiment: str,
    file_values: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> ExperimentConfig:
    """Merge defaults < config file < explicit overrides, then validate."""
    config = ExperimentConfig(experiment=experiment)
    for source in (file_values or {}), (overrides or {}):
        parsed = {}
        for key, value in source.items():
            if value is None:
                continue
            name = _KEY_ALIASES.get(key, key)
            if name == "experiment":
                continue
            if name not in _FIELD_PARSERS:
                raise ConfigError(f"unknown configuration key {key!r}")
            try:
                parsed[name] = _FIELD_PARSERS[name](value)
            except (TypeError, ValueError) as err:
                raise ConfigError(f"bad value for {key!r}: {err}") from None
        config = replace(config, **parsed)
    config.validate()
    return config


def _grid(lo: float, hi: float, step: float) -> list[float]:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def _fig1_region(x: float) -> str:
    # Boundaries at +-1/2 belong to the region on their left.
    if x <= -0.5 + _REGION_EDGE_TOL:
        return "ferro"
    if x <= 0.5 + _REGION_EDGE_TOL:
        return "neel"
    return "afm"


def _observable_value(state, observable: PauliSum) -> float:
    return math.fsum(
        poly.constant_value().real * expectation(state, s)
        for s, poly in observable.terms.items()
    )


def run_fig1(config: ExperimentConfig) -> list[dict]:
    """Three-trial-state sweep of XXZ energy and ZZ correlation.

    Exactly one expectation table is built per trial state regardless of
    grid size; every grid point is classical recombination of those tables.
    Exact references come from per-point diagonalization.
    """
    config.validate()
    lattice = LatticeSpec.grid(config.rows, config.cols)
    h = build_xxz(lattice)
    corr = build_zz_correlation(lattice, config.corr_i, config.corr_j)
    powers = sum_power(h + ParamPoly.variable(OBSERVABLE_PARAM) * corr, 4)
    needed = union_strings(powers) | set(corr.terms)
    needed_sorted = sorted(needed, key=lambda s: s.sort_key())

    xs = _grid(config.x_min, config.x_max, config.x_step)
    tables = {}
    for label, anchor in _FIG1_TRIALS:
        _, trial = exact_ground_state(h.bind({"x": anchor}))
        tables[label] = expectation_table(trial, needed_sorted)

    by_region: dict[str, list[int]] = {label: [] for label, _ in _FIG1_TRIALS}
    for i, x in enumerate(xs):
        by_region[_fig1_region(x)].append(i)

    sweep_rows: dict[int, object] = {}
    for label, _ in _FIG1_TRIALS:
        indices = by_region[label]
        if not indices:
            continue
        rows = qcm_sweep(
            powers, corr, tables[label], {"x": [xs[i] for i in indices]}, config.epsilon
        )
        for i, row in zip(indices, rows):
            sweep_rows[i] = row

    out = []
    for i, x in enumerate(xs):
        e_exact, psi0 = exact_ground_state(h.bind({"x": x}))
        c_exact = _observable_value(psi0, corr)
        row = sweep_rows[i]
        out.append({
            "x": x,
            "trial_label": _fig1_region(x),
            "E_exact": e_exact,
            "E_direct": row.e_direct,
            "E_L4": row.e_l4,
            "C_exact": c_exact,
            "C_direct": row.a_direct,
            "C_L4": row.a_l4,
            "status": row.status,
        })
    return out


def _contract_table(
    table: Mapping, weights: Mapping, p: float, mode: str
) -> dict:
    """Expectation table of the depolarized state, derived classically.

    The per-qubit channel scales a weight-w string by (1-p)^w; the global
    channel scales every non-identity string by (1-p).  Either way the
    noisy table follows exactly from the noiseless one.
    """
    if mode == "per-qubit":
        return {s: v * (1.0 - p) ** weights[s] for s, v in table.items()}
    return {s: v if s.is_identity() else v * (1.0 - p) for s, v in table.items()}


def _estimator_status(err: EstimatorError) -> str:
    kind = (
        "negative-radicand" if isinstance(err, NegativeRadicandError)
        else "singular-denominator" if isinstance(err, SingularDenominatorError)
        else "estimator-error"
    )
    return f"{kind}@{err.sign}" if err.sign else kind


def run_fig2(config: ExperimentConfig) -> list[dict]:
    """Noise-robustness sweep for the staggered magnetisation.

    For every (g, fidelity target, trial) a rotated trial state is prepared
    and measured once; every noise level is then classical post-processing
    of that single table (the depolarizing channel acts diagonally on Pauli
    expectations).  The direct estimate is evaluated against the densely
    materialized noisy density matrix, which the table contraction must and
    does reproduce.
    """
    config.validate()
    n = config.sites
    h = build_staggered_afm(n)
    mag = build_staggered_magnetisation(n)
    powers = sum_power(h + ParamPoly.variable(OBSERVABLE_PARAM) * mag, 4)
    needed = union_strings(powers) | set(mag.terms)
    needed_sorted = sorted(needed, key=lambda s: s.sort_key())
    weights = {s: s.weight for s in needed_sorted}
    eps = config.epsilon
    gs = _grid(config.g_min, config.g_max, config.g_step)

    rows: list[tuple[tuple, dict]] = []
    for gi, g in enumerate(gs):
        e0, psi0 = exact_ground_state(h.bind({"g": g}))
        m_exact = _observable_value(psi0, mag)
        bound_plus = [pw.bind({"g": g, OBSERVABLE_PARAM: +eps}) for pw in powers]
        bound_minus = [pw.bind({"g": g, OBSERVABLE_PARAM: -eps}) for pw in powers]
        for fi, f_target in enumerate(config.fidelities):
            for trial in range(config.trials):
                rng = np.random.default_rng(
                    np.random.SeedSequence(config.seed, spawn_key=(gi, fi, trial))
                )
                theta = f_achieved = None
                for _ in range(16):
                    generator = random_gue_hermitian(psi0.amplitudes.size, rng)
                    try:
                        theta, f_achieved = tune_theta_for_fidelity(
                            psi0, generator, f_target
                        )
                    except FidelityTargetError:
                        continue
                    break
                if theta is None:
                    raise RuntimeError(
                        f"could not reach fidelity {f_target} after 16 generator draws"
                    )
                psi_t = rotate_trial(psi0, generator, theta)
                table0 = expectation_table(psi_t, needed_sorted)
                rho0 = psi_t.density_matrix()
                for pi, p in enumerate(config.noise):
                    if config.noise_mode == "per-qubit":
                        rho_p = depolarize(rho0, p)
                    else:
                        rho_p = depolarize_global(rho0, p)
                    m_direct = _observable_value(rho_p, mag)
                    table_p = _contract_table(table0, weights, p, config.noise_mode)
                    status_parts = []
                    energies = {}
                    for sign, bound in (("+epsilon", bound_plus), ("-epsilon", bound_minus)):
                        try:
                            result = lanczos_energy(
                                cumulants(compute_moments(bound, table_p))
                            )
                            energies[sign] = result.energy
                        except EstimatorError as err:
                            err.sign = sign
                            status_parts.append(_estimator_status(err))
                    m_l4 = None
                    if len(energies) == 2:
                        m_l4 = (energies["+epsilon"] - energies["-epsilon"]) / (2.0 * eps)
                    rows.append((
                        (gi, fi, pi, trial),
                        {
                            "g": g,
                            "F_target": f_target,
                            "F_achieved": f_achieved,
                            "p": p,
                            "trial_index": trial,
                            "M_exact": m_exact,
                            "M_direct": m_direct,
                            "M_L4": m_l4,
                            "status": "ok" if not status_parts else ";".join(status_parts),
                        },
                    ))
    rows.sort(key=lambda item: item[0])
    return [record for _, record in rows]


def run_census(config: ExperimentConfig):
    """Census of the fourth-power expansion for the configured lattice."""
    config.validate()
    lattice = LatticeSpec.grid(config.rows, config.cols)
    h = build_xxz(lattice)
    corr = None
    if config.with_correlation:
        corr = build_zz_correlation(lattice, config.corr_i, config.corr_j)
    return census(h, corr)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def emit(rows: Sequence[Mapping], columns: Sequence[str], fmt: str, path: str) -> None:
    """Write rows as CSV (12 significant digits, LF endings) or JSON."""
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_format_cell(row.get(c)) for c in columns))
        body = "\n".join(lines) + "\n"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    elif fmt == "json":
        records = []
        for row in rows:
            record = {}
            for c in columns:
                v = row.get(c)
                if isinstance(v, (float, np.floating)):
                    v = float(format(float(v), ".12g"))
                elif isinstance(v, (int, np.integer)):
                    v = int(v)
                record[c] = v
            records.append(record)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            json.dump(records, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


def _print_census(config: ExperimentConfig, stream) -> None:
    report = run_census(config)
    print(f"{'convention':36s} {'n_strings':>10s} {'n_tpb':>8s}", file=stream)
    for name in CENSUS_CONVENTIONS:
        tpb = str(report.n_tpb) if name.startswith("union") else "-"
        print(f"{name:36s} {report.breakdown[name]:>10d} {tpb:>8s}", file=stream)
    print(f"default convention: {report.convention}", file=stream)
    if config.dump_operator:
        lattice = LatticeSpec.grid(config.rows, config.cols)
        op = build_xxz(lattice)
        if config.with_correlation:
            corr = build_zz_correlation(lattice, config.corr_i, config.corr_j)
            op = op + ParamPoly.variable(OBSERVABLE_PARAM) * corr
        with open(config.dump_operator, "w", encoding="utf-8", newline="") as fh:
            fh.write(op.to_text())


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--epsilon", type=float, help="finite-difference step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcm",
        description="Moment-based ground-state estimators for Heisenberg-type models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("fig1", help="three-trial-state XXZ energy/correlation sweep")
    _add_common(p1)
    p1.add_argument("--rows", type=int)
    p1.add_argument("--cols", type=int)
    p1.add_argument("--x-min", dest="x_min", type=float)
    p1.add_argument("--x-max", dest="x_max", type=float)
    p1.add_argument("--x-step", dest="x_step", type=float)
    p1.add_argument("--corr-i", dest="corr_i", type=int)
    p1.add_argument("--corr-j", dest="corr_j", type=int)

    p2 = sub.add_parser("fig2", help="noisy staggered-magnetisation sweep")
    _add_common(p2)
    p2.add_argument("--sites", type=int)
    p2.add_argument("--g-min", dest="g_min", type=float)
    p2.add_argument("--g-max", dest="g_max", type=float)
    p2.add_argument("--g-step", dest="g_step", type=float)
    p2.add_argument("--fidelities", help="comma-separated fidelity targets")
    p2.add_argument("--noise", help="comma-separated depolarizing strengths")
    p2.add_argument("--trials", type=int)
    p2.add_argument("--seed", type=int)
    p2.add_argument("--noise-mode", dest="noise_mode", choices=("per-qubit", "global"))

    p3 = sub.add_parser("census", help="Pauli-string and TPB measurement counts")
    p3.add_argument("--config", help="flat key = value configuration file")
    p3.add_argument("--rows", type=int)
    p3.add_argument("--cols", type=int)
    p3.add_argument("--with-correlation", dest="with_correlation", action="store_true",
                    default=None)
    p3.add_argument("--corr-i", dest="corr_i", type=int)
    p3.add_argument("--corr-j", dest="corr_j", type=int)
    p3.add_argument("--dump-operator", dest="dump_operator",
                    help="write the symbolic operator in text form to this path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else None
        overrides = {
            k: v for k, v in vars(args).items() if k not in ("command", "config")
        }
        config = build_config(args.command, file_values, overrides)
        if args.command == "fig1":
            rows = run_fig1(config)
            emit(rows, FIG1_COLUMNS, config.fmt, config.out or "fig1.csv")
        elif args.command == "fig2":
            rows = run_fig2(config)
            emit(rows, FIG2_COLUMNS, config.fmt, config.out or "fig2.csv")
        else:
            _print_census(config, sys.stdout)
    except ConfigError as err:
        print(f"qcm: configuration error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"qcm: i/o error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
