"""Command-line runner: JSON configs in, CSV plus meta records out.

Verbs
-----
``nvwgm run <config>``
    Single scenario (transfer, entangle, decay_check, tier_compare).
    Writes ``<prefix>_timeseries.csv`` (header ``t,<columns...>`` with
    ``se_<column>`` standard-error columns for MCWF ensembles) and
    ``<prefix>_meta`` (JSON: resolved dimensionless parameters, derived
    rates, solver settings, seed, tool version, scenario results).
``nvwgm sweep <config>``
    Grid scenarios (rate_sweep, regime_map). Writes ``<prefix>_sweep.csv``
    with one row per grid point plus the same meta record.
``nvwgm validate <config>``
    Schema check only; prints the resolved parameters.

Flags: ``--output-dir <dir>`` (default: $NVWGM_OUTPUT_DIR or the current
directory), ``--threads <n|auto>``, ``--seed <u64>`` (overrides the
config's MCWF seed). Exit codes: 0 success, 2 config error, 3 numerical
integrity abort. Outputs are written atomically (temp file then rename)
and are byte-identical for identical config and seed.

All dynamics run in dimensionless units of the reference coupling g;
``physical_params`` blocks are converted on the way in (kappa = omega/Q).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from math import sqrt

import numpy as np

from . import __version__, model
from .dynamics import NumericalIntegrityError, TimeGrid, TimeSeries
from .model import CounterTerm, ExactCompensation, ModelKind, SystemParams
from .scenarios import (
    SolverSpec,
    rate_sweep,
    grid_for,
    regime_rows,
    run_decay_check,
    run_entangle,
    run_transfer,
)
from . import analysis

SPEED_OF_LIGHT = 299792458.0
ENV_OUTPUT_DIR = "NVWGM_OUTPUT_DIR"
SCHEMA_VERSION = 1
RUN_SCENARIOS = ("transfer", "entangle", "decay_check", "tier_compare")
SWEEP_SCENARIOS = ("rate_sweep", "regime_map")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental numbers; converted to units of g (kappa = omega/Q)."""

    g_over_2pi_hz: float
    q_factor: float
    gamma_over_2pi_hz: float
    delta_over_g: float
    omega_over_g: float
    mode_wavelength_nm: float | None = None
    mode_freq_hz: float | None = None
    gamma10_over_2pi_hz: float | None = None

    def mode_frequency_hz(self) -> float:
        if (self.mode_freq_hz is None) == (self.mode_wavelength_nm is None):
            raise ConfigError(
                "physical_params needs exactly one of mode_wavelength_nm "
                "or mode_freq_hz"
            )
        if self.mode_freq_hz is not None:
            return self.mode_freq_hz
        return SPEED_OF_LIGHT / (self.mode_wavelength_nm * 1e-9)

    def to_system_params(self, n_fock: int = 2) -> SystemParams:
        if self.g_over_2pi_hz <= 0 or self.q_factor <= 0:
            raise ConfigError("g_over_2pi_hz and q_factor must be positive")
        g = self.g_over_2pi_hz
        kappa = (self.mode_frequency_hz() / self.q_factor) / g
        gamma = self.gamma_over_2pi_hz / g
        gamma10_hz = (
            self.gamma10_over_2pi_hz
            if self.gamma10_over_2pi_hz is not None
            else self.gamma_over_2pi_hz / 5.0
        )
        return SystemParams(
            g1=1.0,
            g2=1.0,
            delta=self.delta_over_g,
            omega1=self.omega_over_g,
            omega2=self.omega_over_g,
            kappa=kappa,
            gamma_e0=gamma,
            gamma_e1=gamma,
            gamma_10=gamma10_hz / g,
            n_fock=n_fock,
        )


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}")


def _parse_params(raw: dict) -> SystemParams:
    allowed = {
        "g1", "g2", "delta", "omega1", "omega2", "kappa",
        "gamma_e0", "gamma_e1", "gamma_10", "n_fock", "stark_compensation",
    }
    unknown = set(raw) - allowed
    _require(not unknown, f"unknown params fields: {sorted(unknown)}")
    kwargs = dict(raw)
    comp = kwargs.pop("stark_compensation", "exact")
    if comp == "exact":
        kwargs["stark_compensation"] = ExactCompensation()
    elif isinstance(comp, dict):
        try:
            kwargs["stark_compensation"] = CounterTerm(
                omega_prime=float(comp["omega_prime"]),
                delta_prime=float(comp["delta_prime"]),
            )
        except (KeyError, ValueError) as err:
            raise ConfigError(f"bad stark_compensation block: {err}") from err
    else:
        raise ConfigError(
            "stark_compensation must be 'exact' or "
            "{omega_prime, delta_prime}"
        )
    try:
        return SystemParams(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad params block: {err}") from err


@dataclass
class ResolvedConfig:
    scenario: str
    kind: ModelKind
    params: SystemParams
    physical: PhysicalParams | None
    solver: SolverSpec
    alpha: complex
    beta: complex
    initial: str
    grid_spec: dict
    output: str
    sweep: dict
    tiers: tuple[ModelKind, ModelKind] | None


def parse_config(doc: dict) -> ResolvedConfig:
    _require(isinstance(doc, dict), "config root must be a JSON object")
    _require(
        doc.get("schema_version") == SCHEMA_VERSION,
        f"schema_version must be {SCHEMA_VERSION}",
    )
    scenario = doc.get("scenario")
    _require(
        scenario in RUN_SCENARIOS + SWEEP_SCENARIOS,
        f"scenario must be one of {RUN_SCENARIOS + SWEEP_SCENARIOS}",
    )

    kind_name = doc.get("model", "nine_level")
    try:
        kind = ModelKind(kind_name)
    except ValueError:
        raise ConfigError(f"unknown model {kind_name!r}") from None

    has_params = "params" in doc
    has_phys = "physical_params" in doc
    _require(
        has_params != has_phys,
        "config needs exactly one of 'params' or 'physical_params'",
    )
    physical = None
    if has_params:
        params = _parse_params(doc["params"])
    else:
        raw = doc["physical_params"]
        try:
            physical = PhysicalParams(**raw)
        except TypeError as err:
            raise ConfigError(f"bad physical_params block: {err}") from err
        params = physical.to_system_params(n_fock=int(doc.get("n_fock", 2)))

    raw_solver = doc.get("solver", {"kind": "master"})
    _require(isinstance(raw_solver, dict), "solver must be an object")
    try:
        solver = SolverSpec(
            kind=raw_solver.get("kind", "master"),
            n_traj=int(raw_solver.get("n_traj", 1)),
            seed0=int(raw_solver.get("seed0", 0)),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if solver.kind == "unitary":
        rates = (params.kappa, params.gamma_e0, params.gamma_e1, params.gamma_10)
        _require(
            all(r == 0 for r in rates),
            "solver 'unitary' requires all rates to be zero",
        )

    init = doc.get("initial_state", {})
    _require(isinstance(init, dict), "initial_state must be an object")
    alpha = _as_complex(init.get("alpha", 1 / sqrt(2)))
    beta = _as_complex(init.get("beta", 1 / sqrt(2)))
    if "alpha" in init or "beta" in init:
        _require(
            abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) < 1e-9,
            "initial_state (alpha, beta) must be normalized",
        )
    initial = init.get("named", "10")
    _require(initial in ("10", "01", "00"), "initial_state.named must be 10/01/00")

    grid_spec = doc.get("grid", {})
    _require(isinstance(grid_spec, dict), "grid must be an object")
    for key in grid_spec:
        _require(
            key in ("t_start", "t_end", "n_samples", "dt_max"),
            f"unknown grid field {key!r}",
        )

    output = doc.get("output", scenario)
    _require(isinstance(output, str) and output, "output must be a non-empty string")

    sweep = doc.get("sweep", {})
    tiers = None
    if scenario == "tier_compare":
        raw_tiers = doc.get("tiers")
        _require(
            isinstance(raw_tiers, list) and len(raw_tiers) == 2,
            "tier_compare needs 'tiers': [kind_a, kind_b]",
        )
        try:
            tiers = (ModelKind(raw_tiers[0]), ModelKind(raw_tiers[1]))
        except ValueError as err:
            raise ConfigError(str(err)) from err
        rates = (params.kappa, params.gamma_e0, params.gamma_e1, params.gamma_10)
        _require(
            all(r == 0 for r in rates),
            "tier_compare is a lossless comparison; set all rates to zero",
        )
    if scenario == "rate_sweep":
        _require(
            isinstance(sweep.get("rate_scales"), list) and sweep["rate_scales"],
            "rate_sweep needs 'sweep': {'rate_scales': [...]}",
        )
    if scenario == "regime_map":
        axes = sweep.get("axes")
        _require(
            isinstance(axes, dict) and axes,
            "regime_map needs 'sweep': {'axes': {field: [values...]}}",
        )

    return ResolvedConfig(
        scenario=scenario,
        kind=kind,
        params=params,
        physical=physical,
        solver=solver,
        alpha=alpha,
        beta=beta,
        initial=initial,
        grid_spec=grid_spec,
        output=output,
        sweep=sweep,
        tiers=tiers,
    )


def load_config(path: str) -> ResolvedConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return parse_config(doc)


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_timeseries_csv(path: str, series: TimeSeries):
    names = list(series.columns.keys())
    header = ["t"] + names
    se = {}
    if series.ensemble is not None:
        se = series.ensemble.stderr
        header += [f"se_{n}" for n in names]
    lines = [",".join(header)]
    for i, t in enumerate(series.times):
        row = [_fmt(t)] + [_fmt(series.columns[n][i]) for n in names]
        row += [_fmt(se[n][i]) for n in names if n in se]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_rows_csv(path: str, rows: list[dict]):
    if not rows:
        raise ValueError("no rows to write")
    names = list(rows[0].keys())
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(_fmt(row[n]) for n in names))
    _atomic_write(path, "\n".join(lines) + "\n")


def _params_dict(p: SystemParams) -> dict:
    comp = p.stark_compensation
    return {
        "g1": p.g1,
        "g2": p.g2,
        "delta": p.delta,
        "omega1": p.omega1,
        "omega2": p.omega2,
        "kappa": p.kappa,
        "gamma_e0": p.gamma_e0,
        "gamma_e1": p.gamma_e1,
        "gamma_10": p.gamma_10,
        "n_fock": p.n_fock,
        "stark_compensation": (
            "exact"
            if isinstance(comp, ExactCompensation)
            else {"omega_prime": comp.omega_prime, "delta_prime": comp.delta_prime}
        ),
    }


def write_meta(path: str, cfg: ResolvedConfig, grid, results: dict, threads: int):
    try:
        rates = asdict(model.effective_rates(cfg.params))
    except ValueError:
        rates = None
    doc = {
        "tool": "nvwgm",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "model": cfg.kind.value,
        "params": _params_dict(cfg.params),
        "physical_params": asdict(cfg.physical) if cfg.physical else None,
        "effective_rates": rates,
        "solver": {
            "kind": cfg.solver.kind,
            "n_traj": cfg.solver.n_traj,
            "seed0": cfg.solver.seed0,
            "threads": threads,
        },
        "grid": (
            {
                "t_start": grid.t_start,
                "t_end": grid.t_end,
                "n_samples": grid.n_samples,
                "dt_max": grid.dt_max,
            }
            if grid is not None
            else None
        ),
        "results": results,
    }
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Verb implementations
# ---------------------------------------------------------------------------

def _resolve_grid(cfg: ResolvedConfig, default_t_end: float):
    spec = cfg.grid_spec
    return grid_for(
        cfg.params,
        cfg.kind,
        t_end=float(spec.get("t_end", default_t_end)),
        n_samples=int(spec.get("n_samples", 401)),
        t_start=float(spec.get("t_start", 0.0)),
        dt_max=(float(spec["dt_max"]) if "dt_max" in spec else None),
    )


def do_run(cfg: ResolvedConfig, out_prefix: str, threads: int) -> dict:
    solver = SolverSpec(
        kind=cfg.solver.kind,
        n_traj=cfg.solver.n_traj,
        seed0=cfg.solver.seed0,
        threads=threads,
    )
    if cfg.scenario == "transfer":
        rates = model.effective_rates(cfg.params)
        grid = _resolve_grid(cfg, rates.t_transfer)
        res = run_transfer(
            cfg.params, cfg.kind, solver, alpha=cfg.alpha, beta=cfg.beta, grid=grid
        )
        results = {
            "pre_gate_fidelity": res.pre_gate_fidelity,
            "post_gate_fidelity": res.post_gate_fidelity,
            "final_pop_01": float(res.series.column("pop_01")[-1]),
        }
        series = res.series
    elif cfg.scenario == "entangle":
        rates = model.effective_rates(cfg.params)
        grid = _resolve_grid(cfg, rates.t_entangle)
        res = run_entangle(cfg.params, cfg.kind, solver, grid=grid)
        results = {"epr_fidelity": res.epr_fidelity}
        series = res.series
    elif cfg.scenario == "decay_check":
        grid = None
        if "t_end" in cfg.grid_spec:
            fastest = max(
                cfg.params.gamma_e0 + cfg.params.gamma_e1, cfg.params.kappa
            )
            grid = TimeGrid(
                t_end=float(cfg.grid_spec["t_end"]),
                n_samples=int(cfg.grid_spec.get("n_samples", 201)),
                dt_max=float(
                    cfg.grid_spec.get("dt_max", 0.02 / (2 * fastest))
                ),
                t_start=float(cfg.grid_spec.get("t_start", 0.0)),
            )
        res = run_decay_check(cfg.params, grid=grid)
        results = {
            "max_err_pop_e": res.max_err_pop_e,
            "max_err_n_photon": res.max_err_n_photon,
        }
        series = res.series
        grid = res.grid
    else:  # tier_compare
        rates = model.effective_rates(cfg.params)
        grid = _resolve_grid(cfg, rates.t_transfer)
        report = analysis.compare_tiers(cfg.params, cfg.tiers, grid, cfg.initial)
        columns = {
            f"dev_{name}": dev for name, dev in report.deviations.items()
        }
        series = TimeSeries(times=report.times, columns=columns)
        results = {
            "max_pop_deviation": report.max_pop_deviation,
            "theta_omega_ratio": report.theta_omega_ratio,
            "delta_g_ratio": report.delta_g_ratio,
        }

    write_timeseries_csv(out_prefix + "_timeseries.csv", series)
    write_meta(out_prefix + "_meta", cfg, grid, results, threads)
    return results


def do_sweep(cfg: ResolvedConfig, out_prefix: str, threads: int) -> dict:
    solver = SolverSpec(
        kind=cfg.solver.kind if cfg.solver.kind != "unitary" else "master",
        n_traj=cfg.solver.n_traj,
        seed0=cfg.solver.seed0,
        threads=threads,
    )
    if cfg.scenario == "rate_sweep":
        rows = rate_sweep(
            cfg.params,
            [float(s) for s in cfg.sweep["rate_scales"]],
            kind=cfg.kind,
            solver=solver,
            alpha=cfg.alpha,
            beta=cfg.beta,
            n_samples=int(cfg.grid_spec.get("n_samples", 201)),
        )
    else:  # regime_map
        axes = {
            name: [float(v) for v in values]
            for name, values in cfg.sweep["axes"].items()
        }
        try:
            rows = regime_rows(cfg.params, axes)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    write_rows_csv(out_prefix + "_sweep.csv", rows)
    results = {"n_points": len(rows)}
    if cfg.scenario == "rate_sweep":
        results["post_gate_fidelities"] = [r["post_gate_fidelity"] for r in rows]
    write_meta(out_prefix + "_meta", cfg, None, results, threads)
    return results


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _parse_threads(value: str) -> int:
    if value == "auto":
        return max(1, os.cpu_count() or 1)
    try:
        n = int(value)
    except ValueError:
        raise ConfigError("--threads must be an integer or 'auto'") from None
    if n < 1:
        raise ConfigError("--threads must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvwgm",
        description="Cavity-mediated Raman transfer and entanglement simulator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "sweep", "validate"):
        sp = sub.add_parser(verb)
        sp.add_argument("config", help="path to a JSON scenario config")
        sp.add_argument("--output-dir", default=None)
        sp.add_argument("--threads", default="1")
        sp.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        threads = _parse_threads(args.threads)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.solver = SolverSpec(
                kind=cfg.solver.kind,
                n_traj=cfg.solver.n_traj,
                seed0=args.seed,
            )
        if args.verb == "validate":
            summary = {
                "scenario": cfg.scenario,
                "model": cfg.kind.value,
                "params": _params_dict(cfg.params),
            }
            try:
                summary["effective_rates"] = asdict(model.effective_rates(cfg.params))
            except ValueError:
                summary["effective_rates"] = None
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0
        if args.verb == "run" and cfg.scenario not in RUN_SCENARIOS:
            raise ConfigError(
                f"scenario {cfg.scenario!r} is a sweep; use 'nvwgm sweep'"
            )
        if args.verb == "sweep" and cfg.scenario not in SWEEP_SCENARIOS:
            raise ConfigError(
                f"scenario {cfg.scenario!r} is a single run; use 'nvwgm run'"
            )
        out_dir = args.output_dir or os.environ.get(ENV_OUTPUT_DIR) or "."
        os.makedirs(out_dir, exist_ok=True)
        out_prefix = os.path.join(out_dir, cfg.output)
        if args.verb == "run":
            results = do_run(cfg, out_prefix, threads)
        else:
            results = do_sweep(cfg, out_prefix, threads)
        print(json.dumps({"output_prefix": out_prefix, "results": results},
                         indent=2, sort_keys=True))
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericalIntegrityError as err:
        print(f"numerical integrity abort: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
