"""Scenario configuration, experiment dispatch and CSV emission.

Configs are flat ``key = value`` text with ``#`` comments; dotted keys hold
the sweep specification.  Every emitted CSV embeds the fully resolved
configuration as leading comment lines so any result file is reproducible
on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from . import __version__
from .equilibrium import (
    pareto_dominance_check,
    satisfaction_region,
    solve_ese,
    solve_mse,
    solve_pse,
)
from .learning import EPISODE, MEAN_FIELD, Schedules, run_coupled
from .model import ContactModel, EnergyModel, GameParams
from .simulate import MODEL, PHYSICAL, estimate_delivery, estimate_relay_utility

MODES = ("solve-pse", "solve-mse", "solve-ese", "region", "learn", "simulate",
         "pareto-grid")
SWEEP_VARS = ("tau", "lambda", "n", "delta", "p")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration input."""


@dataclass(frozen=True)
class SweepSpec:
    var: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    params: GameParams
    mode: Optional[str] = None
    sweep: Optional[SweepSpec] = None
    trials: int = 10000
    seed: int = 1
    out: Optional[str] = None
    contact_mode: str = MODEL
    p: float = 1.0
    alpha: Optional[float] = None
    horizon: int = 5000
    alpha0: Optional[float] = None
    feed: str = EPISODE

    def echo(self) -> dict[str, str]:
        """Resolved key/value view, the one embedded in every output."""
        c, e = self.params.contact, self.params.energy
        items = {
            "lambda": c.lam, "tau": c.tau, "n": self.params.n,
            "delta": self.params.delta, "sigma": self.params.sigma,
            "gamma": self.params.gamma, "e": e.e_store, "e_r": e.e_receive,
            "e_t": e.e_transmit, "alpha_max": self.params.alpha_max,
            "p": self.p, "trials": self.trials, "seed": self.seed,
            "contact_mode": self.contact_mode, "horizon": self.horizon,
            "feed": self.feed,
        }
        if self.alpha is not None:
            items["alpha"] = self.alpha
        if self.alpha0 is not None:
            items["alpha0"] = self.alpha0
        if self.mode is not None:
            items["mode"] = self.mode
        if self.sweep is not None:
            items["sweep.var"] = self.sweep.var
            items["sweep.values"] = ",".join(_fmt(v) for v in self.sweep.values)
        return {k: _fmt(v) for k, v in items.items()}


_DEFAULTS = {
    "lambda": 0.015, "tau": 100.0, "n": 7, "delta": 0.21, "sigma": 0.2,
    "gamma": 0.15, "e": 3.8e-5, "e_r": 2e-5, "e_t": 2e-5, "alpha_max": 5.0,
}

_FLOAT_KEYS = {"lambda", "tau", "delta", "sigma", "gamma", "e", "e_r", "e_t",
               "alpha_max", "p", "alpha", "alpha0", "sweep.start", "sweep.stop"}
_INT_KEYS = {"n", "trials", "seed", "sweep.points", "horizon"}
_STR_KEYS = {"contact_mode", "sweep.var", "feed"}
_LIST_KEYS = {"sweep.values"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _LIST_KEYS


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate config text, filling defaults for missing keys."""
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _INT_KEYS:
                raw[key] = int(value)
            elif key in _LIST_KEYS:
                raw[key] = tuple(float(v) for v in value.split(","))
            else:
                raw[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return _build_config(raw)


def _build_config(raw: dict[str, object]) -> ScenarioConfig:
    def take(key, default):
        return raw.get(key, default)

    try:
        params = GameParams(
            contact=ContactModel(lam=take("lambda", _DEFAULTS["lambda"]),
                                 tau=take("tau", _DEFAULTS["tau"])),
            energy=EnergyModel(e_store=take("e", _DEFAULTS["e"]),
                               e_receive=take("e_r", _DEFAULTS["e_r"]),
                               e_transmit=take("e_t", _DEFAULTS["e_t"])),
            n=take("n", _DEFAULTS["n"]),
            sigma=take("sigma", _DEFAULTS["sigma"]),
            gamma=take("gamma", _DEFAULTS["gamma"]),
            delta=take("delta", _DEFAULTS["delta"]),
            alpha_max=take("alpha_max", _DEFAULTS["alpha_max"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    trials = take("trials", 10000)
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    horizon = take("horizon", 5000)
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    contact_mode = take("contact_mode", MODEL)
    if contact_mode not in (MODEL, PHYSICAL):
        raise ConfigError(f"contact_mode must be '{MODEL}' or '{PHYSICAL}', "
                          f"got {contact_mode!r}")
    feed = take("feed", EPISODE)
    if feed not in (MEAN_FIELD, EPISODE):
        raise ConfigError(f"feed must be '{MEAN_FIELD}' or '{EPISODE}', got {feed!r}")
    p = take("p", 1.0)
    if not 0 <= p <= 1:
        raise ConfigError(f"p must be in [0, 1], got {p}")
    alpha = take("alpha", None)
    if alpha is not None and not 0 <= alpha <= params.alpha_max:
        raise ConfigError(f"alpha must be in [0, alpha_max], got {alpha}")
    alpha0 = take("alpha0", None)
    if alpha0 is not None and not 0 <= alpha0 <= params.alpha_max:
        raise ConfigError(f"alpha0 must be in [0, alpha_max], got {alpha0}")

    sweep = _build_sweep(raw)
    return ScenarioConfig(params=params, sweep=sweep, trials=trials,
                          seed=take("seed", 1), contact_mode=contact_mode,
                          p=p, alpha=alpha, horizon=horizon, alpha0=alpha0,
                          feed=feed)


def _build_sweep(raw: dict[str, object]) -> Optional[SweepSpec]:
    keys = [k for k in raw if k.startswith("sweep.")]
    if not keys:
        return None
    var = raw.get("sweep.var")
    if var is None:
        raise ConfigError("sweep.var is required when any sweep key is set")
    if var not in SWEEP_VARS:
        raise ConfigError(f"sweep.var must be one of {SWEEP_VARS}, got {var!r}")
    if "sweep.values" in raw:
        values = raw["sweep.values"]
        if len(values) < 1:
            raise ConfigError("sweep.values must name at least one value")
    else:
        for need in ("sweep.start", "sweep.stop", "sweep.points"):
            if need not in raw:
                raise ConfigError(f"sweep needs {need} (or sweep.values)")
        points = raw["sweep.points"]
        if points < 2:
            raise ConfigError(f"sweep.points must be >= 2, got {points}")
        start, stop = raw["sweep.start"], raw["sweep.stop"]
        if not start < stop:
            raise ConfigError(f"sweep range must have start < stop, got "
                              f"[{start}, {stop}]")
        step = (stop - start) / (points - 1)
        values = tuple(start + i * step for i in range(points - 1)) + (stop,)
    _validate_sweep_values(var, values)
    return SweepSpec(var=var, values=tuple(values))


def _validate_sweep_values(var: str, values) -> None:
    for v in values:
        if var == "tau" and v <= 0:
            raise ConfigError(f"swept tau must be > 0, got {v}")
        if var == "lambda" and v < 0:
            raise ConfigError(f"swept lambda must be >= 0, got {v}")
        if var == "n" and (v < 1 or v != int(v)):
            raise ConfigError(f"swept n must be a positive integer, got {v}")
        if var == "delta" and not 0 < v < 1:
            raise ConfigError(f"swept delta must be in (0, 1), got {v}")
        if var == "p" and not 0 <= v <= 1:
            raise ConfigError(f"swept p must be in [0, 1], got {v}")


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    metadata: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row width {len(row)} != {len(self.columns)} columns")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit_csv(table: ResultTable, path: str) -> None:
    """Write metadata comments, header and rows; stable byte-for-byte output."""
    lines = [f"# {key} = {value}" for key, value in table.metadata]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(_fmt(v) for v in row))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _metadata(config: ScenarioConfig, extra: dict[str, str] | None = None
              ) -> tuple[tuple[str, str], ...]:
    meta = {"build": f"dtnsat {__version__}"}
    meta.update(config.echo())
    if extra:
        meta.update(extra)
    return tuple(meta.items())


def _apply_sweep_value(config: ScenarioConfig, var: str, value: float
                       ) -> ScenarioConfig:
    params = config.params
    if var == "tau":
        params = replace(params, contact=replace(params.contact, tau=value))
    elif var == "lambda":
        params = replace(params, contact=replace(params.contact, lam=value))
    elif var == "n":
        params = replace(params, n=int(value))
    elif var == "delta":
        params = replace(params, delta=value)
    elif var == "p":
        return replace(config, p=value)
    return replace(config, params=params)


def _sweep_points(config: ScenarioConfig) -> list[tuple[Optional[float], ScenarioConfig]]:
    if config.sweep is None:
        return [(None, config)]
    return [(v, _apply_sweep_value(config, config.sweep.var, v))
            for v in config.sweep.values]


def run_scenario(config: ScenarioConfig) -> ResultTable:
    """Dispatch on the mode and evaluate it over the sweep grid."""
    if config.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {config.mode!r}")
    runner = {
        "solve-pse": _run_solve_pse,
        "solve-mse": _run_solve_mse,
        "solve-ese": _run_solve_ese,
        "region": _run_region,
        "learn": _run_learn,
        "simulate": _run_simulate,
        "pareto-grid": _run_pareto_grid,
    }[config.mode]
    try:
        return runner(config)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"mode {config.mode}: {exc}") from exc


def _sweep_col(config: ScenarioConfig) -> list[str]:
    return [config.sweep.var] if config.sweep is not None else []


def _run_solve_pse(config: ScenarioConfig) -> ResultTable:
    columns = _sweep_col(config) + ["n_a", "alpha_star", "clamped", "n_a_min",
                                    "feasible"]
    rows = []
    for value, cfg in _sweep_points(config):
        sol = solve_pse(cfg.params)
        for m in sorted(sol.alpha_star):
            row = ([value] if value is not None else []) + [
                m, sol.alpha_star[m], int(sol.clamped[m]), sol.n_a_min,
                int(sol.feasible)]
            rows.append(tuple(row))
    return ResultTable(tuple(columns), tuple(rows), _metadata(config))


def _run_solve_mse(config: ScenarioConfig) -> ResultTable:
    columns = _sweep_col(config) + ["p_min", "alpha_star", "z_star", "feasible"]
    rows = []
    for value, cfg in _sweep_points(config):
        sol = solve_mse(cfg.params)
        alpha = sol.alpha_of_p(sol.p_min) if sol.feasible else math.nan
        row = ([value] if value is not None else []) + [
            sol.p_min, alpha, sol.z_star, int(sol.feasible)]
        rows.append(tuple(row))
    return ResultTable(tuple(columns), tuple(rows), _metadata(config))


def _run_solve_ese(config: ScenarioConfig) -> ResultTable:
    columns = _sweep_col(config) + ["p_star", "alpha_star", "binding_delivery",
                                    "alpha_clamped"]
    rows = []
    for value, cfg in _sweep_points(config):
        sol = solve_ese(cfg.params)
        row = ([value] if value is not None else []) + [
            sol.p_star, sol.alpha_star, sol.binding_delivery,
            int(sol.alpha_clamped)]
        rows.append(tuple(row))
    return ResultTable(tuple(columns), tuple(rows), _metadata(config))


def _run_region(config: ScenarioConfig) -> ResultTable:
    if config.sweep is None or config.sweep.var not in ("tau", "lambda"):
        raise ConfigError("region mode needs a sweep over tau or lambda")
    from .model import expected_source_utility_mixed

    rows = []
    for value, cfg in _sweep_points(config):
        delivery = expected_source_utility_mixed(cfg.p, cfg.params)
        rows.append((value, delivery, int(delivery >= cfg.params.delta)))
    lo, hi = min(config.sweep.values), max(config.sweep.values)
    threshold = satisfaction_region(config.params, config.sweep.var, lo, hi,
                                    config.p)
    extra = {"threshold": _fmt(threshold) if threshold is not None else "none"}
    return ResultTable((config.sweep.var, "delivery", "satisfied"),
                       tuple(rows), _metadata(config, extra))


def _run_learn(config: ScenarioConfig) -> ResultTable:
    if config.sweep is not None:
        raise ConfigError("learn mode does not support sweeps; run one scenario per file")
    schedules = Schedules(horizon=config.horizon)
    traj = run_coupled(config.params, schedules, config.seed, feed=config.feed,
                       contact_mode=config.contact_mode, alpha0=config.alpha0)
    return ResultTable(tuple(traj.csv_header()),
                       tuple(tuple(r) for r in traj.csv_rows()),
                       _metadata(config))


def _run_simulate(config: ScenarioConfig) -> ResultTable:
    columns = ["p", "delivery_mean", "delivery_se", "relay_utility_mean",
               "relay_utility_se", "trials"]
    rows = []
    for value, cfg in _sweep_points(config):
        if config.sweep is not None and config.sweep.var != "p":
            raise ConfigError("simulate mode sweeps only p")
        reward = cfg.alpha
        if reward is None:
            reward = solve_ese(cfg.params).alpha_star
        delivery = estimate_delivery(cfg.params, cfg.p, cfg.trials, cfg.seed,
                                     cfg.contact_mode)
        relay = estimate_relay_utility(cfg.params, cfg.p, reward, cfg.trials,
                                       cfg.seed, cfg.contact_mode)
        rows.append((cfg.p, delivery.mean, delivery.stderr, relay.mean,
                     relay.stderr, cfg.trials))
    return ResultTable(tuple(columns), tuple(rows), _metadata(config))


def _run_pareto_grid(config: ScenarioConfig) -> ResultTable:
    ese = solve_ese(config.params)
    points = 101
    dominators = []
    for i in range(points):
        p = i / (points - 1)
        for j in range(points):
            a = config.params.alpha_max * j / (points - 1)
            verdict = pareto_dominance_check(p, a, ese, config.params)
            if verdict.dominates:
                dominators.append((p, a, verdict.source_margin_delta,
                                   verdict.relay_utility_delta))
    extra = {"ese_p_star": _fmt(ese.p_star), "ese_alpha_star": _fmt(ese.alpha_star),
             "dominating_points": str(len(dominators))}
    return ResultTable(("p", "alpha", "source_margin_delta", "relay_utility_delta"),
                       tuple(dominators), _metadata(config, extra))
