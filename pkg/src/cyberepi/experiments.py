"""Declarative experiment harness: cycle series and parameter sweeps to CSV.

Experiments are described by an ``ExperimentConfig`` (built from a TOML
file, CLI flags, or both) and write CSV files with a ``#``-prefixed
header block carrying the tool version and the full configuration, so
re-running a config with the same base seed reproduces identical bytes.

Grids default to 41 evenly spaced base-damage points in [0, 1] and 40
log-spaced growth rates in (0.001, 1].
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .damage import Constant, LogisticClock, MutatingStrain
from .engine import DEFAULT_MAX_STEPS, run_ensemble
from .errors import CyberEpiError, ParameterError
from .graph import GraphFamily, GraphSpec
from .metrics import cycle_phases
from .params import ModelParams

Progress = Optional[Callable[[str], None]]


def default_d_grid() -> list[float]:
    return [float(x) for x in np.linspace(0.0, 1.0, 41)]


def default_eps_grid() -> list[float]:
    return [float(x) for x in np.geomspace(0.001, 1.0, 40)]


@dataclass
class ExperimentConfig:
    """Grid specification for one experiment family."""

    name: str = "experiment"
    families: list[str] = field(default_factory=lambda: ["er"])
    mean_degrees: list[float] = field(default_factory=lambda: [10.0])
    n: int = 500
    params: ModelParams = field(default_factory=ModelParams)
    thetas: list[float] = field(default_factory=lambda: [0.2])
    damage_kind: str = "constant"  # constant | logistic | mutating | both
    d_values: list[float] = field(default_factory=default_d_grid)
    d0: float = 0.1
    epsilons: list[float] = field(default_factory=default_eps_grid)
    reference_d: list[float] = field(default_factory=default_d_grid)
    include_reference: bool = True
    realizations: int = 200
    base_seed: int = 0
    workers: Optional[int] = None
    max_steps: int = DEFAULT_MAX_STEPS
    fixed_graph: bool = False
    out: str = "experiment.csv"

    def __post_init__(self):
        if self.realizations < 1:
            raise ParameterError("realizations", self.realizations, "[1, inf)")
        if self.damage_kind not in ("constant", "logistic", "mutating", "both"):
            raise ParameterError(
                "damage.kind", self.damage_kind,
                "{constant, logistic, mutating, both}",
            )
        for name in self.families:
            GraphFamily(name)  # raises ValueError on unknown family

    def echo(self) -> str:
        """Single-line canonical JSON of the effective configuration."""
        if self.damage_kind == "constant":
            damage = {"kind": "constant", "d": self.d_values}
        else:
            damage = {
                "kind": self.damage_kind,
                "d0": self.d0,
                "epsilon": self.epsilons,
                "reference_d": self.reference_d if self.include_reference else [],
            }
        payload = {
            "name": self.name,
            "graph": {
                "families": self.families,
                "mean_degrees": self.mean_degrees,
                "n": self.n,
            },
            "params": {
                "tau": self.params.tau,
                "nu": self.params.nu,
                "mu0": self.params.mu0,
                "gamma": self.params.gamma,
                "rho0": self.params.rho0,
                "aware_infection_factor": self.params.aware_infection_factor,
                "thetas": self.thetas,
            },
            "damage": damage,
            "run": {
                "realizations": self.realizations,
                "base_seed": self.base_seed,
                "max_steps": self.max_steps,
                "fixed_graph": self.fixed_graph,
            },
            "version": __version__,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _as_list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def load_mapping(path) -> dict:
    """Read a raw TOML config mapping."""
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise CyberEpiError(f"cannot read config {path}: {e}") from e


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML file."""
    return config_from_mapping(load_mapping(path))


def config_from_mapping(doc: dict) -> ExperimentConfig:
    graph = doc.get("graph", {})
    par = doc.get("params", {})
    dam = doc.get("damage", {})
    runsec = doc.get("run", {})
    out = doc.get("output", {})
    defaults = ExperimentConfig()
    params = ModelParams(
        tau=float(par.get("tau", 0.0055)),
        nu=float(par.get("nu", 0.011)),
        mu0=float(par.get("mu0", 0.011)),
        gamma=float(par.get("gamma", 0.03)),
        rho0=float(par.get("rho0", 0.01)),
        aware_infection_factor=float(par.get("aware_infection_factor", 0.1)),
    )
    return ExperimentConfig(
        name=str(doc.get("name", "experiment")),
        families=[str(x) for x in _as_list(graph.get("families", ["er"]))],
        mean_degrees=[float(x) for x in _as_list(graph.get("mean_degrees", [10]))],
        n=int(graph.get("n", 500)),
        params=params,
        thetas=[float(x) for x in _as_list(par.get("thetas", [0.2]))],
        damage_kind=str(dam.get("kind", "constant")),
        d_values=[float(x) for x in _as_list(dam.get("d", defaults.d_values))],
        d0=float(dam.get("d0", 0.1)),
        epsilons=[float(x) for x in _as_list(dam.get("epsilon", defaults.epsilons))],
        reference_d=[
            float(x) for x in _as_list(dam.get("reference_d", defaults.reference_d))
        ],
        include_reference=bool(dam.get("include_reference", True)),
        realizations=int(runsec.get("realizations", 200)),
        base_seed=int(runsec.get("base_seed", 0)),
        workers=(int(runsec["workers"]) if "workers" in runsec else None),
        max_steps=int(runsec.get("max_steps", DEFAULT_MAX_STEPS)),
        fixed_graph=bool(runsec.get("fixed_graph", False)),
        out=str(out.get("path", "experiment.csv")),
    )


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _write_csv(path, tag: str, cfg: ExperimentConfig, comments: list[str],
               header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    lines = [f"# cyberepi {__version__} {tag}", f"# config: {cfg.echo()}"]
    lines.extend(f"# {c}" for c in comments)
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    except OSError as e:
        raise CyberEpiError(f"cannot write {path}: {e}") from e
    return path


def _ensemble(cfg: ExperimentConfig, family: str, k: float, theta: float, dmg):
    spec = GraphSpec(
        family=GraphFamily(family), n=cfg.n, mean_degree=k, seed=cfg.base_seed
    )
    return run_ensemble(
        spec,
        replace(cfg.params, theta=theta),
        dmg,
        cfg.realizations,
        cfg.base_seed,
        workers=cfg.workers,
        fixed_graph=cfg.fixed_graph,
        max_steps=cfg.max_steps,
    )


def _single_point(cfg: ExperimentConfig, what: str):
    if len(cfg.families) != 1 or len(cfg.mean_degrees) != 1 or len(cfg.thetas) != 1:
        raise ParameterError(
            f"{what} grid",
            f"{len(cfg.families)} families x {len(cfg.mean_degrees)} degrees "
            f"x {len(cfg.thetas)} thetas",
            "a single parameter point",
        )


def _cycle_damage(cfg: ExperimentConfig):
    if cfg.damage_kind == "constant":
        if len(cfg.d_values) != 1:
            raise ParameterError("damage.d", cfg.d_values, "a single value for cycle")
        return Constant(cfg.d_values[0])
    if cfg.damage_kind in ("logistic", "mutating"):
        if len(cfg.epsilons) != 1:
            raise ParameterError(
                "damage.epsilon", cfg.epsilons, "a single value for cycle"
            )
        cls = LogisticClock if cfg.damage_kind == "logistic" else MutatingStrain
        return cls(d0=cfg.d0, epsilon=cfg.epsilons[0])
    raise ParameterError("damage.kind", cfg.damage_kind, "not 'both' for cycle")


def run_cycle_experiment(cfg: ExperimentConfig, progress: Progress = None) -> Path:
    """Ensemble-mean compartment counts per step for one parameter point."""
    _single_point(cfg, "cycle")
    dmg = _cycle_damage(cfg)
    summary = _ensemble(
        cfg, cfg.families[0], cfg.mean_degrees[0], cfg.thetas[0], dmg
    )
    if progress:
        progress(f"cycle: {summary.realizations} realizations, "
                 f"mean D/N {summary.mean_dn:.6g}")
    onset = summary.awareness_onset
    have_onset = onset[~np.isnan(onset)]
    mean_onset = _fmt(float(np.mean(have_onset))) if have_onset.size else "none"
    avg_phases = cycle_phases(summary.mean_series)
    comments = [
        "phases_per_run: mean_onset=%s mean_peak_iu=%s mean_peak_ia=%s mean_end=%s"
        % (
            mean_onset,
            _fmt(float(np.mean(summary.peak_iu_t))),
            _fmt(float(np.mean(summary.peak_ia_t))),
            _fmt(float(np.mean(summary.steps))),
        ),
        "phases_mean_series: onset=%s peak_iu=%d peak_ia=%d end=%d"
        % (
            "none" if avg_phases.onset_t is None else avg_phases.onset_t,
            avg_phases.peak_iu_t,
            avg_phases.peak_ia_t,
            avg_phases.end_t,
        ),
        f"mean_DN: {summary.mean_dn:.6g}",
        f"truncated: {summary.truncated}",
    ]
    header = ["t", "mean_Su", "mean_Sa", "mean_Iu", "mean_Ia", "mean_Ha"]
    rows = [
        [t] + [float(x) for x in summary.mean_series[t]]
        for t in range(summary.mean_series.shape[0])
    ]
    return _write_csv(cfg.out, "cycle", cfg, comments, header, rows)


SWEEP_D_HEADER = [
    "family", "n", "mean_degree", "theta", "d",
    "mean_DN", "std_DN", "mean_ever_infected_fraction", "realizations", "truncated",
]


def run_damage_sweep(cfg: ExperimentConfig, progress: Progress = None) -> Path:
    """One row of D/N statistics per (family, mean degree, theta, d)."""
    if cfg.damage_kind != "constant":
        raise ParameterError("damage.kind", cfg.damage_kind, "constant for sweep-d")
    rows = []
    for family in cfg.families:
        for k in cfg.mean_degrees:
            for theta in cfg.thetas:
                for d in cfg.d_values:
                    summary = _ensemble(cfg, family, k, theta, Constant(d))
                    rows.append([
                        family, cfg.n, k, theta, d,
                        summary.mean_dn, summary.std_dn,
                        float(np.mean(summary.ever_infected_fraction)),
                        summary.realizations, summary.truncated,
                    ])
                    if progress:
                        progress(
                            f"sweep-d {family} k={_fmt(k)} theta={_fmt(theta)} "
                            f"d={_fmt(d)}: mean D/N {summary.mean_dn:.6g}"
                        )
    return _write_csv(cfg.out, "sweep-d", cfg, [], SWEEP_D_HEADER, rows)


SWEEP_EPS_HEADER = [
    "family", "n", "mean_degree", "theta", "kind", "epsilon",
    "mean_DN", "std_DN", "mean_ever_infected_fraction", "realizations",
    "truncated", "const_max_DN",
]


def run_epsilon_sweep(cfg: ExperimentConfig, progress: Progress = None) -> Path:
    """D/N versus growth rate for time-varying and/or mutating damage.

    Each row carries the constant-damage reference maximum for its
    (family, mean degree, theta) group, used for overlay lines.
    """
    if cfg.damage_kind == "constant":
        raise ParameterError(
            "damage.kind", cfg.damage_kind, "{logistic, mutating, both} for sweep-eps"
        )
    kinds = (
        ["logistic", "mutating"] if cfg.damage_kind == "both" else [cfg.damage_kind]
    )
    rows = []
    for family in cfg.families:
        for k in cfg.mean_degrees:
            for theta in cfg.thetas:
                const_max = float("nan")
                if cfg.include_reference:
                    ref = [
                        _ensemble(cfg, family, k, theta, Constant(d)).mean_dn
                        for d in cfg.reference_d
                    ]
                    const_max = max(ref)
                    if progress:
                        progress(
                            f"sweep-eps {family} k={_fmt(k)} theta={_fmt(theta)}: "
                            f"constant reference max {const_max:.6g}"
                        )
                for kind in kinds:
                    cls = LogisticClock if kind == "logistic" else MutatingStrain
                    for eps in cfg.epsilons:
                        summary = _ensemble(
                            cfg, family, k, theta, cls(d0=cfg.d0, epsilon=eps)
                        )
                        rows.append([
                            family, cfg.n, k, theta, kind, eps,
                            summary.mean_dn, summary.std_dn,
                            float(np.mean(summary.ever_infected_fraction)),
                            summary.realizations, summary.truncated, const_max,
                        ])
                        if progress:
                            progress(
                                f"sweep-eps {family} k={_fmt(k)} "
                                f"theta={_fmt(theta)} {kind} eps={_fmt(eps)}: "
                                f"mean D/N {summary.mean_dn:.6g}"
                            )
    return _write_csv(cfg.out, "sweep-eps", cfg, [], SWEEP_EPS_HEADER, rows)
