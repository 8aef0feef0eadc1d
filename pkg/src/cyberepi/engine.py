"""Run single realizations to absorption and reproducible ensembles.

A realization is fully determined by (graph, params, damage model,
seed).  Ensembles derive an independent graph seed and run seed for
every realization index from one base seed, so results are identical
no matter how many workers execute them; aggregation always reduces in
realization order.  Kernels release the GIL, so a thread pool gives
real parallelism.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numba import njit

from . import metrics
from ._rng import PURPOSE_GRAPH, PURPOSE_RUN, key_for
from .damage import DamageModel, describe, model_code
from .dynamics import (
    HA,
    IA,
    SA,
    SimState,
    _event_possible,
    _sweep,
    init_state,
)
from .errors import ParameterError
from .graph import Graph, GraphSpec, generate
from .params import ModelParams

DEFAULT_MAX_STEPS = 1_000_000

WORKERS_ENV_VAR = "CYBEREPI_WORKERS"


@dataclass
class RunResult:
    """Outcome of one realization."""

    series: np.ndarray  # int32[(steps+1), 5] compartment counts per step
    total_damage_per_node: float  # D/N in [0, 1]
    ever_infected: int  # nodes that were ever infected
    awareness_onset: Optional[int]  # first step with an aware node, or None
    absorbed: bool  # False iff the step cap was hit (truncated run)
    steps: int
    final: SimState


@dataclass
class EnsembleSummary:
    """Order-independent aggregate over realizations."""

    realizations: int
    mean_series: np.ndarray  # float64[Tmax+1, 5]; shorter runs padded with
    std_series: np.ndarray  # their absorbing row so every row sums to n
    mean_dn: float
    std_dn: float
    dn: np.ndarray  # per-realization D/N
    ever_infected_fraction: np.ndarray
    awareness_onset: np.ndarray  # float64; NaN where awareness never started
    peak_iu_t: np.ndarray
    peak_ia_t: np.ndarray
    steps: np.ndarray
    truncated: int  # realizations that hit the step cap
    params_echo: dict
    series: Optional[list] = None  # per-realization series when requested


@njit(cache=True, nogil=True)
def _run_loop(
    indptr, indices, comp, damage, strain_gen, mu, n_inf, n_aw, ever_inf,
    node_keys, run_key, t0,
    tau, tau_p, nu, gamma, mu0, theta,
    dkind, dpar, deps, max_steps,
):
    """Sweep until absorbed or the step cap; returns (series, t, absorbed, onset)."""
    n = comp.shape[0]
    counts = np.zeros(5, np.int64)
    for v in range(n):
        counts[comp[v]] += 1
    alive = np.empty(n, np.int32)
    n_alive = 0
    for v in range(n):
        if comp[v] != HA:
            alive[n_alive] = v
            n_alive += 1
    tr_node = np.empty(n, np.int32)
    tr_new = np.empty(n, np.int8)
    tr_dmg = np.empty(n, np.float64)
    tr_gen = np.empty(n, np.int64)

    cap = 1024
    series = np.empty((cap, 5), np.int32)
    for c in range(5):
        series[0, c] = counts[c]
    onset = np.int64(-1)
    if counts[SA] + counts[IA] + counts[HA] > 0:
        onset = t0
    t = t0
    row = 0
    absorbed = False
    while True:
        if not _event_possible(
            comp, mu, n_inf, n_aw, alive, n_alive, tau, tau_p, nu, gamma
        ):
            absorbed = True
            break
        if t - t0 >= max_steps:
            break
        n_alive, _ = _sweep(
            indptr, indices, comp, damage, strain_gen, mu, n_inf, n_aw, ever_inf,
            alive, n_alive, counts,
            t, run_key, node_keys,
            tau, tau_p, nu, gamma, mu0, theta,
            dkind, dpar, deps,
            tr_node, tr_new, tr_dmg, tr_gen,
        )
        t += 1
        row += 1
        if row >= cap:
            cap *= 2
            grown = np.empty((cap, 5), np.int32)
            grown[:row] = series[:row]
            series = grown
        for c in range(5):
            series[row, c] = counts[c]
        if onset < 0 and counts[SA] + counts[IA] + counts[HA] > 0:
            onset = t
    return series[: row + 1].copy(), t, absorbed, onset


def run(
    g: Graph,
    params: ModelParams,
    dmg: DamageModel,
    seed: int,
    *,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> RunResult:
    """One realization: init, sweep to absorption, tally damage."""
    state = init_state(g, params, seed, dmg)
    dkind, dpar, deps = model_code(dmg)
    series, t, absorbed, onset = _run_loop(
        g.indptr, g.indices, state.comp, state.damage, state.strain_gen,
        state.mu, state.n_inf, state.n_aw, state.ever_infected,
        state.node_keys, np.uint64(state.run_key), state.t,
        params.tau, params.tau_prime, params.nu, params.gamma,
        params.mu0, params.theta,
        dkind, dpar, deps, max_steps,
    )
    state.t = int(t)
    return RunResult(
        series=series,
        total_damage_per_node=metrics.total_damage(state.damage),
        ever_infected=int(np.count_nonzero(state.ever_infected)),
        awareness_onset=None if onset < 0 else int(onset),
        absorbed=bool(absorbed),
        steps=int(t),
        final=state,
    )


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else env override, else all cores."""
    if workers is not None:
        if workers < 1:
            raise ParameterError("workers", workers, "[1, inf)")
        return workers
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_ensemble(
    spec: GraphSpec,
    params: ModelParams,
    dmg: DamageModel,
    realizations: int,
    base_seed: int,
    *,
    workers: Optional[int] = None,
    fixed_graph: bool = False,
    keep_series: bool = False,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> EnsembleSummary:
    """Run R independent realizations and aggregate.

    By default every realization samples a fresh graph (seed derived
    from (base_seed, index)); ``fixed_graph`` reuses ``generate(spec)``
    for all of them.  Output is bit-identical for any worker count.
    """
    if realizations < 1:
        raise ParameterError("realizations", realizations, "[1, inf)")
    n_workers = resolve_workers(workers)
    shared = generate(spec) if fixed_graph else None

    def one(i: int) -> RunResult:
        if shared is not None:
            g = shared
        else:
            g = generate(replace(spec, seed=key_for(base_seed, i, PURPOSE_GRAPH)))
        return run(g, params, dmg, key_for(base_seed, i, PURPOSE_RUN),
                   max_steps=max_steps)

    if n_workers == 1 or realizations == 1:
        results = [one(i) for i in range(realizations)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, range(realizations)))

    return summarize(results, spec, params, dmg, realizations, base_seed,
                     fixed_graph=fixed_graph, max_steps=max_steps,
                     keep_series=keep_series)


def summarize(
    results: list,
    spec: GraphSpec,
    params: ModelParams,
    dmg: DamageModel,
    realizations: int,
    base_seed: int,
    *,
    fixed_graph: bool = False,
    max_steps: int = DEFAULT_MAX_STEPS,
    keep_series: bool = False,
) -> EnsembleSummary:
    """Reduce per-realization results in index order (scheduling-independent)."""
    n = spec.n
    t_max = max(r.series.shape[0] for r in results)
    total = np.zeros((t_max, 5))
    total_sq = np.zeros((t_max, 5))
    for r in results:
        s = r.series.astype(np.float64)
        rows = s.shape[0]
        total[:rows] += s
        total_sq[:rows] += s * s
        if rows < t_max:
            last = s[-1]
            total[rows:] += last
            total_sq[rows:] += last * last
    mean_series = total / realizations
    var_series = total_sq / realizations - mean_series**2
    std_series = np.sqrt(np.clip(var_series, 0.0, None))

    dn = np.array([r.total_damage_per_node for r in results])
    mean_dn = math.fsum(dn) / realizations
    std_dn = math.sqrt(
        math.fsum((x - mean_dn) ** 2 for x in dn) / realizations
    )
    onsets = np.array(
        [math.nan if r.awareness_onset is None else float(r.awareness_onset)
         for r in results]
    )
    phases = [metrics.cycle_phases(r.series) for r in results]
    echo = {
        "graph": {
            "family": spec.family.value,
            "n": spec.n,
            "mean_degree": spec.mean_degree,
            "seed": spec.seed,
        },
        "params": {
            "tau": params.tau,
            "nu": params.nu,
            "mu0": params.mu0,
            "gamma": params.gamma,
            "rho0": params.rho0,
            "theta": params.theta,
            "aware_infection_factor": params.aware_infection_factor,
        },
        "damage": describe(dmg),
        "realizations": realizations,
        "base_seed": base_seed,
        "fixed_graph": fixed_graph,
        "max_steps": max_steps,
    }
    return EnsembleSummary(
        realizations=realizations,
        mean_series=mean_series,
        std_series=std_series,
        mean_dn=mean_dn,
        std_dn=std_dn,
        dn=dn,
        ever_infected_fraction=np.array(
            [r.ever_infected / n for r in results]
        ),
        awareness_onset=onsets,
        peak_iu_t=np.array([p.peak_iu_t for p in phases], dtype=np.int64),
        peak_ia_t=np.array([p.peak_ia_t for p in phases], dtype=np.int64),
        steps=np.array([r.steps for r in results], dtype=np.int64),
        truncated=sum(1 for r in results if not r.absorbed),
        params_echo=echo,
        series=[r.series for r in results] if keep_series else None,
    )
