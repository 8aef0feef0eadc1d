"""Compartmental state machine for coupled malware/awareness spread.

Each device is in one of five compartments: susceptible or infected,
crossed with unaware or aware, plus an absorbing healed state reachable
only by aware devices.  One ``step`` is a synchronous sweep: every event
probability is evaluated against the state at time t, then all firing
transitions are applied together to produce time t+1.

Transition structure (the only allowed arrows):

    SU -> IU   contact with an infective neighbor, rate tau each
    SU -> SA   contact with an aware neighbor, rate nu each
    SA -> IA   contact with an infective neighbor, rate tau' each
    IU -> IA   contact (nu per aware neighbor) or spontaneous (mu)
    SA -> HA   recovery, rate gamma
    IA -> HA   recovery, rate gamma

Infective set: {IU, IA} (awareness does not disinfect).  Aware-spreader
set: {SA, IA, HA} (healed users keep signaling).  When infection and
awareness both fire on an SU node, or infection and recovery both fire
on an SA node, the conflict resolves uniformly at random to one arrow.

Per-neighbor contacts are independent, so a node with j active
neighbors at per-contact rate r transitions with probability
1 - (1 - r)**j.

All randomness is addressed: draw (run_key, t, node_key, slot), so a
sweep's outcome is independent of node iteration order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ._rng import PURPOSE_INIT, PURPOSE_STEPS, combine, draw_u01, key_for, stream_u64
from .damage import DamageModel, _damage_value, assign_seed, model_code, mu_of
from .errors import ParameterError
from .graph import Graph
from .params import ModelParams

SU, SA, IU, IA, HA = 0, 1, 2, 3, 4

_SLOT_EVENT_A = np.uint64(0)
_SLOT_EVENT_B = np.uint64(1)
_SLOT_TIEBREAK = np.uint64(2)
_SLOT_INFECTOR = np.uint64(3)


class Compartment(enum.IntEnum):
    """Device state: infection status crossed with user awareness."""

    SU = SU  # susceptible, unaware
    SA = SA  # susceptible, aware
    IU = IU  # infected, unaware
    IA = IA  # infected, aware
    HA = HA  # healed; only aware devices heal, and healing is permanent


COMPARTMENT_LABELS = ("Su", "Sa", "Iu", "Ia", "Ha")

INFECTIVE = frozenset({Compartment.IU, Compartment.IA})
AWARE_SPREADERS = frozenset({Compartment.SA, Compartment.IA, Compartment.HA})

# Audit set for trajectory checks: the six arrows plus self-loops.
ALLOWED_TRANSITIONS = frozenset(
    {
        (SU, SU), (SU, IU), (SU, SA),
        (SA, SA), (SA, IA), (SA, HA),
        (IU, IU), (IU, IA),
        (IA, IA), (IA, HA),
        (HA, HA),
    }
)


@dataclass(frozen=True)
class EventProbs:
    """Probabilities of each candidate event for one node, one step."""

    infect: float = 0.0
    aware_contact: float = 0.0
    aware_spont: float = 0.0
    heal: float = 0.0


@dataclass(frozen=True)
class NodeState:
    compartment: Compartment
    damage_received: float  # base damage at the moment of infection; 0 if never
    strain_generation: int  # transmissions the infecting strain made; 0 for seeds


@dataclass
class SimState:
    """Full simulation state at one time step (structure-of-arrays).

    The neighbor-count caches ``n_inf``/``n_aw`` and the per-node
    spontaneous rate ``mu`` are maintained by ``init_state`` and
    ``step``; call ``refresh`` after mutating arrays by hand.
    """

    t: int
    comp: np.ndarray  # int8[n] compartment codes
    damage: np.ndarray  # float64[n] damage received at infection
    strain_gen: np.ndarray  # int64[n] strain generation
    mu: np.ndarray  # float64[n] spontaneous-awareness rate
    ever_infected: np.ndarray  # bool[n]
    n_inf: np.ndarray  # int32[n] infective neighbors
    n_aw: np.ndarray  # int32[n] aware-spreader neighbors
    run_key: int  # 64-bit stream key for step draws
    node_keys: np.ndarray  # uint64[n] per-node draw keys

    @property
    def n(self) -> int:
        return self.comp.shape[0]

    def counts(self) -> np.ndarray:
        """Compartment occupancy (Su, Sa, Iu, Ia, Ha); sums to n."""
        return np.bincount(self.comp, minlength=5).astype(np.int64)

    def node(self, i: int) -> NodeState:
        return NodeState(
            compartment=Compartment(int(self.comp[i])),
            damage_received=float(self.damage[i]),
            strain_generation=int(self.strain_gen[i]),
        )

    def refresh(self, g: Graph, params: ModelParams) -> None:
        """Recompute the neighbor-count caches and per-node mu."""
        n_inf, n_aw = _count_neighbor_states(g.n, g.indptr, g.indices, self.comp)
        self.n_inf = n_inf
        self.n_aw = n_aw
        self.mu = np.where(
            self.damage >= params.theta,
            params.mu0 * (self.damage - params.theta),
            0.0,
        )

    @classmethod
    def from_compartments(
        cls,
        g: Graph,
        comp,
        params: ModelParams,
        damage=None,
        strain_gen=None,
        seed: int = 0,
    ) -> "SimState":
        """Build a consistent state from explicit compartments (for tests)."""
        comp = np.asarray(comp, dtype=np.int8)
        if comp.shape[0] != g.n:
            raise ValueError(f"expected {g.n} compartments, got {comp.shape[0]}")
        n = g.n
        dmg = (
            np.zeros(n) if damage is None else np.asarray(damage, dtype=np.float64)
        )
        gen = (
            np.zeros(n, np.int64)
            if strain_gen is None
            else np.asarray(strain_gen, dtype=np.int64)
        )
        ever = (comp == IU) | (comp == IA) | (dmg > 0)
        state = cls(
            t=0,
            comp=comp,
            damage=dmg,
            strain_gen=gen,
            mu=np.zeros(n),
            ever_infected=ever,
            n_inf=np.zeros(n, np.int32),
            n_aw=np.zeros(n, np.int32),
            run_key=key_for(seed, PURPOSE_STEPS),
            node_keys=np.arange(n, dtype=np.uint64),
        )
        state.refresh(g, params)
        return state


@njit(cache=True, nogil=True)
def _count_neighbor_states(n, indptr, indices, comp):
    n_inf = np.zeros(n, np.int32)
    n_aw = np.zeros(n, np.int32)
    for v in range(n):
        c = comp[v]
        inf = c == IU or c == IA
        aw = c == SA or c == IA or c == HA
        if inf or aw:
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if inf:
                    n_inf[u] += 1
                if aw:
                    n_aw[u] += 1
    return n_inf, n_aw


@njit(cache=True, nogil=True)
def _event_possible(comp, mu, n_inf, n_aw, alive, n_alive, tau, tau_p, nu, gamma):
    """True iff some transition has positive probability this step."""
    for idx in range(n_alive):
        v = alive[idx]
        c = comp[v]
        if c == SU:
            if (tau > 0.0 and n_inf[v] > 0) or (nu > 0.0 and n_aw[v] > 0):
                return True
        elif c == SA:
            if gamma > 0.0 or (tau_p > 0.0 and n_inf[v] > 0):
                return True
        elif c == IU:
            if mu[v] > 0.0 or (nu > 0.0 and n_aw[v] > 0):
                return True
        else:  # IA
            if gamma > 0.0:
                return True
    return False


@njit(cache=True, nogil=True)
def _infection_outcome(
    indptr, indices, comp, strain_gen, node_keys, v, tt, run_key, key_v,
    dkind, dpar, deps, t_next,
):
    """Damage and generation for node v infected during this sweep.

    The infector is drawn uniformly among v's infective neighbors; with
    identical per-contact rates this is exactly the conditional law of
    "which contact succeeded" given that at least one did.  Each
    candidate gets an addressed draw keyed by its own node key and the
    largest wins, so the choice is independent of neighbor ordering.
    """
    pick_key = combine(run_key, key_v)
    best = -1.0
    infector_gen = np.int64(0)
    for k in range(indptr[v], indptr[v + 1]):
        u = indices[k]
        cu = comp[u]
        if cu == IU or cu == IA:
            r = draw_u01(pick_key, tt, node_keys[u], _SLOT_INFECTOR)
            if r > best:
                best = r
                infector_gen = strain_gen[u]
    g_new = infector_gen + 1
    if dkind == 2:  # mutating strain: clock is the hop count
        return _damage_value(dkind, dpar, deps, g_new), g_new
    return _damage_value(dkind, dpar, deps, t_next), g_new


@njit(cache=True, nogil=True)
def _sweep(
    indptr, indices, comp, damage, strain_gen, mu, n_inf, n_aw, ever_inf,
    alive, n_alive, counts,
    t, run_key, node_keys,
    tau, tau_p, nu, gamma, mu0, theta,
    dkind, dpar, deps,
    tr_node, tr_new, tr_dmg, tr_gen,
):
    """One synchronous sweep; mutates state arrays, returns new alive count.

    Phase A decides every transition against the time-t compartments;
    phase B applies them, updates the neighbor-count caches
    incrementally, and compacts the alive list (healed nodes leave).
    """
    n_tr = 0
    tt = np.uint64(t)
    t_next = t + 1
    for idx in range(n_alive):
        v = alive[idx]
        c = comp[v]
        key_v = node_keys[v]
        if c == SU:
            fire_inf = False
            fire_aw = False
            if tau > 0.0 and n_inf[v] > 0:
                p = 1.0 - (1.0 - tau) ** n_inf[v]
                fire_inf = draw_u01(run_key, tt, key_v, _SLOT_EVENT_A) < p
            if nu > 0.0 and n_aw[v] > 0:
                p = 1.0 - (1.0 - nu) ** n_aw[v]
                fire_aw = draw_u01(run_key, tt, key_v, _SLOT_EVENT_B) < p
            if fire_inf and fire_aw:
                if draw_u01(run_key, tt, key_v, _SLOT_TIEBREAK) < 0.5:
                    fire_aw = False
                else:
                    fire_inf = False
            if fire_inf:
                d_new, g_new = _infection_outcome(
                    indptr, indices, comp, strain_gen, node_keys, v, tt,
                    run_key, key_v, dkind, dpar, deps, t_next,
                )
                tr_node[n_tr] = v
                tr_new[n_tr] = IU
                tr_dmg[n_tr] = d_new
                tr_gen[n_tr] = g_new
                n_tr += 1
            elif fire_aw:
                tr_node[n_tr] = v
                tr_new[n_tr] = SA
                n_tr += 1
        elif c == SA:
            fire_inf = False
            fire_heal = False
            if tau_p > 0.0 and n_inf[v] > 0:
                p = 1.0 - (1.0 - tau_p) ** n_inf[v]
                fire_inf = draw_u01(run_key, tt, key_v, _SLOT_EVENT_A) < p
            if gamma > 0.0:
                fire_heal = draw_u01(run_key, tt, key_v, _SLOT_EVENT_B) < gamma
            if fire_inf and fire_heal:
                if draw_u01(run_key, tt, key_v, _SLOT_TIEBREAK) < 0.5:
                    fire_heal = False
                else:
                    fire_inf = False
            if fire_inf:
                d_new, g_new = _infection_outcome(
                    indptr, indices, comp, strain_gen, node_keys, v, tt,
                    run_key, key_v, dkind, dpar, deps, t_next,
                )
                tr_node[n_tr] = v
                tr_new[n_tr] = IA
                tr_dmg[n_tr] = d_new
                tr_gen[n_tr] = g_new
                n_tr += 1
            elif fire_heal:
                tr_node[n_tr] = v
                tr_new[n_tr] = HA
                n_tr += 1
        elif c == IU:
            fire = False
            if nu > 0.0 and n_aw[v] > 0:
                p = 1.0 - (1.0 - nu) ** n_aw[v]
                fire = draw_u01(run_key, tt, key_v, _SLOT_EVENT_A) < p
            if not fire and mu[v] > 0.0:
                fire = draw_u01(run_key, tt, key_v, _SLOT_EVENT_B) < mu[v]
            if fire:
                tr_node[n_tr] = v
                tr_new[n_tr] = IA
                n_tr += 1
        else:  # IA
            if gamma > 0.0 and draw_u01(run_key, tt, key_v, _SLOT_EVENT_A) < gamma:
                tr_node[n_tr] = v
                tr_new[n_tr] = HA
                n_tr += 1

    for k in range(n_tr):
        v = tr_node[k]
        newc = tr_new[k]
        old = comp[v]
        comp[v] = newc
        counts[old] -= 1
        counts[newc] += 1
        was_inf = old == IU or old == IA
        is_inf = newc == IU or newc == IA
        was_aw = old == SA or old == IA
        is_aw = newc == SA or newc == IA or newc == HA
        if is_inf and not was_inf:
            damage[v] = tr_dmg[k]
            strain_gen[v] = tr_gen[k]
            mu[v] = mu0 * (tr_dmg[k] - theta) if tr_dmg[k] >= theta else 0.0
            ever_inf[v] = True
            for kk in range(indptr[v], indptr[v + 1]):
                n_inf[indices[kk]] += 1
        elif was_inf and not is_inf:
            for kk in range(indptr[v], indptr[v + 1]):
                n_inf[indices[kk]] -= 1
        if is_aw and not was_aw:
            for kk in range(indptr[v], indptr[v + 1]):
                n_aw[indices[kk]] += 1

    m = 0
    for idx in range(n_alive):
        v = alive[idx]
        if comp[v] != HA:
            alive[m] = v
            m += 1
    return m, n_tr


def init_state(
    g: Graph, params: ModelParams, seed: int, dmg: Optional[DamageModel] = None
) -> SimState:
    """All nodes susceptible-unaware except round(rho0*n) seeds set infected.

    Seed count uses round-half-up; seeds get strain generation 0.  When a
    damage model is supplied (the engine always passes one) the seeds
    also receive its time-zero damage.
    """
    n = g.n
    k = int(math.floor(params.rho0 * n + 0.5))
    if k < 1:
        raise ParameterError(
            "rho0", params.rho0, f"[{0.5 / n:.4g}, 1] (needs at least one seed node)"
        )
    # partial Fisher-Yates over 0..n-1 driven by the init stream
    stream = key_for(seed, PURPOSE_INIT)
    order = np.arange(n)
    for i in range(k):
        stream, val = stream_u64(stream)
        j = i + val % (n - i)
        order[i], order[j] = order[j], order[i]
    seeds = order[:k]

    comp = np.full(n, SU, np.int8)
    comp[seeds] = IU
    damage = np.zeros(n)
    gen = np.zeros(n, np.int64)
    ever = np.zeros(n, np.bool_)
    ever[seeds] = True
    if dmg is not None:
        d0, g0 = assign_seed(dmg)
        damage[seeds] = d0
        gen[seeds] = g0
    state = SimState(
        t=0,
        comp=comp,
        damage=damage,
        strain_gen=gen,
        mu=np.zeros(n),
        ever_infected=ever,
        n_inf=np.zeros(n, np.int32),
        n_aw=np.zeros(n, np.int32),
        run_key=key_for(seed, PURPOSE_STEPS),
        node_keys=np.arange(n, dtype=np.uint64),
    )
    state.refresh(g, params)
    return state


def event_probabilities(
    node_idx: int,
    state: SimState,
    g: Graph,
    params: ModelParams,
    mu: Optional[float] = None,
) -> EventProbs:
    """Exact per-event probabilities for one node at the current step.

    Pure: recounts the node's neighborhood directly rather than trusting
    the state's caches, so it serves as an independent check on the
    sweep.  ``mu`` defaults to the rate implied by the node's received
    damage.
    """
    c = int(state.comp[node_idx])
    if c == HA:
        raise ValueError(f"node {node_idx} is healed; no events possible")
    n_i = 0
    n_a = 0
    for u in g.neighbors(node_idx):
        cu = int(state.comp[u])
        if cu in (IU, IA):
            n_i += 1
        if cu in (SA, IA, HA):
            n_a += 1
    if mu is None:
        mu = mu_of(float(state.damage[node_idx]), params)
    if c == SU:
        return EventProbs(
            infect=1.0 - (1.0 - params.tau) ** n_i,
            aware_contact=1.0 - (1.0 - params.nu) ** n_a,
        )
    if c == SA:
        return EventProbs(
            infect=1.0 - (1.0 - params.tau_prime) ** n_i,
            heal=params.gamma,
        )
    if c == IU:
        return EventProbs(
            aware_contact=1.0 - (1.0 - params.nu) ** n_a,
            aware_spont=mu,
        )
    return EventProbs(heal=params.gamma)


def step(state: SimState, g: Graph, params: ModelParams, dmg: DamageModel) -> SimState:
    """Advance the state by one synchronous sweep (mutates and returns it)."""
    dkind, dpar, deps = model_code(dmg)
    alive = np.flatnonzero(state.comp != HA).astype(np.int32)
    n_alive = alive.shape[0]
    counts = state.counts()
    tr_node = np.empty(n_alive, np.int32)
    tr_new = np.empty(n_alive, np.int8)
    tr_dmg = np.empty(n_alive, np.float64)
    tr_gen = np.empty(n_alive, np.int64)
    _sweep(
        g.indptr, g.indices, state.comp, state.damage, state.strain_gen,
        state.mu, state.n_inf, state.n_aw, state.ever_infected,
        alive, n_alive, counts,
        state.t, np.uint64(state.run_key), state.node_keys,
        params.tau, params.tau_prime, params.nu, params.gamma,
        params.mu0, params.theta,
        dkind, dpar, deps,
        tr_node, tr_new, tr_dmg, tr_gen,
    )
    state.t += 1
    return state


def is_absorbed(
    state: SimState,
    g: Graph,
    params: ModelParams,
    dmg: Optional[DamageModel] = None,
) -> bool:
    """True iff no event has positive probability at any node.

    Recomputes neighbor counts and per-node rates from scratch; the
    damage model argument is accepted for interface symmetry but the
    answer depends only on damage already received.
    """
    del dmg
    n_inf, n_aw = _count_neighbor_states(g.n, g.indptr, g.indices, state.comp)
    mu = np.where(
        state.damage >= params.theta,
        params.mu0 * (state.damage - params.theta),
        0.0,
    )
    alive = np.flatnonzero(state.comp != HA).astype(np.int32)
    return not _event_possible(
        state.comp, mu, n_inf, n_aw, alive, alive.shape[0],
        params.tau, params.tau_prime, params.nu, params.gamma,
    )
