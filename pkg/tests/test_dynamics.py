import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyberepi.damage import Constant, LogisticClock, MutatingStrain, damage_at
from cyberepi.dynamics import (
    ALLOWED_TRANSITIONS,
    HA,
    IA,
    IU,
    SA,
    SU,
    Compartment,
    SimState,
    _count_neighbor_states,
    event_probabilities,
    init_state,
    is_absorbed,
    step,
)
from cyberepi.errors import ParameterError
from cyberepi.graph import Graph, GraphFamily, GraphSpec, generate, generate_er
from cyberepi.params import ModelParams

from _helpers import binomial_3se, complete_graph, path_graph, star_graph
from _trials import one_step_outcome_counts

ER = GraphFamily.ERDOS_RENYI

NULL = ModelParams(tau=0.0, nu=0.0, mu0=0.0, gamma=0.0)
HOT = ModelParams(tau=0.5, nu=0.4, mu0=0.8, gamma=0.3, theta=0.1, rho0=0.1)


# ------------------------------------------------------- init_state

def test_init_seeds_paper_count():
    g = generate_er(GraphSpec(ER, 1000, 10.0, seed=4))
    s = init_state(g, ModelParams(rho0=0.01), seed=1)
    assert int((s.comp == IU).sum()) == 10
    assert int((s.comp == SU).sum()) == 990
    assert s.t == 0
    assert s.counts().sum() == 1000


def test_init_full_seeding():
    g = generate_er(GraphSpec(ER, 100, 6.0, seed=4))
    s = init_state(g, ModelParams(rho0=1.0), seed=1)
    assert int((s.comp == IU).sum()) == 100


def test_init_round_half_up():
    g = generate_er(GraphSpec(ER, 100, 6.0, seed=4))
    s = init_state(g, ModelParams(rho0=0.005), seed=1)
    assert int((s.comp == IU).sum()) == 1


def test_init_zero_seeds_rejected():
    g = generate_er(GraphSpec(ER, 10, 3.0, seed=4))
    with pytest.raises(ParameterError):
        init_state(g, ModelParams(rho0=0.01), seed=1)


def test_init_seed_damage_and_generation():
    g = generate_er(GraphSpec(ER, 100, 6.0, seed=4))
    s = init_state(g, ModelParams(rho0=0.05), seed=1, dmg=LogisticClock(0.1, 0.5))
    seeded = s.comp == IU
    assert np.all(s.damage[seeded] == 0.1)
    assert np.all(s.strain_gen[seeded] == 0)
    assert np.all(s.ever_infected[seeded])
    assert np.all(s.damage[~seeded] == 0.0)


def test_init_deterministic():
    g = generate_er(GraphSpec(ER, 200, 6.0, seed=4))
    a = init_state(g, ModelParams(rho0=0.05), seed=9)
    b = init_state(g, ModelParams(rho0=0.05), seed=9)
    assert np.array_equal(a.comp, b.comp)
    c = init_state(g, ModelParams(rho0=0.05), seed=10)
    assert not np.array_equal(a.comp, c.comp)


# --------------------------------------------- event_probabilities

def test_single_infected_neighbor_collapses_to_tau():
    g = star_graph(1)
    s = SimState.from_compartments(g, [SU, IU], ModelParams())
    p = event_probabilities(0, s, g, ModelParams(tau=0.0055))
    assert p.infect == pytest.approx(0.0055, rel=1e-12)
    assert p.aware_contact == 0.0


def test_isolated_susceptible_has_no_events():
    g = star_graph(2)
    s = SimState.from_compartments(g, [SU, SU, SU], ModelParams())
    p = event_probabilities(0, s, g, ModelParams())
    assert p == type(p)()  # all-zero probabilities


def test_three_infected_neighbors_complement_product():
    # 1 - 0.5^3 = 7/8, exact in binary
    g = star_graph(3)
    s = SimState.from_compartments(g, [SU, IU, IU, IA], ModelParams())
    p = event_probabilities(0, s, g, ModelParams(tau=0.5))
    assert p.infect == 0.875


def test_aware_susceptible_uses_reduced_rate_and_gamma():
    g = star_graph(2)
    params = ModelParams(tau=0.2, gamma=0.03)
    s = SimState.from_compartments(g, [SA, IU, HA], params)
    p = event_probabilities(0, s, g, params)
    assert p.infect == pytest.approx(1 - (1 - 0.02) ** 1, rel=1e-12)
    assert p.heal == 0.03


def test_infected_unaware_contact_and_spontaneous():
    g = star_graph(3)
    params = ModelParams(nu=0.25, mu0=0.5, theta=0.2)
    s = SimState.from_compartments(
        g, [IU, HA, SA, SU], params, damage=[0.6, 0, 0, 0]
    )
    p = event_probabilities(0, s, g, params)
    assert p.aware_contact == pytest.approx(1 - 0.75**2, rel=1e-12)
    assert p.aware_spont == pytest.approx(0.5 * 0.4, rel=1e-12)
    # explicit mu overrides the damage-derived one
    p2 = event_probabilities(0, s, g, params, mu=0.123)
    assert p2.aware_spont == 0.123


def test_healed_node_rejected():
    g = star_graph(1)
    s = SimState.from_compartments(g, [HA, SU], ModelParams())
    with pytest.raises(ValueError):
        event_probabilities(0, s, g, ModelParams())


# ------------------------------------------------------------ step

def test_step_all_susceptible_frozen():
    g = path_graph(6)
    s = SimState.from_compartments(g, [SU] * 6, HOT)
    step(s, g, HOT, Constant(0.9))
    assert s.t == 1
    assert np.all(s.comp == SU)


def test_step_forced_infection_k2():
    g = complete_graph(2)
    params = ModelParams(tau=1.0, nu=0.0, mu0=0.0, gamma=0.0)
    s = SimState.from_compartments(g, [IU, SU], params, damage=[0.3, 0.0])
    step(s, g, params, Constant(0.3))
    assert list(s.comp) == [IU, IU]
    assert s.damage[1] == 0.3
    assert s.strain_gen[1] == 1
    assert bool(s.ever_infected[1])


def test_step_one_step_distribution_k3():
    # one infected in a triangle at tau=0.3: newly infected count follows
    # two independent Bernoulli(0.3): P(total)= (0.49, 0.42, 0.09)
    g = complete_graph(3)
    params = ModelParams(tau=0.3, nu=0.0, mu0=0.0, gamma=0.0)
    s = SimState.from_compartments(g, [IU, SU, SU], params, damage=[0.1, 0, 0])
    trials = 100_000
    _, hist = one_step_outcome_counts(g, s, params, Constant(0.1), trials)
    expected = {1: 0.49, 2: 0.42, 3: 0.09}
    for total, p in expected.items():
        freq = hist[total] / trials
        assert abs(freq - p) <= binomial_3se(p, trials), (total, freq, p)
    assert hist[0] == 0


def test_step_mutating_generation_chain():
    # forced hop-by-hop spread down a path increments the generation
    g = path_graph(4)
    params = ModelParams(tau=1.0, nu=0.0, mu0=0.0, gamma=0.0, theta=1.0)
    model = MutatingStrain(0.1, 0.5)
    s = SimState.from_compartments(g, [IU, SU, SU, SU], params, damage=[0.1, 0, 0, 0])
    for _ in range(3):
        step(s, g, params, model)
    assert list(s.strain_gen) == [0, 1, 2, 3]
    for v in range(4):
        assert s.damage[v] == damage_at(model, int(s.strain_gen[v]))


def test_step_logistic_damage_stamped_with_infection_time():
    # infection decided in the sweep t -> t+1 carries the damage of the
    # first state in which the node is infected, d(t+1)
    g = path_graph(3)
    params = ModelParams(tau=1.0, nu=0.0, mu0=0.0, gamma=0.0, theta=1.0)
    model = LogisticClock(0.1, 0.4)
    s = SimState.from_compartments(g, [IU, SU, SU], params, damage=[0.1, 0, 0])
    step(s, g, params, model)  # t=0 -> 1 infects node 1
    step(s, g, params, model)  # t=1 -> 2 infects node 2
    assert s.damage[1] == damage_at(model, 1)
    assert s.damage[2] == damage_at(model, 2)


# ----------------------------------------------------- is_absorbed

def test_absorbed_all_healed():
    g = path_graph(5)
    s = SimState.from_compartments(g, [HA] * 5, HOT)
    assert is_absorbed(s, g, HOT, Constant(0.9))


def test_absorbed_subthreshold_dead_end():
    # everyone infected below threshold: nothing can ever happen again
    g = complete_graph(4)
    params = ModelParams(theta=0.2)
    s = SimState.from_compartments(g, [IU] * 4, params, damage=[0.1] * 4)
    assert is_absorbed(s, g, params)


def test_not_absorbed_with_detectable_damage():
    g = complete_graph(4)
    params = ModelParams(theta=0.2)
    s = SimState.from_compartments(g, [IU] * 4, params, damage=[0.5, 0.1, 0.1, 0.1])
    assert not is_absorbed(s, g, params)


def test_not_absorbed_with_exposed_susceptible():
    g = path_graph(3)
    params = ModelParams(tau=0.1, nu=0.0, mu0=0.0, gamma=0.0)
    s = SimState.from_compartments(g, [IU, SU, SU], params, damage=[0.1, 0, 0])
    assert not is_absorbed(s, g, params)


def test_null_rates_always_absorbed():
    g = complete_graph(5)
    s = SimState.from_compartments(g, [SU, SA, IU, IA, HA], NULL, damage=[0, 0, 1, 1, 0])
    assert is_absorbed(s, g, NULL)


def test_aware_nodes_pending_recovery_not_absorbed():
    g = path_graph(3)
    params = ModelParams(tau=0.0, nu=0.0, mu0=0.0, gamma=0.5)
    s = SimState.from_compartments(g, [SA, SU, SU], params)
    assert not is_absorbed(s, g, params)


# ------------------------------------------------ trajectory audits

def _audit_trajectory(g, params, dmg, seed, max_sweeps=200):
    s = init_state(g, params, seed, dmg)
    prev = s.comp.copy()
    ever_prev = int(s.ever_infected.sum())
    while not is_absorbed(s, g, params, dmg) and s.t < max_sweeps:
        step(s, g, params, dmg)
        counts = s.counts()
        assert counts.sum() == g.n
        for old, new in zip(prev, s.comp):
            assert (int(old), int(new)) in ALLOWED_TRANSITIONS
        assert int(s.ever_infected.sum()) >= ever_prev
        ever_prev = int(s.ever_infected.sum())
        prev = s.comp.copy()
    return s


def test_trajectory_respects_allowed_transitions():
    g = generate_er(GraphSpec(ER, 60, 6.0, seed=2))
    final = _audit_trajectory(g, HOT, Constant(0.9), seed=5)
    # hot parameters drive the whole cycle to the healed end state
    assert np.all(final.comp == HA)


def test_null_dynamics_frozen_trajectory():
    g = generate_er(GraphSpec(ER, 40, 5.0, seed=2))
    s = init_state(g, ModelParams(tau=0, nu=0, mu0=0, gamma=0, rho0=0.1), seed=3,
                   dmg=Constant(0.5))
    ref = s.comp.copy()
    for _ in range(5):
        step(s, g, ModelParams(tau=0, nu=0, mu0=0, gamma=0, rho0=0.1), Constant(0.5))
        assert np.array_equal(s.comp, ref)


@given(
    st.integers(0, 10_000),
    st.floats(0.05, 0.9),
    st.floats(0.0, 0.9),
    st.floats(0.0, 0.9),
    st.floats(0.0, 0.5),
    st.floats(0.0, 1.0),
)
@settings(max_examples=25, deadline=None)
def test_random_trajectories_conserve_and_stay_legal(seed, tau, nu, mu0, gamma, d):
    params = ModelParams(tau=tau, nu=nu, mu0=mu0, gamma=gamma, theta=0.3, rho0=0.1)
    g = generate_er(GraphSpec(ER, 30, 4.0, seed=seed % 97))
    _audit_trajectory(g, params, Constant(d), seed, max_sweeps=60)


# ------------------------------------------- cache maintenance

def test_incremental_neighbor_counts_match_recount():
    g = generate_er(GraphSpec(ER, 80, 8.0, seed=6))
    params = HOT
    s = init_state(g, params, seed=1, dmg=Constant(0.8))
    for _ in range(30):
        step(s, g, params, Constant(0.8))
        n_inf, n_aw = _count_neighbor_states(g.n, g.indptr, g.indices, s.comp)
        assert np.array_equal(s.n_inf, n_inf)
        assert np.array_equal(s.n_aw, n_aw)
        expect_mu = np.where(
            s.damage >= params.theta, params.mu0 * (s.damage - params.theta), 0.0
        )
        assert np.allclose(s.mu, expect_mu, rtol=0, atol=0)


# ------------------------------------------- relabeling invariance

@pytest.mark.parametrize(
    "model", [Constant(0.6), LogisticClock(0.1, 0.3), MutatingStrain(0.1, 0.3)]
)
def test_node_relabeling_permutes_trajectory(model):
    n = 40
    g = generate_er(GraphSpec(ER, n, 6.0, seed=8))
    params = ModelParams(tau=0.3, nu=0.25, mu0=0.4, gamma=0.15, theta=0.2)
    comp0 = np.full(n, SU, np.int8)
    comp0[:4] = IU
    dmg0 = np.zeros(n)
    dmg0[:4] = damage_at(model, 0)
    s1 = SimState.from_compartments(g, comp0, params, damage=dmg0, seed=9)

    rng = np.random.default_rng(0)
    perm = rng.permutation(n)
    edges2 = [
        (int(perm[u]), int(perm[v]))
        for u in range(n)
        for v in g.neighbors(u)
        if u < v
    ]
    g2 = Graph.from_edges(n, edges2)
    comp2 = np.empty_like(comp0)
    comp2[perm] = comp0
    dmg2 = np.empty_like(dmg0)
    dmg2[perm] = dmg0
    s2 = SimState.from_compartments(g2, comp2, params, damage=dmg2, seed=9)
    # relabeled node perm[v] re-seeded with node v's original draw key
    keys = np.empty(n, np.uint64)
    keys[perm] = np.arange(n, dtype=np.uint64)
    s2.node_keys = keys

    for _ in range(25):
        step(s1, g, params, model)
        step(s2, g2, params, model)
        assert np.array_equal(s2.comp[perm], s1.comp)
        assert np.array_equal(s2.damage[perm], s1.damage)
        assert np.array_equal(s2.strain_gen[perm], s1.strain_gen)


# ------------------------------------------------------- accessors

def test_node_view_and_labels():
    g = star_graph(1)
    s = SimState.from_compartments(g, [IA, SU], ModelParams(), damage=[0.4, 0])
    node = s.node(0)
    assert node.compartment is Compartment.IA
    assert node.damage_received == 0.4
    assert node.strain_generation == 0
