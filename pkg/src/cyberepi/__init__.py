"""Stochastic simulator for coupled malware/awareness epidemics on networks."""

from .damage import Constant, DamageModel, LogisticClock, MutatingStrain, damage_at, mu_of
from .dynamics import Compartment, EventProbs, NodeState, SimState, event_probabilities, init_state, is_absorbed, step
from .engine import EnsembleSummary, RunResult, run, run_ensemble
from .errors import CyberEpiError, GraphGenerationError, ParameterError
from .graph import Graph, GraphFamily, GraphSpec, generate, generate_ba, generate_er, is_connected
from .metrics import PhaseReport, SweepPoint, cycle_phases, total_damage
from .params import ModelParams

__version__ = "0.1.0"

__all__ = [
    "Compartment",
    "Constant",
    "CyberEpiError",
    "DamageModel",
    "EnsembleSummary",
    "EventProbs",
    "Graph",
    "GraphFamily",
    "GraphGenerationError",
    "GraphSpec",
    "LogisticClock",
    "ModelParams",
    "MutatingStrain",
    "NodeState",
    "ParameterError",
    "PhaseReport",
    "RunResult",
    "SimState",
    "SweepPoint",
    "cycle_phases",
    "damage_at",
    "event_probabilities",
    "generate",
    "generate_ba",
    "generate_er",
    "init_state",
    "is_absorbed",
    "is_connected",
    "mu_of",
    "run",
    "run_ensemble",
    "step",
    "total_damage",
]
