"""Damage laws and the threshold-gated spontaneous-awareness rate.

Three laws govern the base damage a virus deals to a device at the
moment of its infection:

* ``Constant``: every infection deals damage d.
* ``LogisticClock``: damage follows a logistic curve of global
  simulation time, d(t) = d0*exp(eps*t) / (1 + d0*(exp(eps*t) - 1)),
  growing from d0 toward carrying capacity 1.
* ``MutatingStrain``: the same curve evaluated at the strain's hop
  count (how many transmissions the infecting strain made before
  reaching the device) instead of wall-clock time.

A device's spontaneous-awareness rate is mu0 * (d - theta) when its
received damage d reaches the threshold theta, and zero below it; the
rate is always read from the damage received at infection time, never
from the current clock value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit

from .errors import ParameterError
from .params import ModelParams

KIND_CONSTANT = 0
KIND_LOGISTIC = 1
KIND_MUTATING = 2


@dataclass(frozen=True)
class Constant:
    """Fixed base damage d in [0, 1] per infection."""

    d: float

    def __post_init__(self):
        if not 0.0 <= self.d <= 1.0:
            raise ParameterError("d", self.d, "[0, 1]")


@dataclass(frozen=True)
class LogisticClock:
    """Damage grows with global time at rate epsilon from d0."""

    d0: float = 0.1
    epsilon: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.d0 <= 1.0:
            raise ParameterError("d0", self.d0, "[0, 1]")
        if not self.epsilon > 0.0:
            raise ParameterError("epsilon", self.epsilon, "(0, inf)")


@dataclass(frozen=True)
class MutatingStrain:
    """Damage grows with the strain's transmission count at rate epsilon."""

    d0: float = 0.1
    epsilon: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.d0 <= 1.0:
            raise ParameterError("d0", self.d0, "[0, 1]")
        if not self.epsilon > 0.0:
            raise ParameterError("epsilon", self.epsilon, "(0, inf)")


DamageModel = Union[Constant, LogisticClock, MutatingStrain]


def model_code(model: DamageModel) -> tuple[int, float, float]:
    """(kind, d_or_d0, epsilon) triple consumed by the simulation kernels."""
    if isinstance(model, Constant):
        return KIND_CONSTANT, model.d, 0.0
    if isinstance(model, LogisticClock):
        return KIND_LOGISTIC, model.d0, model.epsilon
    if isinstance(model, MutatingStrain):
        return KIND_MUTATING, model.d0, model.epsilon
    raise TypeError(f"not a damage model: {model!r}")


@njit("float64(int64, float64, float64, int64)", cache=True, nogil=True)
def _damage_value(kind, d_or_d0, eps, clock):
    if kind == KIND_CONSTANT:
        return d_or_d0
    d0 = d_or_d0
    if clock <= 0 or d0 <= 0.0 or d0 >= 1.0:
        return d0
    # algebraically equal to d0*e^(eps*c) / (1 + d0*(e^(eps*c) - 1)) but
    # stays finite for large eps*c
    return 1.0 / (1.0 + (1.0 - d0) / d0 * np.exp(-eps * clock))


def damage_at(model: DamageModel, clock: int) -> float:
    """Base damage dealt by an infection whose clock value is ``clock``.

    For Constant the clock is ignored; for LogisticClock the clock is
    global time; for MutatingStrain it is the strain generation.
    """
    if clock < 0:
        raise ParameterError("clock", clock, "[0, inf)")
    kind, a, b = model_code(model)
    return float(_damage_value(kind, a, b, clock))


def mu_of(damage_received: float, params: ModelParams) -> float:
    """Spontaneous-awareness rate for a device that received this damage."""
    if damage_received >= params.theta:
        return params.mu0 * (damage_received - params.theta)
    return 0.0


def assign_infection(
    model: DamageModel, global_t: int, infector_strain_generation: int
) -> tuple[float, int]:
    """Damage and strain generation for a contact infection.

    ``global_t`` is the time index of the first state in which the node
    is infected; the new generation is always the infector's plus one.
    """
    generation = infector_strain_generation + 1
    if isinstance(model, MutatingStrain):
        return damage_at(model, generation), generation
    return damage_at(model, global_t), generation


def assign_seed(model: DamageModel) -> tuple[float, int]:
    """Damage and generation for an initially seeded node (zero hops, t=0)."""
    return damage_at(model, 0), 0


def describe(model: DamageModel) -> dict:
    """Config-style mapping for provenance echoes."""
    if isinstance(model, Constant):
        return {"kind": "constant", "d": model.d}
    kind = "logistic" if isinstance(model, LogisticClock) else "mutating"
    return {"kind": kind, "d0": model.d0, "epsilon": model.epsilon}


def from_config(section: dict) -> DamageModel:
    """Build a damage model from a config mapping (``kind`` plus fields)."""
    kind = section.get("kind")
    if kind == "constant":
        return Constant(d=float(section["d"]))
    if kind == "logistic":
        return LogisticClock(
            d0=float(section.get("d0", 0.1)), epsilon=float(section["epsilon"])
        )
    if kind == "mutating":
        return MutatingStrain(
            d0=float(section.get("d0", 0.1)), epsilon=float(section["epsilon"])
        )
    raise ParameterError("damage.kind", kind, "{constant, logistic, mutating}")
