"""Observables computed from run data: total damage, cycle phases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import HA, IA, IU, SA


@dataclass(frozen=True)
class PhaseReport:
    """Landmark steps of one epidemic cycle."""

    onset_t: Optional[int]  # first step with any aware node, or None
    peak_iu_t: int  # argmax step of infected-unaware count (first on ties)
    peak_ia_t: int  # argmax step of infected-aware count (first on ties)
    end_t: int  # last recorded step


@dataclass(frozen=True)
class SweepPoint:
    """One point of a parameter sweep."""

    x: float  # swept value (base damage d, or growth rate epsilon)
    mean_dn: float
    std_dn: float
    mean_ever_infected_fraction: float
    realizations: int


def total_damage(damage_received, n: Optional[int] = None) -> float:
    """Normalized total injury: sum of per-node damages over n.

    Uses exact summation so that constant-damage identities (all nodes
    damaged d gives exactly d) hold to machine precision.
    """
    values = np.asarray(damage_received, dtype=np.float64)
    if n is None:
        n = values.shape[0]
    return math.fsum(values) / n


def cycle_phases(series: np.ndarray) -> PhaseReport:
    """Phase landmarks of a compartment-count series (rows are steps)."""
    series = np.asarray(series)
    if series.shape[0] == 0:
        raise ValueError("empty series")
    aware = series[:, SA] + series[:, IA] + series[:, HA]
    nz = np.flatnonzero(aware > 0)
    onset = int(nz[0]) if nz.size else None
    return PhaseReport(
        onset_t=onset,
        peak_iu_t=int(np.argmax(series[:, IU])),
        peak_ia_t=int(np.argmax(series[:, IA])),
        end_t=series.shape[0] - 1,
    )
