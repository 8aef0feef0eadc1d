"""Model transition rates and thresholds.

Defaults are the study's chosen operating point: infection rate 0.0055,
contact awareness 0.011, spontaneous awareness base 0.011, recovery
0.03, initial infected fraction 0.01, detection threshold 0.2, and
aware susceptibles infected at one tenth of the base rate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Per-step transition rates; all probabilities per step."""

    tau: float = 0.0055  # infection rate per infected neighbor
    nu: float = 0.011  # awareness rate per aware neighbor
    mu0: float = 0.011  # spontaneous-awareness base rate
    gamma: float = 0.03  # recovery rate for aware nodes
    rho0: float = 0.01  # initially infected fraction
    theta: float = 0.2  # damage threshold for spontaneous awareness
    aware_infection_factor: float = 0.1  # tau' = factor * tau

    def __post_init__(self):
        for name in ("tau", "nu", "mu0", "gamma", "theta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(name, value, "[0, 1]")
        if not 0.0 < self.rho0 <= 1.0:
            raise ParameterError("rho0", self.rho0, "(0, 1]")
        if not 0.0 <= self.aware_infection_factor:
            raise ParameterError(
                "aware_infection_factor", self.aware_infection_factor, "[0, inf)"
            )
        if not 0.0 <= self.tau_prime <= 1.0:
            raise ParameterError("tau_prime", self.tau_prime, "[0, 1]")

    @property
    def tau_prime(self) -> float:
        """Infection rate experienced by aware susceptibles."""
        return self.aware_infection_factor * self.tau
