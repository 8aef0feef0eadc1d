"""Exception types shared across the package."""

from __future__ import annotations


class CyberEpiError(Exception):
    """Base class for all package errors."""


class ParameterError(CyberEpiError, ValueError):
    """A parameter is outside its valid range.

    The message is machine-parsable: ``<name>=<value> out of range <range>``.
    """

    def __init__(self, name: str, value, valid: str):
        self.name = name
        self.value = value
        self.valid = valid
        super().__init__(f"{name}={value} out of range {valid}")


class GraphGenerationError(CyberEpiError, RuntimeError):
    """Graph sampling failed (e.g. connectivity retries exhausted)."""
