"""Shared error base class and the diagnostic record used across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass


class TexcorpusError(Exception):
    """Base class for all toolkit errors."""


@dataclass(frozen=True)
class Diagnostic:
    """A soft failure: something was skipped or degraded without aborting."""

    stage: str
    message: str

    def __str__(self) -> str:
        return f"[{self.stage}] {self.message}"
