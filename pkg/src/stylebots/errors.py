"""Shared exception types and the CLI exit-code mapping."""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class StylebotsError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigError(StylebotsError):
    """Invalid configuration; message lists every violated invariant."""

    exit_code = EXIT_CONFIG

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid configuration:\n{lines}")


class LifecycleError(StylebotsError):
    """Operation called outside its legal phase (e.g. stepping a finished episode)."""


class ReplayError(StylebotsError):
    """Replay log is unreadable, inconsistent, or fails hash verification."""

    exit_code = EXIT_IO


class CheckpointError(StylebotsError):
    """Checkpoint file is unreadable, truncated, or incompatible."""

    exit_code = EXIT_IO


class NumericsError(StylebotsError):
    """Non-finite values surfaced from the network or optimizer."""

    exit_code = EXIT_NUMERIC
