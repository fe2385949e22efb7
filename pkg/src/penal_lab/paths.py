"""Ensembles of simulated paths with their accumulated functionals."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .io import write_csv


@dataclass(frozen=True, eq=False)
class PathBundle:
    """``values[i, j]`` is path ``i`` at ``times[j]``.

    ``kind`` names the process (``"bm"``, ``"diffusion"``, ``"besq"`` ...) and
    ``functionals`` holds per-path accumulated quantities keyed by name.
    """

    times: np.ndarray
    values: np.ndarray
    dt: float
    seed: int
    kind: str
    functionals: Mapping[str, np.ndarray] = field(default_factory=dict)
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[1] != len(self.times):
            raise ValueError("values must have shape (n_paths, len(times))")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def final(self) -> np.ndarray:
        return self.values[:, -1]

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and standard error at each stored time."""
        n = self.n_paths
        sd = self.values.std(axis=0, ddof=1) if n > 1 else np.zeros(len(self.times))
        return self.values.mean(axis=0), sd / np.sqrt(n)

    def to_csv(self, path: str | Path) -> Path:
        """Per-time summary: ``t, mean, stderr``."""
        mean, se = self.moments()
        return write_csv(path, {"t": self.times, "mean": mean, "stderr": se})
