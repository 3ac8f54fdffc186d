"""Shared types for the differential evolution suite."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class VariantId(str, enum.Enum):
    """The ten optimizer variants behind the uniform run interface."""

    DERAND = "DERAND"
    DEBEST = "DEBEST"
    DESPS = "DESPS"
    SHADE = "SHADE"
    RBDE = "RBDE"
    JADE = "JADE"
    DEGL = "DEGL"
    DESIM = "DESIM"
    DCMAEA = "DCMAEA"
    OBDE = "OBDE"


ALL_VARIANTS: tuple[VariantId, ...] = tuple(VariantId)


@dataclass
class DEConfig:
    """Run-level hyperparameters shared by every variant.

    `variant_params` carries variant-specific knobs (e.g. "memory_size" for
    SHADE, "p_best_fraction" for JADE, "neighborhood_k"/"weight" for DEGL,
    "species_size" for DESPS, "jumping_rate" for OBDE); unset keys fall back
    to the defaults recommended by each variant's original formulation.
    """

    pop_size: int = 10
    crossover_prob: float = 0.5
    scale_factor: float = 0.7
    max_evals: int = 1000
    seed: int = 0
    variant_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pop_size < 4:
            raise ValueError(f"pop_size must be >= 4, got {self.pop_size}")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError(f"crossover_prob must be in [0, 1], got {self.crossover_prob}")
        if self.scale_factor <= 0.0:
            raise ValueError(f"scale_factor must be > 0, got {self.scale_factor}")
        if self.max_evals < self.pop_size:
            raise ValueError(
                f"max_evals ({self.max_evals}) must be >= pop_size ({self.pop_size})"
            )


@dataclass
class Individual:
    x: np.ndarray
    fitness: float | None = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


@dataclass
class RunTrace:
    """Best-so-far fitness after each objective evaluation of one run."""

    best_so_far: np.ndarray
    best_x: np.ndarray
    variant: VariantId
    seed: int

    def __post_init__(self):
        self.best_so_far = np.asarray(self.best_so_far, dtype=float)

    @property
    def final_best(self) -> float:
        return float(self.best_so_far[-1])


def write_trace_csv(trace: RunTrace, path: Path | str) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eval_index", "best_so_far"])
        for i, value in enumerate(trace.best_so_far, start=1):
            writer.writerow([i, repr(float(value))])


def read_trace_csv(path: Path | str) -> np.ndarray:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["eval_index", "best_so_far"]:
            raise ValueError(f"{path}: not a trace file (header {header})")
        values = [float(row[1]) for row in reader]
    if not values:
        raise ValueError(f"{path}: trace has no rows")
    return np.array(values)
