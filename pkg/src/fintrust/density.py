"""Trust densities on [0, 1] via Gaussian KDE with boundary reflection.

Each sample contributes its own kernel plus mirror images about 0 and 1,
so almost no mass leaks past the ends of the unit interval.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .trust import ScoredPrediction

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_CHUNK = 1 << 20  # kernel evaluations per block, bounds peak memory


class GroupBy(str, enum.Enum):
    PREDICTED = "predicted"
    ORACLE = "oracle"


@dataclass(frozen=True)
class DensityConfig:
    gamma: float = 0.5
    grid_points: int = 1000
    group_by: GroupBy = GroupBy.PREDICTED

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.grid_points < 2:
            raise ValidationError(f"grid_points must be at least 2, got {self.grid_points}")
        try:
            object.__setattr__(self, "group_by", GroupBy(self.group_by))
        except ValueError:
            raise ValidationError(
                f"group_by must be 'predicted' or 'oracle', got {self.group_by!r}"
            ) from None


@dataclass(frozen=True)
class DensityCurve:
    scenario: int
    grid: np.ndarray
    total: np.ndarray
    cond_correct: np.ndarray
    cond_incorrect: np.ndarray
    n_samples: int
    n_correct: int
    bandwidth: float

    def mass(self) -> float:
        return trapezoid_mass(self.grid, self.total)


def bandwidth(n: int, gamma: float = 0.5) -> float:
    if n < 1:
        raise ValidationError("bandwidth needs at least one sample")
    return gamma / math.sqrt(n)


def unit_grid(points: int = 1000) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def trapezoid_mass(grid: np.ndarray, values: np.ndarray) -> float:
    return float(np.sum((values[1:] + values[:-1]) * np.diff(grid)) / 2.0)


def estimate_density(
    samples: Sequence[float], weight: float, h: float, grid: np.ndarray, n: int | None = None
) -> np.ndarray:
    """Reflected Gaussian KDE of ``samples`` evaluated on ``grid``.

    ``f(g) = weight/n * sum_i [K(g - q_i) + K(g + q_i) + K(g - (2 - q_i))]``
    with ``K`` a Gaussian of standard deviation ``h``.  ``n`` defaults to the
    number of samples.
    """
    q = np.asarray(samples, dtype=np.float64).ravel()
    grid = np.asarray(grid, dtype=np.float64)
    if q.size and (np.any(~np.isfinite(q)) or q.min() < 0.0 or q.max() > 1.0):
        raise DomainError("density samples must lie in [0, 1]")
    if not 0.0 < weight <= 1.0:
        raise DomainError(f"weight must lie in (0, 1], got {weight}")
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    n = q.size if n is None else n
    out = np.zeros_like(grid)
    if q.size == 0:
        return out
    step = max(1, _CHUNK // max(1, grid.size))
    for start in range(0, q.size, step):
        block = q[start : start + step]
        g = grid[:, None]
        u0 = (g - block) / h
        u1 = (g + block) / h
        u2 = (g - (2.0 - block)) / h
        out += np.sum(np.exp(-0.5 * u0 * u0) + np.exp(-0.5 * u1 * u1) + np.exp(-0.5 * u2 * u2), axis=1)
    return out * (weight / (n * h * _SQRT_2PI))


def _label_of(s: ScoredPrediction, group_by: GroupBy) -> int:
    p = s.prediction
    return p.predicted_label if group_by is GroupBy.PREDICTED else p.true_label


def scenario_densities(
    scored: Sequence[ScoredPrediction], scenario: int, cfg: DensityConfig = DensityConfig()
) -> DensityCurve:
    """Total and conditional trust densities for one answer scenario.

    The conditional curves reuse the group's bandwidth and are weighted by
    the within-group correct / incorrect fractions, so they add up to the
    total curve.
    """
    group = [s for s in scored if _label_of(s, cfg.group_by) == scenario]
    if not group:
        raise ValidationError(
            f"scenario {scenario} has no records when grouping by {cfg.group_by.value} label"
        )
    n = len(group)
    h = bandwidth(n, cfg.gamma)
    grid = unit_grid(cfg.grid_points)
    q_all = [s.q for s in group]
    q_right = [s.q for s in group if s.correct]
    q_wrong = [s.q for s in group if not s.correct]
    total = estimate_density(q_all, 1.0, h, grid)

    def part(qs: list[float]) -> np.ndarray:
        if not qs:
            return np.zeros_like(grid)
        return estimate_density(qs, len(qs) / n, h, grid, n=len(qs))

    return DensityCurve(
        scenario, grid, total, part(q_right), part(q_wrong), n, len(q_right), h
    )


def write_density_tsv(path: str | os.PathLike, curve: DensityCurve) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("q\ttotal\tcond_correct\tcond_incorrect\n")
        for row in zip(curve.grid, curve.total, curve.cond_correct, curve.cond_incorrect):
            fh.write("\t".join(f"{v:.12g}" for v in row) + "\n")


def read_density_tsv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter="\t", skiprows=1, ndmin=2)
    return {
        "q": data[:, 0],
        "total": data[:, 1],
        "cond_correct": data[:, 2],
        "cond_incorrect": data[:, 3],
    }
