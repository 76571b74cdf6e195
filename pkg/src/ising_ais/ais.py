"""Annealed importance sampling over a boundary-field schedule.

A path starts from the free-boundary model (field scale 0, fast-mixing),
burns in with Swendsen-Wang, then walks the schedule theta_0=0 < ... <
theta_L=1 toward the full mixed boundary condition. At level l the
log-weight picks up beta*(theta_l - theta_{l-1})*sum_i h_i s_i evaluated at
the configuration carried into the level (the coupling term is the same in
both densities and cancels), after which the configuration takes
steps_per_level kernel steps at field scale theta_l. There are L increments
and L-1 transition blocks; the final level only contributes its increment.

Paths are reproducible in isolation: path k draws everything from
default_rng((base_seed, k)), so ensembles are identical no matter how the
paths are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .model import IsingGraph, random_spins
from .sw import sw_step


@dataclass(frozen=True, eq=False)
class Schedule:
    """Non-decreasing field scales theta_0 = 0 up to theta_L = 1."""

    thetas: np.ndarray

    def __post_init__(self):
        thetas = np.ascontiguousarray(self.thetas, dtype=np.float64)
        if thetas.ndim != 1 or thetas.size < 2:
            raise ValueError("schedule needs at least the two endpoints")
        if thetas[0] != 0.0 or thetas[-1] != 1.0:
            raise ValueError("schedule must start at 0 and end at 1")
        if np.any(np.diff(thetas) < 0):
            raise ValueError("schedule must be non-decreasing")
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    @classmethod
    def equally_spaced(cls, num_levels: int) -> "Schedule":
        if num_levels < 1:
            raise ValueError("num_levels must be >= 1")
        return cls(np.linspace(0.0, 1.0, num_levels + 1))

    @property
    def num_levels(self) -> int:
        return self.thetas.size - 1


@dataclass(frozen=True, eq=False)
class AisConfig:
    """Ensemble parameters: K paths, burn-in, per-level steps, schedule, seed."""

    num_paths: int
    burnin_steps: int
    steps_per_level: int
    schedule: Schedule
    base_seed: int

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.burnin_steps < 0:
            raise ValueError("burnin_steps must be >= 0")
        if self.steps_per_level < 1:
            raise ValueError("steps_per_level must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be a non-negative integer")
        if not isinstance(self.schedule, Schedule):
            raise ValueError("schedule must be a Schedule")


@dataclass(frozen=True, eq=False)
class AisPath:
    """Final configuration plus the cumulative log-weight after each level."""

    final_spins: np.ndarray
    log_weight_history: np.ndarray

    @property
    def log_weight(self) -> float:
        return float(self.log_weight_history[-1])


def path_rng(base_seed: int, path_index: int) -> np.random.Generator:
    """The random stream owned by one path; independent across indices."""
    return np.random.default_rng((base_seed, path_index))


def log_weight_increment(
    g: IsingGraph, s: np.ndarray, theta_prev: float, theta_next: float
) -> float:
    """log of the unnormalized-density ratio between consecutive levels.

    Only the field term differs between the levels, so this is
    beta*(theta_next - theta_prev)*sum_i h_i s_i.
    """
    return g.beta * (theta_next - theta_prev) * float(g.field @ s.astype(np.float64))


def run_path(g: IsingGraph, cfg: AisConfig, path_index: int) -> AisPath:
    """One annealing path, deterministic given (cfg.base_seed, path_index)."""
    rng = path_rng(cfg.base_seed, path_index)
    s = random_spins(g.n_interior, rng)
    for _ in range(cfg.burnin_steps):
        s = sw_step(g, 0.0, s, rng)
    thetas = cfg.schedule.thetas
    num_levels = cfg.schedule.num_levels
    history = np.empty(num_levels)
    log_w = 0.0
    for level in range(1, num_levels + 1):
        log_w += log_weight_increment(g, s, thetas[level - 1], thetas[level])
        history[level - 1] = log_w
        if level < num_levels:
            for _ in range(cfg.steps_per_level):
                s = sw_step(g, thetas[level], s, rng)
    return AisPath(s, history)


def run_ensemble(g: IsingGraph, cfg: AisConfig, workers: int = 1) -> list[AisPath]:
    """K independent paths; identical results for any worker count."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        return [run_path(g, cfg, k) for k in range(cfg.num_paths)]
    chunk = max(1, cfg.num_paths // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(run_path, g, cfg), range(cfg.num_paths), chunksize=chunk))
