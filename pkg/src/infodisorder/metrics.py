"""Observables read by the Super-Agent and the cross-run virality statistic."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import round_half_up

VIRAL_THRESHOLD = 0.5


@dataclass(frozen=True)
class Observation:
    gc: float
    gom: float
    mia: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gc, self.gom, self.mia], dtype=np.float64)


@dataclass
class RunRecord:
    final_gc: float
    gc_trace: list[float] = field(repr=False)
    theta: float = 0.0
    p_n: float = 0.0
    p_o: float = 0.0
    sa_delay: int | None = None
    seed: int = 0


def global_cascade(sim) -> float:
    """Fraction of agents currently A-active."""
    return float(np.count_nonzero(sim.is_a_active)) / sim.n


def global_opinion_metric(sim) -> float:
    return float(np.mean(sim.om))


def most_influent_a(sim, method: str = "betweenness", fraction: float = 0.10) -> float:
    """A-active share among the ``round(fraction * N)`` most central agents.

    Ranking is by ``method`` score, descending, ties by ascending node id.
    Returns 0.0 when the reference set is empty.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = round_half_up(fraction * sim.n)
    if count == 0:
        return 0.0
    top = sim.centrality(method).top(count)
    return float(np.count_nonzero(sim.is_a_active[top])) / count


def observe(sim) -> Observation:
    cfg = sim.config
    return Observation(
        gc=global_cascade(sim),
        gom=global_opinion_metric(sim),
        mia=most_influent_a(sim, cfg.mia_method, cfg.node_range),
    )


def is_viral(gc: float) -> bool:
    return gc > VIRAL_THRESHOLD


def virality(records: Sequence[RunRecord] | Sequence[float]) -> float:
    """Share of runs whose final global cascade is strictly above 0.5.

    Accepts run records or bare final-GC values.
    """
    if len(records) == 0:
        raise ValueError("virality of an empty record list is undefined")
    finals = [r.final_gc if isinstance(r, RunRecord) else float(r) for r in records]
    return sum(1 for gc in finals if is_viral(gc)) / len(finals)
