"""Replicated virality sweeps over (theta, p_n), with or without a Super-Agent.

Each replicate's simulation seed is derived from ``(master_seed,
theta_index, p_n_index, replicate_index)`` through numpy's ``SeedSequence``
hash, so results do not depend on execution order or on the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .abm import Simulation, advance
from .config import DEFAULT_P_N_GRID, SimConfig
from .metrics import RunRecord, global_cascade, virality
from .superagent import QNetwork, greedy_policy, load_checkpoint, run_episode

log = logging.getLogger(__name__)

CSV_HEADER = ("theta", "p_n", "p_o", "sa_delay", "replicates", "virality",
              "mean_final_gc", "std_final_gc")


@dataclass(frozen=True)
class SweepSpec:
    theta_values: tuple[float, ...]
    p_n_grid: tuple[float, ...] = DEFAULT_P_N_GRID
    p_o: float = 0.0
    sa_delay: int | None = None
    replicates: int = 300
    master_seed: int = 0
    checkpoint_path: str | None = None
    base: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not self.theta_values or not self.p_n_grid:
            raise ValueError("theta and p_n grids must be non-empty")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")

    def config_for(self, ti: int, pi: int, replicate: int) -> SimConfig:
        changes = dict(
            theta=float(self.theta_values[ti]),
            p_n=float(self.p_n_grid[pi]),
            p_o=self.p_o,
            seed=derive_seed(self.master_seed, ti, pi, replicate),
        )
        if self.sa_delay is not None:
            changes["sa_delay"] = self.sa_delay
        return self.base.replace(**changes)

    def validate(self) -> None:
        """Build every grid config up front so bad values fail before any run."""
        for ti in range(len(self.theta_values)):
            for pi in range(len(self.p_n_grid)):
                self.config_for(ti, pi, 0)


@dataclass
class SweepRow:
    theta: float
    p_n: float
    p_o: float
    sa_delay: int | None
    final_gcs: list[float] = field(repr=False)

    @property
    def replicates(self) -> int:
        return len(self.final_gcs)

    @property
    def virality(self) -> float:
        return virality(self.final_gcs)

    @property
    def mean_final_gc(self) -> float:
        return float(np.mean(self.final_gcs))

    @property
    def std_final_gc(self) -> float:
        return float(np.std(self.final_gcs))

    @property
    def standard_error(self) -> float:
        """Binomial standard error of the virality estimate."""
        v = self.virality
        return float(np.sqrt(v * (1.0 - v) / self.replicates))

    def sort_key(self):
        return (self.theta, self.p_n, -1 if self.sa_delay is None else self.sa_delay, self.p_o)


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def sorted_rows(self) -> list[SweepRow]:
        return sorted(self.rows, key=SweepRow.sort_key)

    def select(self, theta: float | None = None, sa_delay="any", p_o: float | None = None) -> list[SweepRow]:
        out = []
        for r in self.sorted_rows():
            if theta is not None and not np.isclose(r.theta, theta):
                continue
            if sa_delay != "any" and r.sa_delay != sa_delay:
                continue
            if p_o is not None and not np.isclose(r.p_o, p_o):
                continue
            out.append(r)
        return out

    def __add__(self, other: "SweepResult") -> "SweepResult":
        return SweepResult(self.rows + other.rows)


def derive_seed(master_seed: int, theta_index: int, p_n_index: int, replicate: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(theta_index, p_n_index, replicate))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def simulate(config: SimConfig) -> RunRecord:
    """One run without a Super-Agent."""
    sim = Simulation.from_config(config)
    trace = [global_cascade(sim)] + advance(sim, config.total_ticks)
    return RunRecord(final_gc=trace[-1], gc_trace=trace, theta=config.theta, p_n=config.p_n,
                     p_o=config.p_o, sa_delay=None, seed=config.seed)


def _run_grid_point(args) -> tuple[int, int, list[float]]:
    spec, ti, pi, net = args
    finals = []
    for r in range(spec.replicates):
        cfg = spec.config_for(ti, pi, r)
        if net is None:
            finals.append(simulate(cfg).final_gc)
        else:
            finals.append(run_episode(cfg, greedy_policy(net)).record.final_gc)
    return ti, pi, finals


def _run(spec: SweepSpec, net: QNetwork | None, jobs: int) -> SweepResult:
    spec.validate()
    tasks = [(spec, ti, pi, net)
             for ti in range(len(spec.theta_values)) for pi in range(len(spec.p_n_grid))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_grid_point, tasks))
    else:
        outputs = [_run_grid_point(t) for t in tasks]
    # deterministic join keyed by grid indices
    outputs.sort(key=lambda o: (o[0], o[1]))
    rows = [
        SweepRow(float(spec.theta_values[ti]), float(spec.p_n_grid[pi]), spec.p_o,
                 spec.sa_delay if net is not None else None, finals)
        for ti, pi, finals in outputs
    ]
    return SweepResult(rows)


def run_baseline_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    if spec.sa_delay is not None or spec.checkpoint_path is not None:
        raise ValueError("baseline sweep must not carry a sa_delay or checkpoint")
    return _run(spec, None, jobs)


def run_sa_sweep(spec: SweepSpec, checkpoint=None, jobs: int = 1) -> SweepResult:
    """Sweep with a frozen greedy Super-Agent.

    ``checkpoint`` may be a path, a loaded agent, or a bare network; when
    omitted, ``spec.checkpoint_path`` is loaded.
    """
    if spec.sa_delay is None:
        raise ValueError("Super-Agent sweep needs a sa_delay")
    if checkpoint is None:
        checkpoint = spec.checkpoint_path
    if checkpoint is None:
        raise ValueError("Super-Agent sweep needs a checkpoint")
    if isinstance(checkpoint, (str, Path)):
        net = load_checkpoint(checkpoint).net
    elif isinstance(checkpoint, QNetwork):
        net = checkpoint
    else:
        net = checkpoint.net
    return _run(spec, net, jobs)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in result.sorted_rows():
        writer.writerow([
            _fmt(r.theta), _fmt(r.p_n), _fmt(r.p_o),
            "" if r.sa_delay is None else r.sa_delay,
            r.replicates, _fmt(r.virality), _fmt(r.mean_final_gc), _fmt(r.std_final_gc),
        ])
    return buf.getvalue()


def emit_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(csv_text(result), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc.strerror}") from exc
    return path


def emit_runs_csv(result: SweepResult, path: str | Path) -> Path:
    """Per-replicate final GC values, from which every virality cell recomputes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("theta", "p_n", "p_o", "sa_delay", "replicate", "final_gc"))
    for r in result.sorted_rows():
        for i, gc in enumerate(r.final_gcs):
            writer.writerow([_fmt(r.theta), _fmt(r.p_n), _fmt(r.p_o),
                             "" if r.sa_delay is None else r.sa_delay, i, repr(gc)])
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv_rows(path: str | Path) -> list[dict]:
    """Parse a sweep CSV, raising ``ValueError`` that names the bad line."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        lines = list(csv.reader(fh))
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    if tuple(lines[0]) != CSV_HEADER:
        raise ValueError(f"{path}:1: unexpected header {','.join(lines[0])!r}")
    rows = []
    for lineno, fields in enumerate(lines[1:], start=2):
        if len(fields) != len(CSV_HEADER):
            raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(fields)}")
        try:
            rows.append({
                "theta": float(fields[0]),
                "p_n": float(fields[1]),
                "p_o": float(fields[2]),
                "sa_delay": int(fields[3]) if fields[3] else None,
                "replicates": int(fields[4]),
                "virality": float(fields[5]),
                "mean_final_gc": float(fields[6]),
                "std_final_gc": float(fields[7]),
            })
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def summarize(result: SweepResult) -> str:
    lines = []
    for r in result.sorted_rows():
        delay = "-" if r.sa_delay is None else str(r.sa_delay)
        lines.append(f"theta={r.theta:.3f} p_n={r.p_n:.2f} p_o={r.p_o:.2f} sa_delay={delay:>2} "
                     f"V={r.virality:.3f} GC={r.mean_final_gc:.3f}")
    return "\n".join(lines)


def grid_mean_virality(rows: Sequence[SweepRow]) -> float:
    return float(np.mean([r.virality for r in rows]))
