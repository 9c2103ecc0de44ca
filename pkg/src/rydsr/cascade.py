"""Multi-level radiative cascade with dense-gas effective rates.

Each level keeps only its ``cap`` fastest downward channels, with rates
``1/τ_eff`` taken from single-channel two-atom runs in the dense sample.
Populations then follow linear rate equations with those fixed rates.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .atomic import LevelRef, QuantumDefectTable, TransitionChannel, downward_channels, level_energy
from .dynamics import (IntegratorSettings, SampleGeometry, effective_decay_time, simulate)

DEFAULT_FLOOR = 27
DEFAULT_CAP = 2
EXPERIMENT_INITIAL = LevelRef(40, 1)


class TableCoverageError(ValueError):
    """A non-ground level has no radiative channel inside the table."""


@dataclass(frozen=True)
class Edge:
    upper: LevelRef
    lower: LevelRef
    tau_eff: float

    @property
    def rate(self) -> float:
        return 1.0 / self.tau_eff


@dataclass
class CascadeNetwork:
    levels: list[LevelRef]
    edges: dict[LevelRef, tuple[Edge, ...]]
    detection_floor: int = DEFAULT_FLOOR
    cap: int = DEFAULT_CAP
    initial: LevelRef = EXPERIMENT_INITIAL
    absorbing: frozenset = field(default_factory=frozenset)

    def out_rate(self, level: LevelRef) -> float:
        return math.fsum(e.rate for e in self.edges.get(level, ()))

    def all_edges(self) -> list[Edge]:
        return [e for lv in self.levels for e in self.edges.get(lv, ())]

    def index(self) -> dict[LevelRef, int]:
        return {lv: i for i, lv in enumerate(self.levels)}

    def rate_matrix(self, scale: float = 1.0) -> np.ndarray:
        """Generator ``K`` with ``dP/dt = K P``; columns sum to zero."""
        idx = self.index()
        K = np.zeros((len(self.levels), len(self.levels)))
        for e in self.all_edges():
            i, j = idx[e.upper], idx[e.lower]
            K[j, i] += scale * e.rate
            K[i, i] -= scale * e.rate
        return K

    def write_edges_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("upper", "lower", "tau_eff_s"))
            for e in self.all_edges():
                w.writerow((e.upper.label, e.lower.label, repr(e.tau_eff)))


_TAU_CACHE: dict = {}


def dense_tau(channel: TransitionChannel, geometry: SampleGeometry,
              settings: IntegratorSettings | None = None) -> float:
    """Effective decay time of one channel from a fully inverted run (memoised)."""
    key = (channel, geometry, settings)
    if key not in _TAU_CACHE:
        _TAU_CACHE[key] = effective_decay_time(simulate(channel, geometry, settings))
    return _TAU_CACHE[key]


def _tau_job(args):
    return dense_tau(*args)


def channel_taus(channels: Sequence[TransitionChannel], geometry: SampleGeometry,
                 settings: IntegratorSettings | None = None, workers: int = 1) -> list[float]:
    """Dense ``τ_eff`` per channel, in input order."""
    jobs = [(ch, geometry, settings) for ch in channels]
    missing = [j for j in dict.fromkeys(jobs) if j not in _TAU_CACHE]
    if workers > 1 and len(missing) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(missing) // (4 * workers))
            for job, tau in zip(missing, pool.map(_tau_job, missing, chunksize=chunk)):
                _TAU_CACHE[job] = tau
    return [_tau_job(j) for j in jobs]


def select_fastest(channels: Sequence[TransitionChannel], taus: Sequence[float], cap: int) -> tuple[Edge, ...]:
    ranked = sorted(zip(taus, range(len(channels))))
    return tuple(Edge(channels[i].upper, channels[i].lower, tau) for tau, i in ranked[:cap])


def build_network(table: QuantumDefectTable, geometry: SampleGeometry, cap: int = DEFAULT_CAP,
                  initial: LevelRef = EXPERIMENT_INITIAL, detection_floor: int = DEFAULT_FLOOR,
                  absorb_below: int | None = None, settings: IntegratorSettings | None = None,
                  workers: int = 1) -> CascadeNetwork:
    """Evaluate every downward channel of every level reachable from ``initial``.

    Levels are explored breadth-first from ``initial`` along the retained
    edges.  With ``absorb_below`` set, levels with ``n`` below it are treated
    as absorbing and their own channels are not evaluated.
    """
    if cap < 1:
        raise ValueError("channel cap must be at least 1")
    if not table.contains(initial):
        raise TableCoverageError(f"initial level {initial} outside the table")
    ground = min(table.levels(), key=lambda lv: level_energy(lv, table))
    edges: dict[LevelRef, tuple[Edge, ...]] = {}
    absorbing = set()
    seen = {initial}
    frontier = [initial]
    while frontier:
        todo = []
        for lv in frontier:
            if lv == ground or (absorb_below is not None and lv.n < absorb_below):
                absorbing.add(lv)
                edges[lv] = ()
                continue
            chans = downward_channels(lv, table)
            if not chans:
                raise TableCoverageError(f"{lv} has no downward channel inside the table")
            todo.append((lv, chans))
        flat = [ch for _, chans in todo for ch in chans]
        taus = channel_taus(flat, geometry, settings, workers)
        pos = 0
        nxt = []
        for lv, chans in todo:
            sel = select_fastest(chans, taus[pos:pos + len(chans)], cap)
            pos += len(chans)
            edges[lv] = sel
            for e in sel:
                if e.lower not in seen:
                    seen.add(e.lower)
                    nxt.append(e.lower)
        frontier = sorted(nxt)
    levels = sorted(seen, key=lambda lv: (-level_energy(lv, table), lv))
    return CascadeNetwork(levels=levels, edges=edges, detection_floor=detection_floor, cap=cap,
                          initial=initial, absorbing=frozenset(absorbing))


@dataclass
class PopulationTrajectory:
    times: np.ndarray  # s
    levels: list[LevelRef]
    populations: np.ndarray  # (n_times, n_levels), fractions of the initial population
    detection_floor: int
    atom_count: float

    @property
    def detected_mask(self) -> np.ndarray:
        return np.array([lv.n >= self.detection_floor for lv in self.levels])

    @property
    def sink(self) -> np.ndarray:
        return self.populations[:, ~self.detected_mask].sum(axis=1)

    @property
    def detected_fraction(self) -> np.ndarray:
        return self.populations[:, self.detected_mask].sum(axis=1)

    @property
    def detected(self) -> np.ndarray:
        """Atoms in levels with ``n >= detection_floor``."""
        return self.atom_count * self.detected_fraction

    def total(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def e_folding_time(self) -> float:
        """First time the detected signal falls to 1/e of its start value."""
        d = self.detected_fraction
        level = d[0] / math.e
        below = np.nonzero(d <= level)[0]
        if not below.size:
            raise ValueError("detected signal never fell by 1/e within the window")
        i = int(below[0])
        t0, t1, d0, d1 = self.times[i - 1], self.times[i], d[i - 1], d[i]
        return float(t0 + (d0 - level) / (d0 - d1) * (t1 - t0) - self.times[0])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t_us", "detected_atoms"))
            for t, d in zip(self.times, self.detected):
                w.writerow((repr(float(t * 1e6)), repr(float(d))))


def evolve(network: CascadeNetwork, atom_count: float, t0: float, t_end: float,
           n_points: int = 601, rate_scale: float = 1.0) -> PopulationTrajectory:
    """Linear rate-equation evolution on a uniform output grid.

    All population starts in ``network.initial`` at ``t0``.  The propagator
    over one grid step is the matrix exponential of the rate matrix, applied
    repeatedly.
    """
    if atom_count <= 0:
        raise ValueError("initial atom count must be positive")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    times = np.linspace(t0, t_end, n_points)
    K = network.rate_matrix(rate_scale)
    step = expm(K * (times[1] - times[0]))
    P = np.zeros((n_points, len(network.levels)))
    P[0, network.index()[network.initial]] = 1.0
    for k in range(1, n_points):
        P[k] = step @ P[k - 1]
    return PopulationTrajectory(times=times, levels=list(network.levels), populations=P,
                                detection_floor=network.detection_floor, atom_count=atom_count)


def max_relative_deviation(a: PopulationTrajectory, b: PopulationTrajectory,
                           window: float | None = None) -> float:
    """``max |d_a - d_b| / d_a`` over the shared grid, optionally within ``window`` of the start."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories must share the output grid")
    mask = np.ones_like(a.times, dtype=bool)
    if window is not None:
        mask = a.times <= a.times[0] + window * (1 + 1e-12)
    da, db = a.detected[mask], b.detected[mask]
    ok = da > 0
    return float(np.max(np.abs(da[ok] - db[ok]) / da[ok]))
