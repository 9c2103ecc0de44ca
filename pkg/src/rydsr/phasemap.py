"""Superradiant / ASE boundary in the (C, ϱ) plane."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .atomic import TransitionChannel
from .dynamics import (ChannelParameters, IntegratorSettings, Regime, SampleGeometry, classify,
                       integrate_channel)

OPEN_ABOVE = math.inf
C_CEILING = 1e12
C_FLOOR = 1e-12
DEFAULT_TOL = 1e-2


class ClassifierInstability(RuntimeError):
    """Classification is not monotone in C around the located boundary."""


def classify_point(C: float, rho: float, gamma: float = 1.0,
                   settings: IntegratorSettings | None = None) -> Regime:
    return classify(integrate_channel(ChannelParameters(gamma, C, rho), settings=settings))


def critical_C(rho: float, gamma: float = 1.0, bisection_tol: float = DEFAULT_TOL,
               settings: IntegratorSettings | None = None, C_start: float = 1.0) -> float:
    """Smallest cooperative parameter giving superradiance at sample size ``rho``.

    A bracket with ASE below and SR above is found by decade steps from
    ``C_start``; it is then bisected until ``(hi - lo) / lo <= bisection_tol``
    and the midpoint is returned.  Returns :data:`OPEN_ABOVE` when no SR is
    found up to ``C = 1e12``.
    """
    if not rho > 0:
        raise ValueError("sample size must be positive")

    def is_sr(C):
        return classify_point(C, rho, gamma, settings) is Regime.SUPERRADIANT

    C = C_start
    if is_sr(C):
        hi = C
        lo = C / 10.0
        while is_sr(lo):
            hi = lo
            lo /= 10.0
            if lo < C_FLOOR:
                raise ClassifierInstability(f"still superradiant at C={lo:.1e} for rho={rho}")
    else:
        lo = C
        hi = C * 10.0
        while not is_sr(hi):
            lo = hi
            hi *= 10.0
            if hi > C_CEILING:
                return OPEN_ABOVE
    while (hi - lo) / lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        if is_sr(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def boundary_scan(rho: float, C_crit: float, gamma: float = 1.0, points: int = 8,
                  span: float = 2.0, settings: IntegratorSettings | None = None) -> list[Regime]:
    """Classes on a log-spaced scan of ``[C_crit / span, C_crit * span]``."""
    Cs = np.geomspace(C_crit / span, C_crit * span, points)
    return [classify_point(float(C), rho, gamma, settings) for C in Cs]


def count_flips(classes: Sequence[Regime]) -> int:
    return sum(1 for a, b in zip(classes, classes[1:]) if a != b)


@dataclass
class CriticalCurve:
    rho: np.ndarray
    C_crit: np.ndarray
    bisection_tol: float
    sr_margin: float
    settings: IntegratorSettings | None = None
    flips: np.ndarray | None = None  # per point, from the optional 8-point scan

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("rho", "C_crit"))
            for r, c in zip(self.rho, self.C_crit):
                w.writerow((repr(float(r)), repr(float(c))))

    def interpolate(self, rho: float) -> float:
        """Log-log interpolation of the boundary at ``rho``."""
        ok = np.isfinite(self.C_crit)
        return float(np.exp(np.interp(np.log(rho), np.log(self.rho[ok]), np.log(self.C_crit[ok]))))

    def monotone_scan_ok(self) -> bool | None:
        if self.flips is None:
            return None
        return bool(np.all(self.flips == 1))


def default_rho_grid(points: int = 40, lo: float = 1e-2, hi: float = 1e3) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def _curve_job(args):
    rho, gamma, tol, settings, verify = args
    c = critical_C(rho, gamma, tol, settings)
    flips = -1
    if verify and math.isfinite(c):
        flips = count_flips(boundary_scan(rho, c, gamma, settings=settings))
    return c, flips


def critical_curve(rhos: Sequence[float] | None = None, gamma: float = 1.0,
                   bisection_tol: float = DEFAULT_TOL, settings: IntegratorSettings | None = None,
                   workers: int = 1, verify: bool = False) -> CriticalCurve:
    """Boundary over a ϱ grid; grid points are independent and run in parallel."""
    rhos = default_rho_grid() if rhos is None else np.asarray(rhos, dtype=float)
    if np.any(np.diff(rhos) <= 0):
        raise ValueError("rho grid must be strictly increasing")
    jobs = [(float(r), gamma, bisection_tol, settings, verify) for r in rhos]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_curve_job, jobs))
    else:
        results = [_curve_job(j) for j in jobs]
    from .dynamics import SR_MARGIN

    return CriticalCurve(
        rho=rhos,
        C_crit=np.array([c for c, _ in results]),
        bisection_tol=bisection_tol,
        sr_margin=SR_MARGIN,
        settings=settings,
        flips=np.array([f for _, f in results]) if verify else None,
    )


@dataclass(frozen=True)
class ChannelPlacement:
    channel: TransitionChannel
    C: float
    rho: float
    regime: Regime


def map_channels(channels: Sequence[TransitionChannel], geometry: SampleGeometry,
                 settings: IntegratorSettings | None = None) -> list[ChannelPlacement]:
    """Cooperative and size parameters of each channel plus its classification."""
    out = []
    for ch in channels:
        p = ChannelParameters.for_channel(ch, geometry)
        out.append(ChannelPlacement(ch, p.C, p.rho, classify(integrate_channel(p, geometry, settings=settings))))
    return out


def minimal_superradiant_n(placements: Sequence[ChannelPlacement], lower_l: int = 0) -> int | None:
    """Lowest principal quantum number among superradiant targets of series ``lower_l``."""
    ns = [p.channel.lower.n for p in placements
          if p.channel.lower.l == lower_l and p.regime is Regime.SUPERRADIANT]
    return min(ns) if ns else None


def write_placements_csv(placements: Sequence[ChannelPlacement], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n_upper", "l_upper", "n_lower", "l_lower", "C", "rho", "class"))
        for p in placements:
            ch = p.channel
            w.writerow((ch.upper.n, ch.upper.l, ch.lower.n, ch.lower.l, repr(p.C), repr(p.rho),
                        p.regime.value))
