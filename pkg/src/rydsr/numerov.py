"""Coulomb-approximation radial wavefunctions (atomic units).

The radial equation ``u'' = [l(l+1)/r^2 - 2/r - 2E] u`` is integrated inward
with the Numerov scheme on a grid uniform in ``x = sqrt(r)``.  Substituting
``r = x^2`` and ``u = x^(1/2) y`` gives

    y'' = [8 x^2 (V_eff - E) + 3 / (4 x^2)] y,

which has no first-derivative term, so Numerov applies directly.  All grids
are integer multiples of a common step ``h`` in ``x`` so that wavefunctions of
different levels share grid points and overlap integrals need no
interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_STEP = 0.01
CORE_CUTOFF = 0.05
# inward start value; small enough that the growing solution dominates
_SEED = 1e-30


class NumerovError(ArithmeticError):
    """Raised when the inward integration cannot produce a usable wavefunction."""


@dataclass(frozen=True)
class RadialWavefunction:
    """Normalised radial function sampled at ``x = k * step`` for k in [k_in, k_out]."""

    n_star: float
    l: int
    step: float
    k_in: int
    y: np.ndarray  # ascending in x

    @property
    def k_out(self) -> int:
        return self.k_in + len(self.y) - 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.k_in, self.k_out + 1) * self.step

    @property
    def r(self) -> np.ndarray:
        return self.x**2

    def u(self) -> np.ndarray:
        """Return u(r) = r R(r) on the grid points ``self.r``."""
        return np.sqrt(self.x) * self.y


def outer_radius(n_star: float) -> float:
    return 2.0 * n_star * (n_star + 15.0)


def inner_turning_point(n_star: float, l: int) -> float:
    disc = 1.0 - l * (l + 1) / n_star**2
    if disc <= 0.0:
        # centrifugal barrier exceeds the binding everywhere
        return n_star**2
    return n_star**2 * (1.0 - math.sqrt(disc))


def _numerov_inward(g: np.ndarray, h: float) -> np.ndarray:
    f = 1.0 - h * h * g / 12.0
    y = np.empty_like(g)
    y[0] = _SEED
    y[1] = _SEED * math.exp(h * math.sqrt(max(g[0], 0.0)))
    # plain loop: the recurrence is sequential
    f_list = f.tolist()
    y0, y1 = y[0], y[1]
    out = [y0, y1]
    for i in range(1, len(g) - 1):
        y2 = ((12.0 - 10.0 * f_list[i]) * y1 - f_list[i - 1] * y0) / f_list[i + 1]
        out.append(y2)
        y0, y1 = y1, y2
    return np.asarray(out)


@lru_cache(maxsize=1024)
def radial_wavefunction(n_star: float, l: int, step: float = DEFAULT_STEP) -> RadialWavefunction:
    """Numerov solution for energy ``-1/(2 n*^2)`` and angular momentum ``l``.

    Integration runs from ``r_outer = 2 n*(n* + 15)`` down to the 0.05 a.u.
    core cutoff.  Inside the classical inner turning point the solution is
    truncated at the first point where ``|u|`` grows inward, which is where a
    non-integer ``n*`` picks up the irregular solution.  For quantum-defect
    levels this happens at the turning point itself; exact hydrogenic levels
    decay all the way to the cutoff.
    """
    if n_star <= 0:
        raise NumerovError(f"effective quantum number must be positive, got {n_star}")
    if l < 0:
        raise NumerovError(f"negative angular momentum l={l}")
    k_out = math.ceil(math.sqrt(outer_radius(n_star)) / step)
    k_in = math.ceil(math.sqrt(CORE_CUTOFF) / step)
    if k_out - k_in < 10:
        raise NumerovError(
            f"grid too short for n*={n_star}, l={l}: {k_out - k_in} points at step {step}"
        )
    k = np.arange(k_out, k_in - 1, -1)
    x = k * step
    r = x * x
    energy = -0.5 / n_star**2
    g = 8.0 * r * (0.5 * l * (l + 1) / (r * r) - 1.0 / r - energy) + 0.75 / r
    y = _numerov_inward(g, step)

    u = np.abs(np.sqrt(x) * y)
    x_tp = math.sqrt(inner_turning_point(n_star, l))
    inside = np.nonzero((x[1:] < x_tp) & (u[1:] > u[:-1]))[0]
    cut = inside[0] + 1 if inside.size else len(x)
    y = y[:cut]
    r = r[:cut]
    if not np.all(np.isfinite(y)):
        raise NumerovError(
            f"non-finite values in Numerov solution for n*={n_star}, l={l} "
            f"(grid {k_out}..{k_in}, step {step})"
        )
    norm2 = 2.0 * step * float(np.dot(r * y, y))
    if not norm2 > 0.0 or not math.isfinite(norm2):
        raise NumerovError(
            f"Numerov grid underflow for n*={n_star}, l={l}: norm^2={norm2!r}, "
            f"kept {cut} of {len(x)} points"
        )
    y = y / math.sqrt(norm2)
    k_lo = int(k[cut - 1])
    return RadialWavefunction(n_star=n_star, l=l, step=step, k_in=k_lo, y=y[::-1].copy())


def radial_integral(a: RadialWavefunction, b: RadialWavefunction, power: int = 1) -> float:
    """Return ``∫ u_a(r) r^power u_b(r) dr`` on the shared grid."""
    if a.step != b.step:
        raise ValueError("wavefunctions must share the same grid step")
    lo = max(a.k_in, b.k_in)
    hi = min(a.k_out, b.k_out)
    if hi <= lo:
        return 0.0
    ya = a.y[lo - a.k_in : hi - a.k_in + 1]
    yb = b.y[lo - b.k_in : hi - b.k_in + 1]
    x = np.arange(lo, hi + 1) * a.step
    # dr = 2x dx and u = x^(1/2) y  =>  integrand 2 x^(2 power + 2) y_a y_b dx
    weight = 2.0 * x ** (2 * power + 2)
    return float(a.step * np.dot(weight * ya, yb))
