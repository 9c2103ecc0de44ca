"""Reduced two-atom superradiance dynamics for a single transition channel.

State variables are the upper-level population ``rho_ee``, the inversion
product ``m`` and the two-atom coherence ``rho_egge``.  They evolve under

    d rho_ee / dt   = -(2G + g) rho_ee + G
    d m / dt        = -2(2G + g) m - 2g(2 rho_ee - 1) + 8 Gb rho_egge
    d rho_egge / dt = -(2G + g) rho_egge + Gb m

with ``g`` the vacuum rate of the channel and the collective rates ``G``
(Gamma) and ``Gb`` (Gamma-bar) given implicitly by the current state, the
cooperative parameter ``C = N λ³ / 4π²`` and the sample size ``ϱ = π d / λ``.
``G`` is found by bracketing on the fixed-point residual at every right-hand
side evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from . import _kernel
from .atomic import TransitionChannel

RESIDUAL_TOL = _kernel.RESIDUAL_TOL  # in units of the vacuum rate
MODEL_BOUND = 1.0 + 1e-6

N_RESOLVE = 200  # accepted points required before rho_ee first drops below 1/2
SR_MARGIN = 0.01


class RateSolverError(ArithmeticError):
    """No self-consistent Gamma could be bracketed or refined."""

    def __init__(self, message, residual_lo=None, residual_hi=None):
        super().__init__(message)
        self.residual_lo = residual_lo
        self.residual_hi = residual_hi


class IntegrationError(RuntimeError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class TruncationError(RuntimeError):
    """Trajectory ended before the requested threshold was crossed."""

    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


class Regime(str, Enum):
    SUPERRADIANT = "Superradiant"
    ASE = "ASE"


@dataclass(frozen=True)
class SampleGeometry:
    """Spherical sample: density in m⁻³ and diameter in m."""

    density: float
    diameter: float

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("density must be non-negative")
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")

    @property
    def volume(self) -> float:
        return math.pi / 6.0 * self.diameter**3

    @property
    def atom_count(self) -> float:
        return self.density * self.volume

    @classmethod
    def from_atom_count(cls, density: float, atom_count: float) -> "SampleGeometry":
        if density <= 0 or atom_count <= 0:
            raise ValueError("density and atom count must be positive")
        return cls(density, (6.0 * atom_count / (math.pi * density)) ** (1.0 / 3.0))

    def cooperative_parameter(self, wavelength: float) -> float:
        return self.density * wavelength**3 / (4.0 * math.pi**2)

    def size_parameter(self, wavelength: float) -> float:
        return math.pi * self.diameter / wavelength


EXPERIMENT_DENSITY = 5e8 * 1e6  # m^-3
EXPERIMENT_ATOMS = 1400.0
EXPERIMENT_GEOMETRY = SampleGeometry.from_atom_count(EXPERIMENT_DENSITY, EXPERIMENT_ATOMS)


@dataclass(frozen=True)
class ChannelParameters:
    gamma: float
    C: float
    rho: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("vacuum rate must be positive")
        if self.C < 0 or self.rho < 0:
            raise ValueError("C and rho must be non-negative")

    @classmethod
    def for_channel(cls, channel: TransitionChannel, geometry: SampleGeometry) -> "ChannelParameters":
        lam = channel.wavelength
        return cls(channel.einstein_A, geometry.cooperative_parameter(lam),
                   geometry.size_parameter(lam))

    def rescaled(self, gamma: float) -> "ChannelParameters":
        return ChannelParameters(gamma, self.C, self.rho)


@dataclass(frozen=True)
class TwoAtomState:
    t: float
    rho_ee: float
    m: float
    rho_egge: float

    @classmethod
    def inverted(cls, t: float = 0.0) -> "TwoAtomState":
        return cls(t, 1.0, 1.0, 0.0)

    def violations(self) -> list[str]:
        out = []
        if not -1e-9 <= self.rho_ee <= 1.0 + 1e-9:
            out.append(f"rho_ee={self.rho_ee:.6g} outside [0, 1]")
        if abs(self.m) > MODEL_BOUND:
            out.append(f"|m|={abs(self.m):.6g} > 1")
        if abs(self.rho_egge) > MODEL_BOUND:
            out.append(f"|rho_egge|={abs(self.rho_egge):.6g} > 1")
        return out


@dataclass(frozen=True)
class RateSnapshot:
    Gamma: float
    Gammabar: float
    zeta: float
    I_val: float


# ---------------------------------------------------------------------------
# Collective rates

def dicke_I(zeta: float, rho: float) -> float:
    """``|(e^ξ (ξ - 1) + 1) / ξ²|²`` at ``ξ = ζ + iϱ``.

    Equal to ``|∫_0^1 s e^{ξ s} ds|²``, hence 1/4 at ξ = 0 (evaluated by its
    power series near the origin).  Once the exponent ``2ζ`` passes 700 the
    value is formed from its logarithm and saturates at 1e300.
    """
    return float(_kernel.dicke_I(float(zeta), float(rho)))


def rate_residual(G: float, rho_ee: float, rho_egge: float, params: ChannelParameters) -> float:
    """``G - f(G)``; the self-consistent Gamma is its root."""
    return float(_kernel.residual(float(G), float(rho_ee), float(rho_egge),
                                  params.gamma, params.C, params.rho))


_SOLVER_MESSAGES = {
    _kernel.ERR_POSITIVE_AT_ZERO: "residual positive at Gamma=0; no non-negative root",
    _kernel.ERR_NO_BRACKET: "no sign change found while widening the bracket",
    _kernel.ERR_NAN: "non-finite intermediate in the rate relations",
    _kernel.ERR_STALLED: "refinement stalled above the residual tolerance",
}


def solve_rates(state: TwoAtomState, params: ChannelParameters, hint: float | None = None,
                check_unique: bool = False) -> RateSnapshot:
    """Self-consistent ``Gamma``, then ``Gammabar`` at the solved value.

    Bisection on ``G - f(G)`` over ``[0, Γ_max]`` until the bracket is
    ``10³ γ`` wide, then damped Newton inside the bracket.  ``hint`` (a
    previous solution) narrows the starting bracket when both ends check out.
    With ``check_unique`` a 32-point scan of ``[0, 10 G + γ]`` must show a
    single sign change of the residual.  The root is unique for inverted
    states; with ``rho_ee < 1/2`` and large ``rho_egge`` several roots can
    exist, and the integrator then follows the branch of its warm start.
    """
    g, C, rho = params.gamma, params.C, params.rho
    G, res, status = _kernel.solve_gamma(float(state.rho_ee), float(state.rho_egge), g, C, rho,
                                         -1.0 if hint is None else float(hint))
    if status != _kernel.OK:
        lo = rate_residual(0.0, state.rho_ee, state.rho_egge, params)
        raise RateSolverError(
            f"{_SOLVER_MESSAGES[status]} (rho_ee={state.rho_ee!r}, rho_egge={state.rho_egge!r}, "
            f"last Gamma={G:.6g}, residual={res:.3e})", lo, res)
    if check_unique and G > 0:
        changes = residual_sign_changes(state, params, 10.0 * G + g)
        if changes != 1:
            raise RateSolverError(f"residual changes sign {changes} times near Gamma={G:.6g}")
    _, Gb, zeta, I_val = _kernel.rate_terms(G, float(state.rho_ee), float(state.rho_egge), g, C, rho)
    if not (math.isfinite(Gb) and math.isfinite(I_val)):
        raise RateSolverError(f"non-finite Gammabar at Gamma={G:.6g}")
    return RateSnapshot(float(G), float(Gb), float(zeta), float(I_val))


def residual_sign_changes(state: TwoAtomState, params: ChannelParameters, upper: float,
                          points: int = 32) -> int:
    """Count sign changes of the Gamma residual on a uniform scan of ``[0, upper]``."""
    grid = np.linspace(0.0, upper, points)
    signs = [math.copysign(1.0, rate_residual(G, state.rho_ee, state.rho_egge, params)) for G in grid]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def rhs(state: TwoAtomState, rates: RateSnapshot, gamma: float) -> tuple[float, float, float]:
    G, Gb = rates.Gamma, rates.Gammabar
    k = 2.0 * G + gamma
    return (
        -k * state.rho_ee + G,
        -2.0 * k * state.m - 2.0 * gamma * (2.0 * state.rho_ee - 1.0) + 8.0 * Gb * state.rho_egge,
        -k * state.rho_egge + Gb * state.m,
    )


# ---------------------------------------------------------------------------
# Integration

@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-8
    atol: float = 1e-11
    t_end_over_tau: float = 30.0  # default horizon in units of 1/gamma
    stop_population: float = 1e-6
    resolve_points: int = N_RESOLVE
    single_atom: bool = False  # clamp rho_egge to zero (diagnostic mode)
    max_steps: int = 5_000_000

    def refined(self, factor: float = 0.5) -> "IntegratorSettings":
        return replace(self, rtol=self.rtol * factor, atol=self.atol * factor)


@dataclass
class Trajectory:
    params: ChannelParameters
    geometry: SampleGeometry | None
    t: np.ndarray
    rho_ee: np.ndarray
    m: np.ndarray
    rho_egge: np.ndarray
    emitted: np.ndarray  # integrated -d(rho_ee)/dt, per atom
    Gamma: np.ndarray
    Gammabar: np.ndarray
    zeta: np.ndarray
    I_val: np.ndarray
    atom_count: float
    stopped_early: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def rate_per_atom(self) -> np.ndarray:
        """``-dρ_ee/dt`` from the right-hand side at every sample."""
        k = 2.0 * self.Gamma + self.params.gamma
        return k * self.rho_ee - self.Gamma

    @property
    def intensity(self) -> np.ndarray:
        """Photon emission rate in s⁻¹ (``-N dρ_ee/dt``)."""
        return self.atom_count * self.rate_per_atom

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> TwoAtomState:
        return TwoAtomState(float(self.t[i]), float(self.rho_ee[i]), float(self.m[i]),
                            float(self.rho_egge[i]))


TRAJECTORY_COLUMNS = ("t_s", "rho_ee", "m", "rho_egge", "Gamma_s", "Gammabar_s", "zeta",
                      "intensity_per_s")


def integrate_channel(params: ChannelParameters, geometry: SampleGeometry | None = None,
                      init: TwoAtomState | None = None, t_end: float | None = None,
                      settings: IntegratorSettings | None = None,
                      atom_count: float | None = None) -> Trajectory:
    """Integrate the two-atom equations from ``init`` to ``t_end``.

    Dormand-Prince 5(4) with embedded error control; the rates are re-solved
    at every stage and recorded at every accepted step.  Until ``rho_ee``
    first drops below 1/2 the step is capped so that at least
    ``resolve_points`` samples cover the initial transient.  Integration stops
    early once ``rho_ee`` falls below ``settings.stop_population``.
    """
    settings = settings or IntegratorSettings()
    init = init or TwoAtomState.inverted()
    bad = init.violations()
    if bad:
        raise ValueError("initial state violates invariants: " + "; ".join(bad))
    gamma = params.gamma
    t0 = init.t
    t_end = t0 + settings.t_end_over_tau / gamma if t_end is None else t_end
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    if atom_count is None:
        atom_count = geometry.atom_count if geometry is not None else 1.0

    y0 = np.array([init.rho_ee, init.m, 0.0 if settings.single_atom else init.rho_egge, 0.0])
    rates0 = solve_rates(TwoAtomState(t0, *y0[:3]), params)
    # emission rate can grow roughly twofold during build-up
    phase1_cap = math.log(2.0) / (2.0 * settings.resolve_points * (2.0 * rates0.Gamma + gamma))

    T, Y, R, n, status, t_fail = _kernel.integrate(
        y0, float(t0), float(t_end), gamma, params.C, params.rho, settings.rtol, settings.atol,
        phase1_cap, settings.stop_population, settings.single_atom, settings.max_steps)
    if status in _SOLVER_MESSAGES:
        raise IntegrationError(f"rate solver failed at t={t_fail:.6e} s: {_SOLVER_MESSAGES[status]}",
                               t_fail)
    if status == _kernel.ERR_STEP_UNDERFLOW:
        raise IntegrationError(f"step size underflow (stiffness) at t={t_fail:.6e} s", t_fail)
    if status == _kernel.ERR_MAX_STEPS:
        raise IntegrationError(f"exceeded {settings.max_steps} steps at t={t_fail:.6e} s", t_fail)

    messages = []
    for name, col in (("m", 1), ("rho_egge", 2)):
        over = np.nonzero(np.abs(Y[:, col]) > MODEL_BOUND)[0]
        if over.size:
            i = int(over[0])
            messages.append(f"model-bound excursion: |{name}|={abs(Y[i, col]):.6g} at t={T[i]:.6e} s")

    return Trajectory(
        params=params,
        geometry=geometry,
        t=T.copy(),
        rho_ee=Y[:, 0].copy(),
        m=Y[:, 1].copy(),
        rho_egge=Y[:, 2].copy(),
        emitted=Y[:, 3].copy(),
        Gamma=R[:, 0].copy(),
        Gammabar=R[:, 1].copy(),
        zeta=R[:, 2].copy(),
        I_val=R[:, 3].copy(),
        atom_count=atom_count,
        stopped_early=(status == 10),
        warnings=messages,
    )


def simulate(channel: TransitionChannel, geometry: SampleGeometry,
             settings: IntegratorSettings | None = None) -> Trajectory:
    """Fully inverted run of a physical channel in the given sample."""
    return integrate_channel(ChannelParameters.for_channel(channel, geometry), geometry,
                             settings=settings)


# ---------------------------------------------------------------------------
# Derived observables

def _log_crossing(t: np.ndarray, frac: np.ndarray, level: float) -> float:
    below = np.nonzero(frac <= level)[0]
    i = int(below[0])
    if i == 0:
        return float(t[0])
    f0, f1 = frac[i - 1], frac[i]
    t0, t1 = t[i - 1], t[i]
    if f1 > 0.0 and f0 > 0.0:
        w = (math.log(f0) - math.log(level)) / (math.log(f0) - math.log(f1))
    else:
        w = (f0 - level) / (f0 - f1)
    return float(t0 + w * (t1 - t0))


def remaining_fraction(traj: Trajectory) -> np.ndarray:
    """Fraction of the eventually-emitted population not yet emitted.

    ``(ρ_ee(t) - ρ_ee(end)) / (ρ_ee(0) - ρ_ee(end))``.  In the dilute limit
    the final population vanishes and this is ``ρ_ee(t) / ρ_ee(0)``.
    """
    r0 = traj.rho_ee[0]
    r_end = 0.0 if traj.stopped_early else traj.rho_ee[-1]
    span = r0 - r_end
    if span <= 0.0:
        raise TruncationError("population did not decay", float(traj.rho_ee[-1]))
    return (traj.rho_ee - r_end) / span


def effective_decay_time(traj: Trajectory) -> float:
    """Time for the emitted fraction to reach ``1 - 1/e``.

    The remaining fraction (see :func:`remaining_fraction`) is interpolated
    log-linearly between the two samples bracketing ``1/e``; for a pure
    exponential this returns exactly ``1/γ``.
    """
    frac = remaining_fraction(traj)
    level = math.exp(-1.0)
    if not np.any(frac <= level):
        raise TruncationError(
            f"remaining fraction only reached {frac.min():.4f} by t={traj.t[-1]:.4e} s",
            float(traj.rho_ee[-1]))
    return _log_crossing(traj.t, frac, level) - float(traj.t[0])


def population_crossing_time(traj: Trajectory, level: float | None = None) -> float:
    """First time ``ρ_ee`` itself falls to ``level`` (default ``ρ_ee(0)/e``)."""
    level = traj.rho_ee[0] / math.e if level is None else level
    if not np.any(traj.rho_ee <= level):
        raise TruncationError(
            f"rho_ee stayed above {level:.4f} (last {traj.rho_ee[-1]:.6f}) until "
            f"t={traj.t[-1]:.4e} s", float(traj.rho_ee[-1]))
    return _log_crossing(traj.t, traj.rho_ee, level) - float(traj.t[0])


def classify(traj: Trajectory, margin: float = SR_MARGIN) -> Regime:
    """Superradiant iff the emission rate peaks more than ``margin`` above its initial value."""
    if len(traj) < 3:
        raise ValueError("classification needs at least three samples")
    rate = traj.rate_per_atom
    return Regime.SUPERRADIANT if rate.max() > (1.0 + margin) * rate[0] else Regime.ASE


def peak_time(traj: Trajectory) -> float:
    return float(traj.t[int(np.argmax(traj.rate_per_atom))] - traj.t[0])


def total_lifetime(taus: Sequence[float]) -> float:
    """Harmonic combination ``1 / Σ 1/τ``."""
    taus = list(taus)
    if not taus:
        raise ValueError("need at least one lifetime")
    if any(not tau > 0 for tau in taus):
        raise ValueError("lifetimes must be positive")
    return 1.0 / math.fsum(1.0 / tau for tau in taus)


def emitted_photons(traj: Trajectory) -> float:
    """``∫ intensity dt`` from the integrated emission variable."""
    return float(traj.atom_count * traj.emitted[-1])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in zip(traj.t, traj.rho_ee, traj.m, traj.rho_egge, traj.Gamma, traj.Gammabar,
                       traj.zeta, traj.intensity):
            w.writerow([repr(float(v)) for v in row])
