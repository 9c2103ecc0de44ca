"""Rubidium Rydberg level structure and vacuum radiative rates.

Energies come from the quantum-defect formula ``E = -R_Rb / (n - δ_l)^2``,
radial matrix elements from the Coulomb approximation (see
:mod:`rydsr.numerov`), and Einstein A coefficients from the dipole formula.
Public quantities are SI except energies (cm⁻¹ relative to the ionisation
limit) and radial elements (Bohr radii).
"""

from __future__ import annotations

import configparser
import csv
import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from scipy import constants as sc

from . import numerov

SERIES = "spdfghiklmnoqrtuv"

# R_inf / (1 + m_e / M(87Rb))
RYDBERG_RB87 = 109736.62301243766  # cm^-1
BOHR_RADIUS = sc.physical_constants["Bohr radius"][0]

DEFAULT_DEFECTS = {0: 3.1311, 1: 2.6548, 2: 1.3463, 3: 0.0165}


class ConfigurationError(ValueError):
    """Invalid or incomplete atomic-structure configuration."""


class TransitionError(ValueError):
    """Requested transition is not a downward electric-dipole transition."""


@dataclass(frozen=True, order=True)
class LevelRef:
    n: int
    l: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.l < self.n:
            raise ConfigurationError(f"invalid level n={self.n}, l={self.l}")

    @property
    def label(self) -> str:
        return f"{self.n}{SERIES[self.l]}"

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, text: str) -> "LevelRef":
        """Parse spectroscopic labels such as ``40p`` or ``39S``."""
        m = re.fullmatch(r"\s*(\d+)\s*([a-zA-Z])\s*", text)
        if not m:
            raise ConfigurationError(f"cannot parse level label {text!r}")
        letter = m.group(2).lower()
        if letter not in SERIES:
            raise ConfigurationError(f"unknown series letter {letter!r} in {text!r}")
        return cls(int(m.group(1)), SERIES.index(letter))


@dataclass(frozen=True)
class QuantumDefectTable:
    """Energy-independent quantum defects per l-series plus the level range.

    Series with l >= 4 default to zero defect; ``max_l`` limits which series
    are populated when the table is enumerated.
    """

    defects: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_DEFECTS))
    rydberg_constant: float = RYDBERG_RB87
    n_min: int = 5
    n_max: int = 60
    max_l: int = 3
    high_l_defect: float | None = 0.0

    def __post_init__(self):
        if any(d < 0 for d in self.defects.values()):
            raise ConfigurationError("quantum defects must be non-negative")
        if self.rydberg_constant <= 0:
            raise ConfigurationError("Rydberg constant must be positive")
        if not 1 <= self.n_min <= self.n_max:
            raise ConfigurationError(f"bad n range [{self.n_min}, {self.n_max}]")

    def defect(self, l: int) -> float:
        if l in self.defects:
            return self.defects[l]
        if l >= 4 and self.high_l_defect is not None:
            return self.high_l_defect
        raise ConfigurationError(f"no quantum defect for the {SERIES[l]}-series")

    def contains(self, level: LevelRef) -> bool:
        return self.n_min <= level.n <= self.n_max and level.l <= self.max_l

    def levels(self) -> list[LevelRef]:
        """Every configured level, ordered by (n, l)."""
        return [
            LevelRef(n, l)
            for n in range(self.n_min, self.n_max + 1)
            for l in range(min(self.max_l, n - 1) + 1)
        ]

    def with_defects(self, **by_letter: float) -> "QuantumDefectTable":
        d = dict(self.defects)
        for letter, value in by_letter.items():
            d[SERIES.index(letter)] = value
        return replace(self, defects=d)

    def _key(self):
        return (tuple(sorted(self.defects.items())), self.rydberg_constant,
                self.n_min, self.n_max, self.max_l, self.high_l_defect)

    def __hash__(self):
        return hash(self._key())

    def __eq__(self, other):
        if not isinstance(other, QuantumDefectTable):
            return NotImplemented
        return self._key() == other._key()


def zero_defect_table(**kwargs) -> QuantumDefectTable:
    """Hydrogen-like table (all defects zero) with the infinite-mass Rydberg constant."""
    kwargs.setdefault("rydberg_constant", sc.physical_constants["Rydberg constant"][0] / 100)
    return QuantumDefectTable(defects={l: 0.0 for l in range(4)}, **kwargs)


def load_defect_table(path: str | Path) -> QuantumDefectTable:
    """Read a quantum-defect table from an INI file.

    Recognised layout::

        [defects]
        s = 3.1311
        p = 2.6548

        [constants]
        rydberg_constant_cm-1 = 109736.623

        [range]
        n_min = 5
        n_max = 60
        max_l = 3
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"quantum-defect table not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable quantum-defect table {path}: {exc}") from exc
    if "defects" not in cp:
        raise ConfigurationError(f"{path}: missing [defects] section")
    defects = {}
    for key, value in cp["defects"].items():
        if key not in SERIES:
            raise ConfigurationError(f"{path}: unknown series letter {key!r}")
        defects[SERIES.index(key)] = float(value)
    kwargs = {}
    if cp.has_option("constants", "rydberg_constant_cm-1"):
        kwargs["rydberg_constant"] = cp.getfloat("constants", "rydberg_constant_cm-1")
    for key in ("n_min", "n_max", "max_l"):
        if cp.has_option("range", key):
            kwargs[key] = cp.getint("range", key)
    return QuantumDefectTable(defects=defects, **kwargs)


def write_defect_table(table: QuantumDefectTable, path: str | Path) -> None:
    cp = configparser.ConfigParser()
    cp["defects"] = {SERIES[l]: repr(d) for l, d in sorted(table.defects.items())}
    cp["constants"] = {"rydberg_constant_cm-1": repr(table.rydberg_constant)}
    cp["range"] = {"n_min": str(table.n_min), "n_max": str(table.n_max),
                   "max_l": str(table.max_l)}
    with open(path, "w", newline="\n") as fh:
        cp.write(fh)


def effective_n(level: LevelRef, table: QuantumDefectTable) -> float:
    n_star = level.n - table.defect(level.l)
    if n_star <= 0:
        raise ConfigurationError(f"non-positive effective quantum number for {level}")
    return n_star


def level_energy(level: LevelRef, table: QuantumDefectTable) -> float:
    """Binding energy in cm⁻¹ (negative)."""
    return -table.rydberg_constant / effective_n(level, table) ** 2


def transition_wavelength(upper: LevelRef, lower: LevelRef, table: QuantumDefectTable) -> float:
    """Vacuum wavelength in metres of the ``upper -> lower`` transition."""
    de = level_energy(upper, table) - level_energy(lower, table)
    if not de > 0:
        raise TransitionError(f"{upper} -> {lower} is not a downward transition")
    return 0.01 / de


def is_dipole_allowed(a: LevelRef, b: LevelRef) -> bool:
    return abs(a.l - b.l) == 1


@lru_cache(maxsize=None)
def _radial_cached(n1: float, l1: int, n2: float, l2: int, step: float) -> float:
    wf1 = numerov.radial_wavefunction(n1, l1, step)
    wf2 = numerov.radial_wavefunction(n2, l2, step)
    return numerov.radial_integral(wf1, wf2)


def radial_matrix_element(upper: LevelRef, lower: LevelRef, table: QuantumDefectTable,
                          step: float = numerov.DEFAULT_STEP) -> float:
    """Coulomb-approximation ``<upper| r |lower>`` in Bohr radii (signed)."""
    if not is_dipole_allowed(upper, lower):
        raise TransitionError(f"{upper} -> {lower} is not dipole allowed (|Δl| != 1)")
    for lv in (upper, lower):
        if not table.contains(lv):
            raise ConfigurationError(f"{lv} outside table range n=[{table.n_min},{table.n_max}]")
    n1, n2 = effective_n(upper, table), effective_n(lower, table)
    # canonical argument order so the cache is symmetric
    if (n1, upper.l) > (n2, lower.l):
        return _radial_cached(n2, lower.l, n1, upper.l, step)
    return _radial_cached(n1, upper.l, n2, lower.l, step)


def angular_factor(upper: LevelRef, lower: LevelRef) -> float:
    """Sum over final magnetic sublevels: ``max(l_u, l_d) / (2 l_u + 1)``."""
    return max(upper.l, lower.l) / (2 * upper.l + 1)


def einstein_A_from(omega: float, dipole: float) -> float:
    """Spontaneous rate ``ω³ ℘² / (3π ε0 ħ c³)`` for line dipole ``℘`` in C·m."""
    return omega**3 * dipole**2 / (3 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3)


@dataclass(frozen=True)
class TransitionChannel:
    upper: LevelRef
    lower: LevelRef
    wavelength: float  # m
    angular_frequency: float  # rad/s
    radial_element: float  # a0
    dipole_moment: float  # C m, angular factor included
    einstein_A: float  # 1/s

    @property
    def label(self) -> str:
        return f"{self.upper}->{self.lower}"


def einstein_A(channel: TransitionChannel) -> float:
    return einstein_A_from(channel.angular_frequency, channel.dipole_moment)


def make_channel(upper: LevelRef, lower: LevelRef, table: QuantumDefectTable,
                 step: float = numerov.DEFAULT_STEP) -> TransitionChannel:
    lam = transition_wavelength(upper, lower, table)
    radial = radial_matrix_element(upper, lower, table, step)
    omega = 2 * math.pi * sc.c / lam
    dipole = sc.e * BOHR_RADIUS * abs(radial) * math.sqrt(angular_factor(upper, lower))
    return TransitionChannel(
        upper=upper,
        lower=lower,
        wavelength=lam,
        angular_frequency=omega,
        radial_element=radial,
        dipole_moment=dipole,
        einstein_A=einstein_A_from(omega, dipole),
    )


def downward_channels(upper: LevelRef, table: QuantumDefectTable,
                      step: float = numerov.DEFAULT_STEP) -> list[TransitionChannel]:
    """All dipole-allowed channels from ``upper`` to lower-lying table levels.

    Ordered by lower-level series then principal quantum number.
    """
    e_up = level_energy(upper, table)
    out = []
    for l in (upper.l - 1, upper.l + 1):
        if l < 0 or l > table.max_l:
            continue
        for n in range(max(table.n_min, l + 1), table.n_max + 1):
            lower = LevelRef(n, l)
            if level_energy(lower, table) < e_up:
                out.append(make_channel(upper, lower, table, step))
    return out


def vacuum_lifetime(upper: LevelRef, table: QuantumDefectTable) -> float:
    """``1 / Σ A`` over all downward channels inside the table."""
    total = sum(ch.einstein_A for ch in downward_channels(upper, table))
    if total <= 0:
        raise ConfigurationError(f"{upper} has no radiative channels in the table")
    return 1.0 / total


def exchange_splitting(dipole: float, separation: float) -> float:
    """Exchange angular frequency Ω with ``2ħΩ = ℘² / (2π ε0 r³)``."""
    if separation <= 0:
        raise ValueError("separation must be positive")
    if dipole <= 0:
        raise ValueError("dipole moment must be positive")
    return dipole**2 / (4 * math.pi * sc.epsilon_0 * sc.hbar * separation**3)


def mean_spacing(density: float) -> float:
    """Wigner-Seitz radius ``(3 / 4π N)^(1/3)`` in metres for density in m⁻³."""
    return (3.0 / (4.0 * math.pi * density)) ** (1.0 / 3.0)


CHANNEL_COLUMNS = ("n_u", "l_u", "n_d", "l_d", "lambda_m", "omega_rad_s", "radial_au", "A_s")


def channel_rows(channels: Iterable[TransitionChannel]) -> Iterator[tuple]:
    for ch in channels:
        yield (ch.upper.n, ch.upper.l, ch.lower.n, ch.lower.l, repr(ch.wavelength),
               repr(ch.angular_frequency), repr(ch.radial_element), repr(ch.einstein_A))


def write_channels_csv(channels: Iterable[TransitionChannel], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHANNEL_COLUMNS)
        w.writerows(channel_rows(channels))
