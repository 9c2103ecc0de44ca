"""Run configuration (INI with unit-suffixed keys) and the run manifest."""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .atomic import ConfigurationError, LevelRef, QuantumDefectTable, load_defect_table
from .dynamics import IntegratorSettings, SampleGeometry

CM3_TO_M3 = 1e6
VERSION = "0.1.0"

# default sample diameter when the density is zero and only an atom count is given
FALLBACK_DIAMETER_M = SampleGeometry.from_atom_count(5e8 * CM3_TO_M3, 1400.0).diameter


@dataclass(frozen=True)
class RunConfig:
    density_cm3: float = 5e8
    atom_count: float | None = 1400.0
    sample_diameter_m: float | None = None
    initial: str = "40p"
    detection_floor: int = 27
    t0_us: float = 6.0
    t_end_us: float = 36.0
    cascade_points: int = 601
    cap: int = 2
    compare_cap: int = 3
    channel_upper: str = "40p"
    channel_lower: str = "39s"
    export_n_min: int | None = None
    export_n_max: int | None = None
    defect_table_path: str | None = None
    n_min: int = 5
    n_max: int = 60
    max_l: int = 3
    rtol: float = 1e-8
    atol: float = 1e-11
    t_end_over_tau: float = 30.0
    stop_population: float = 1e-6
    map_rho_min: float = 1e-2
    map_rho_max: float = 1e3
    map_points: int = 40
    map_gamma_s: float = 1.0
    bisection_tol: float = 1e-2
    map_verify: bool = True
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        problems = []
        if (self.atom_count is None) == (self.sample_diameter_m is None):
            problems.append("give exactly one of atom_count and sample_diameter_m")
        if not self.density_cm3 >= 0 or not math.isfinite(self.density_cm3):
            problems.append("density_cm-3 must be a finite non-negative number")
        if self.atom_count is not None and not self.atom_count > 0:
            problems.append("atom_count must be positive")
        if self.sample_diameter_m is not None and not self.sample_diameter_m > 0:
            problems.append("sample_diameter_m must be positive")
        if not self.t_end_us > self.t0_us:
            problems.append("t_end_us must exceed t0_us")
        if self.detection_floor < 5:
            problems.append("detection_floor must be at least 5")
        if self.cap < 1 or self.compare_cap < 1:
            problems.append("channel caps must be at least 1")
        if self.workers < 1:
            problems.append("workers must be at least 1")
        if not 0 < self.map_rho_min < self.map_rho_max or self.map_points < 2:
            problems.append("map grid needs 0 < rho_min < rho_max and at least 2 points")
        for label in (self.initial, self.channel_upper, self.channel_lower):
            try:
                LevelRef.parse(label)
            except (ConfigurationError, ValueError) as exc:
                problems.append(str(exc))
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def density_m3(self) -> float:
        return self.density_cm3 * CM3_TO_M3

    @property
    def initial_level(self) -> LevelRef:
        return LevelRef.parse(self.initial)

    def geometry(self) -> SampleGeometry:
        if self.sample_diameter_m is not None:
            return SampleGeometry(self.density_m3, self.sample_diameter_m)
        if self.density_m3 == 0:
            return SampleGeometry(0.0, FALLBACK_DIAMETER_M)
        return SampleGeometry.from_atom_count(self.density_m3, self.atom_count)

    @property
    def initial_atoms(self) -> float:
        """Atoms in the detection window at ``t0``."""
        return self.atom_count if self.atom_count is not None else self.geometry().atom_count

    def table(self) -> QuantumDefectTable:
        if self.defect_table_path:
            return load_defect_table(self.defect_table_path)
        return QuantumDefectTable(n_min=self.n_min, n_max=self.n_max, max_l=self.max_l)

    def settings(self) -> IntegratorSettings:
        return IntegratorSettings(rtol=self.rtol, atol=self.atol, t_end_over_tau=self.t_end_over_tau,
                                  stop_population=self.stop_population)

    def snapshot(self) -> dict:
        d = asdict(self)
        d["density_m-3"] = self.density_m3
        return d


# INI layout: section -> {ini key: dataclass field}
_LAYOUT = {
    "sample": {
        "density_cm-3": "density_cm3",
        "atom_count": "atom_count",
        "sample_diameter_m": "sample_diameter_m",
    },
    "levels": {
        "initial": "initial",
        "defect_table_path": "defect_table_path",
        "n_min": "n_min",
        "n_max": "n_max",
        "max_l": "max_l",
        "export_n_min": "export_n_min",
        "export_n_max": "export_n_max",
    },
    "channel": {"upper": "channel_upper", "lower": "channel_lower"},
    "cascade": {
        "detection_floor": "detection_floor",
        "t0_us": "t0_us",
        "t_end_us": "t_end_us",
        "points": "cascade_points",
        "cap": "cap",
        "compare_cap": "compare_cap",
    },
    "integrator": {
        "rtol": "rtol",
        "atol": "atol",
        "t_end_over_tau": "t_end_over_tau",
        "stop_population": "stop_population",
    },
    "map": {
        "rho_min": "map_rho_min",
        "rho_max": "map_rho_max",
        "points": "map_points",
        "gamma_s-1": "map_gamma_s",
        "bisection_tol": "bisection_tol",
        "verify_scan": "map_verify",
    },
    "run": {"output_dir": "output_dir", "workers": "workers"},
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name: str, raw: str):
    kind = _TYPES[name]
    raw = raw.strip()
    if "None" in kind and raw.lower() in ("", "none"):
        return None
    if kind.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read an INI run configuration; keyword overrides win over file values.

    Relative ``defect_table_path`` values resolve against the config file.
    Unknown sections or keys are rejected so that unit typos fail loudly.
    """
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigurationError(f"unreadable config {path}: {exc}") from exc
        for section in cp.sections():
            if section not in _LAYOUT:
                raise ConfigurationError(f"{path}: unknown section [{section}]")
            for key, raw in cp[section].items():
                if key not in _LAYOUT[section]:
                    raise ConfigurationError(f"{path}: unknown key {key!r} in [{section}]")
                name = _LAYOUT[section][key]
                try:
                    values[name] = _convert(name, raw)
                except ValueError as exc:
                    raise ConfigurationError(f"{path}: [{section}] {key}: {exc}") from exc
        # a file that names a diameter drops the default atom count, and vice versa
        if "sample_diameter_m" in values and "atom_count" not in values:
            values["atom_count"] = None
        tp = values.get("defect_table_path")
        if tp and not Path(tp).is_absolute():
            values["defect_table_path"] = str(path.parent / tp)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def write_config(cfg: RunConfig, path: str | Path) -> None:
    cp = configparser.ConfigParser()
    for section, keys in _LAYOUT.items():
        cp[section] = {}
        for key, name in keys.items():
            value = getattr(cfg, name)
            if value is not None:
                cp[section][key] = str(value).lower() if isinstance(value, bool) else str(value)
    with open(path, "w", newline="\n") as fh:
        cp.write(fh)


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = VERSION
    outputs: list[str] = field(default_factory=list)
    wall_clock_s: float = 0.0
    warnings: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def missing_outputs(self) -> list[str]:
        return [p for p in self.outputs if not Path(p).is_file() or Path(p).stat().st_size == 0]

    def write(self, path: str | Path) -> None:
        body = asdict(self)
        body["density_cm-3"] = self.config.get("density_cm3")
        body["density_m-3"] = self.config.get("density_m-3")
        with open(path, "w", newline="\n") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
