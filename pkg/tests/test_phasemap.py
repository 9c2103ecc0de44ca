import math

import numpy as np
import pytest

from rydsr import phasemap
from rydsr.atomic import LevelRef, QuantumDefectTable, downward_channels, make_channel
from rydsr.dynamics import EXPERIMENT_GEOMETRY, Regime, SampleGeometry
from rydsr.phasemap import (OPEN_ABOVE, boundary_scan, classify_point, count_flips, critical_C,
                            critical_curve, map_channels, minimal_superradiant_n,
                            write_placements_csv)

RB = QuantumDefectTable()


@pytest.fixture(scope="module")
def crit10():
    return critical_C(10.0)


def test_bracket_probe(crit10):
    assert classify_point(2 * crit10, 10.0) is Regime.SUPERRADIANT
    assert classify_point(crit10 / 2, 10.0) is Regime.ASE


def test_flip_within_tolerance(crit10):
    eps = 1e-2
    assert classify_point(crit10 * (1 + eps), 10.0) is Regime.SUPERRADIANT
    assert classify_point(crit10 * (1 - eps), 10.0) is Regime.ASE


def test_single_flip_on_scan(crit10):
    assert count_flips(boundary_scan(10.0, crit10)) == 1


def test_independent_of_gamma(crit10):
    assert critical_C(10.0, gamma=3.7e4) == pytest.approx(crit10, rel=1e-2)


def test_boundary_falls_with_size():
    assert critical_C(1.0) > critical_C(10.0) > critical_C(100.0)


def test_open_above(monkeypatch):
    monkeypatch.setattr(phasemap, "classify_point", lambda *a, **k: Regime.ASE)
    assert critical_C(1.0) == OPEN_ABOVE


def test_rejects_bad_rho():
    with pytest.raises(ValueError):
        critical_C(0.0)


def test_curve_csv_and_order(tmp_path):
    curve = critical_curve([10.0, 100.0, 1000.0], verify=True)
    assert np.all(curve.C_crit > 0)
    assert curve.monotone_scan_ok()
    p = tmp_path / "curve.csv"
    curve.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "rho,C_crit"
    assert len(lines) == 4
    again = critical_curve([10.0, 100.0, 1000.0])
    assert np.array_equal(curve.C_crit, again.C_crit)
    with pytest.raises(ValueError):
        critical_curve([10.0, 1.0])


def test_zero_density_all_ase():
    chans = downward_channels(LevelRef(40, 1), RB)[-6:]
    out = map_channels(chans, SampleGeometry(0.0, 1e-4))
    assert all(p.C == 0.0 and p.regime is Regime.ASE for p in out)


def test_reference_channels_placed(tmp_path):
    chans = [make_channel(LevelRef(40, 1), LevelRef(n, 0), RB) for n in (6, 21, 25, 37, 39)]
    out = map_channels(chans, EXPERIMENT_GEOMETRY)
    regimes = {p.channel.lower.n: p.regime for p in out}
    assert regimes[39] is Regime.SUPERRADIANT
    assert regimes[37] is Regime.SUPERRADIANT
    assert regimes[6] is Regime.ASE
    assert minimal_superradiant_n(out) == 25
    p = tmp_path / "m.csv"
    write_placements_csv(out, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "n_upper,l_upper,n_lower,l_lower,C,rho,class"
    assert lines[-1].endswith(",Superradiant")


def test_channels_consistent_with_curve():
    # a physical channel classified SR lies above the boundary at its own rho
    ch = make_channel(LevelRef(40, 1), LevelRef(30, 0), RB)
    (pl,) = map_channels([ch], EXPERIMENT_GEOMETRY)
    assert pl.regime is Regime.SUPERRADIANT
    assert pl.C > critical_C(pl.rho)
    assert math.isfinite(pl.rho)
