import math

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from rydsr.atomic import (RYDBERG_RB87, ConfigurationError, LevelRef, QuantumDefectTable,
                          TransitionError, angular_factor, downward_channels, effective_n,
                          einstein_A_from, exchange_splitting, is_dipole_allowed, level_energy,
                          load_defect_table, make_channel, mean_spacing, radial_matrix_element,
                          transition_wavelength, vacuum_lifetime, write_channels_csv,
                          write_defect_table, zero_defect_table)
from rydsr.numerov import radial_integral, radial_wavefunction

RB = QuantumDefectTable()
HYDROGEN = zero_defect_table(n_min=1, n_max=12)


def test_parse_labels():
    assert LevelRef.parse("40p") == LevelRef(40, 1)
    assert LevelRef.parse(" 39S ") == LevelRef(39, 0)
    assert LevelRef(38, 2).label == "38d"
    with pytest.raises(ConfigurationError):
        LevelRef.parse("40x")
    with pytest.raises(ConfigurationError):
        LevelRef.parse("p40")
    with pytest.raises(ValueError):
        LevelRef(3, 3)


def test_effective_n_and_energy():
    assert effective_n(LevelRef(40, 1), RB) == pytest.approx(37.3452, abs=1e-12)
    assert effective_n(LevelRef(39, 0), RB) == pytest.approx(35.8689, abs=1e-12)
    assert effective_n(LevelRef(30, 5), RB) == 30.0
    assert level_energy(LevelRef(40, 1), RB) == pytest.approx(-RYDBERG_RB87 / 37.3452**2, rel=1e-14)


def test_wavelength_39s_from_energies():
    dE = RYDBERG_RB87 * (1 / 35.8689**2 - 1 / 37.3452**2)  # cm^-1
    assert transition_wavelength(LevelRef(40, 1), LevelRef(39, 0), RB) == pytest.approx(0.01 / dE)
    # microwave: a couple of millimetres
    assert 1e-3 < 0.01 / dE < 3e-3


def test_upward_transition_rejected():
    with pytest.raises(TransitionError):
        transition_wavelength(LevelRef(40, 1), LevelRef(41, 0), RB)
    with pytest.raises(TransitionError):
        make_channel(LevelRef(40, 1), LevelRef(38, 1), RB)


def test_dipole_rule():
    assert is_dipole_allowed(LevelRef(40, 1), LevelRef(39, 0))
    assert is_dipole_allowed(LevelRef(40, 1), LevelRef(38, 2))
    assert not is_dipole_allowed(LevelRef(40, 1), LevelRef(39, 1))
    assert not is_dipole_allowed(LevelRef(40, 1), LevelRef(39, 3))


@pytest.mark.parametrize(
    "upper, lower, exact",
    [
        # closed-form hydrogen radial integrals in a0
        ((2, 1), (1, 0), 128 * math.sqrt(6) / 243),
        ((3, 1), (2, 0), 3.0648),
        ((3, 2), (2, 1), 4.7476),
        ((3, 1), (1, 0), 0.5167),
    ],
)
def test_hydrogen_radial_elements(upper, lower, exact):
    R = radial_matrix_element(LevelRef(*upper), LevelRef(*lower), HYDROGEN)
    assert abs(R) == pytest.approx(exact, rel=2e-4)


def test_hydrogen_lyman_alpha_rate():
    # 6.2649e8 s^-1 with reduced mass, 6.2695e8 s^-1 for an infinitely heavy nucleus
    ch = make_channel(LevelRef(2, 1), LevelRef(1, 0), HYDROGEN)
    assert ch.einstein_A == pytest.approx(6.2695e8, rel=1e-3)


def test_hydrogen_balmer_rates():
    a = make_channel(LevelRef(3, 1), LevelRef(2, 0), HYDROGEN).einstein_A
    b = make_channel(LevelRef(3, 2), LevelRef(2, 1), HYDROGEN).einstein_A
    assert a == pytest.approx(2.245e7, rel=2e-3)
    assert b == pytest.approx(6.465e7, rel=2e-3)


def test_radial_integral_symmetric():
    a = radial_wavefunction(effective_n(LevelRef(40, 1), RB), 1)
    b = radial_wavefunction(effective_n(LevelRef(39, 0), RB), 0)
    assert radial_integral(a, b) == radial_integral(b, a)


def test_wavefunction_normalised():
    wf = radial_wavefunction(37.3452, 1)
    assert 2 * wf.step * np.dot(wf.x**2 * wf.y, wf.y) == pytest.approx(1.0, abs=1e-12)
    # <r> = (3 n*^2 - l(l+1)) / 2 for a Coulomb state
    n = 37.3452
    r_mean = radial_integral(wf, wf)
    assert r_mean == pytest.approx((3 * n * n - 2) / 2, rel=2e-3)


def test_near_neighbour_element_scales_as_n_squared():
    r40 = abs(radial_matrix_element(LevelRef(40, 1), LevelRef(40, 0), RB))
    r55 = abs(radial_matrix_element(LevelRef(55, 1), LevelRef(55, 0), RB))
    ratio = (55 - 2.6548) ** 2 / (40 - 2.6548) ** 2
    assert r55 / r40 == pytest.approx(ratio, rel=0.03)


def test_rate_cubic_in_frequency():
    assert einstein_A_from(2e10, 3e-27) == pytest.approx(8 * einstein_A_from(1e10, 3e-27), rel=1e-14)
    assert einstein_A_from(1e10, 6e-27) == pytest.approx(4 * einstein_A_from(1e10, 3e-27), rel=1e-14)


def test_angular_factor():
    assert angular_factor(LevelRef(40, 1), LevelRef(39, 0)) == pytest.approx(1 / 3)
    assert angular_factor(LevelRef(40, 1), LevelRef(38, 2)) == pytest.approx(2 / 3)
    assert angular_factor(LevelRef(40, 2), LevelRef(39, 1)) == pytest.approx(2 / 5)


def test_exchange_splitting_inverse_cube():
    d = 1000 * sc.e * sc.physical_constants["Bohr radius"][0]
    w1 = exchange_splitting(d, 1e-5)
    assert exchange_splitting(d, 2e-5) == pytest.approx(w1 / 8, rel=1e-14)
    assert w1 == pytest.approx(d**2 / (4 * math.pi * sc.epsilon_0 * sc.hbar * 1e-15), rel=1e-14)
    with pytest.raises(ValueError):
        exchange_splitting(d, 0.0)


def test_mean_spacing():
    # Wigner-Seitz radius
    assert mean_spacing(1e15) == pytest.approx((3 / (4 * math.pi * 1e15)) ** (1 / 3), rel=1e-14)


def test_vacuum_lifetime_40p():
    tau = vacuum_lifetime(LevelRef(40, 1), RB)
    assert tau == pytest.approx(210e-6, rel=0.3)


def test_vacuum_fastest_channel_is_low_n():
    chans = downward_channels(LevelRef(40, 1), RB)
    s = {c.lower.n: c for c in chans if c.lower.l == 0}
    assert all(c.lower.l in (0, 2) for c in chans)
    assert s[5].einstein_A > s[39].einstein_A
    assert max(s.values(), key=lambda c: c.einstein_A).lower.n < 10


def test_downward_channels_are_downward_and_in_range():
    chans = downward_channels(LevelRef(12, 2), RB)
    assert chans
    for c in chans:
        assert level_energy(c.lower, RB) < level_energy(c.upper, RB)
        assert c.lower.l in (1, 3)
        assert RB.n_min <= c.lower.n <= RB.n_max


def test_defect_table_round_trip(tmp_path):
    p = tmp_path / "defects.ini"
    t = RB.with_defects(s=3.0, p=2.5)
    write_defect_table(t, p)
    assert load_defect_table(p) == t


def test_missing_table_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_defect_table(tmp_path / "nope.ini")


def test_channels_csv(tmp_path):
    p = tmp_path / "c.csv"
    write_channels_csv(downward_channels(LevelRef(10, 1), RB), p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "n_u,l_u,n_d,l_d,lambda_m,omega_rad_s,radial_au,A_s"
    assert len(lines) > 2


@settings(max_examples=25, deadline=None)
@given(n=st.integers(8, 50), l=st.integers(0, 3))
def test_energy_monotone_in_n(n, l):
    lo, hi = LevelRef(n, l), LevelRef(n + 1, l)
    assert level_energy(lo, RB) < level_energy(hi, RB) < 0


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 9))
def test_hydrogen_energies(n):
    e = level_energy(LevelRef(n, 0), HYDROGEN)
    assert e == pytest.approx(-HYDROGEN.rydberg_constant / n**2, rel=1e-14)
