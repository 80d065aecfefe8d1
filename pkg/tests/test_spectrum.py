import math
from dataclasses import replace
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from strongcoupling.config import RunConfig
from strongcoupling.meanfield import Profile, ground_doublet, solve_mean_field
from strongcoupling.modes import (
    ModeFunction,
    SourceProfile,
    build_mode_lattice,
    central_gradient,
    form_factor,
    z_preserving_group,
)
from strongcoupling.spectrum import (
    PipelineError,
    SpinError,
    SpinQuantumNumbers,
    assemble_table,
    compute_K_gamma,
    compute_Nsq,
    energy_E3,
    energy_E4,
    fixed_source_E4,
    half_integers,
    lattice_quantities,
    multiplet,
)

mp.mp.dps = 40


class Radial(ModeFunction):
    def value(self, f):
        f = np.atleast_2d(f)
        return np.exp(-np.sum(f * f, axis=1))

    def gradient(self, f):
        f = np.atleast_2d(f)
        return -2.0 * self.value(f)[:, None] * f


@pytest.fixture(scope="module")
def table():
    return assemble_table(RunConfig(serial=True))


def test_gamma_at_rest(lattice, mf_rest):
    _, gamma = compute_K_gamma(lattice, mf_rest.u, mf_rest.B, 0.0)
    terms = [b * b * (f @ f) * f[2] ** 2 / (w * w) for b, f, w in zip(mf_rest.B, lattice.f, lattice.omega)]
    assert gamma == pytest.approx(math.fsum(terms) / 3, rel=1e-13)


def test_K_single_pair():
    lat = build_mode_lattice(2 * math.pi, 1.0, 1.2)
    B = np.where(np.abs(lat.n[:, 2]) == 1, 0.1, 0.0)
    u = B * lat.f[:, 2] / lat.omega
    K, _ = compute_K_gamma(lat, u, B, 0.0)
    w = mp.sqrt(2)
    expected = mp.mpf(2) / 3 * w * (mp.mpf("0.1") / w) ** 2
    assert K == pytest.approx(float(expected), rel=1e-14)


def test_K_vanishes_for_zero_profile(lattice, mf_rest):
    K, gamma = compute_K_gamma(lattice, np.zeros(lattice.size), mf_rest.B, 0.0)
    assert K == 0.0 and gamma > 0


def test_E3_arithmetic():
    assert energy_E3(0.0, 2.0, 3.0) == 0.0
    assert energy_E3(1.0, 1.0, 1.0) == 0.75
    assert energy_E3(2.4, 0.7, 5.0) == pytest.approx(4 * energy_E3(1.2, 0.7, 5.0), rel=1e-15)
    with pytest.raises(ValueError):
        energy_E3(1.0, 0.0, 1.0)


def test_radial_function_has_no_rotational_energy(lattice):
    assert compute_Nsq(lattice, Radial()) <= 1e-28


def test_cross_gradient_on_x_axis(lattice, source):
    prof = Profile.on(lattice, source, 0.0)
    f = np.array([[1.0, 0.0, 0.0]])
    phi = float(form_factor(lattice, source, f)[0]) / math.sqrt(2.0)
    cross = np.cross(f, prof.gradient(f))
    assert np.sum(cross**2) == pytest.approx(phi**2, rel=1e-13)
    fd = np.cross(f, central_gradient(prof, f))
    assert np.max(np.abs(fd - cross)) <= 1e-8


def test_Nsq_nonnegative_and_matches_doublet_scale(lattice, mf_rest, source):
    Nsq = compute_Nsq(lattice, mf_rest.profile)
    assert Nsq > 0
    # for u = f3 phi(|f|) at rest the rotational sum is (2/3) a3
    assert Nsq == pytest.approx(2.0 / 3.0 * mf_rest.a3, rel=1e-12)


def test_E4_examples():
    assert energy_E4(Fraction(2), Fraction(3, 2), Fraction(3, 2)) == 6
    assert energy_E4(2.0, 1.5, 1.5) == 6.0
    Nsq = Fraction(7, 3)
    assert energy_E4(Nsq, Fraction(1, 2), Fraction(-1, 2)) == fixed_source_E4(Nsq, Fraction(1, 2)) == Nsq / 2


@pytest.mark.parametrize("j", [Fraction(1, 2), Fraction(3, 2), Fraction(5, 2), Fraction(9, 2)])
def test_splitting_is_equispaced(j):
    Nsq = Fraction(13, 11)
    levels = sorted({energy_E4(Nsq, q.j, q.m_z) for q in multiplet(j)})
    assert len(levels) == 2 * j + 1
    assert {b - a for a, b in zip(levels, levels[1:])} <= {Nsq / 2}


@pytest.mark.parametrize("j,m", [(0, 0), (1, 0), (Fraction(1, 2), Fraction(3, 2)),
                                 (Fraction(3, 2), Fraction(1, 4)), (Fraction(-1, 2), Fraction(-1, 2))])
def test_invalid_spins_rejected(j, m):
    with pytest.raises(SpinError):
        SpinQuantumNumbers(j, m)


def test_half_integers():
    assert half_integers(2.5) == [Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)]


def test_row_count_and_assembly_identity(table):
    cfg = RunConfig()
    assert len(table.rows) == len(cfg.g_list) * sum(int(2 * j + 1) for j in half_integers(cfg.j_max))
    for r in table.rows:
        series = r.g**2 * r.E0_classical + r.g * r.eps0 + r.E2_part + r.E3 / r.g + r.E4 / r.g**2
        assert r.E_total == series
    assert table.assembly_residual() == 0.0


def test_spin_spread_shrinks_as_inverse_square(table):
    spread = {}
    for g in (4.0, 8.0, 16.0):
        e = [r.E_total for r in table.rows if r.g == g and r.j == 1.5]
        spread[g] = max(e) - min(e)
    assert spread[4.0] / spread[8.0] == pytest.approx(4.0, rel=1e-9)
    assert spread[8.0] / spread[16.0] == pytest.approx(4.0, rel=1e-8)


def test_static_row_reproduces_static_energy():
    cfg = RunConfig(fixed_source=True, serial=True, g_list=(6.0,))
    tab = assemble_table(cfg)
    lat = build_mode_lattice(cfg.box_length, cfg.meson_mass, cfg.cutoff)
    B = form_factor(lat, cfg.source)
    hand = -0.5 * math.fsum(b * b * f[2] ** 2 / w for b, f, w in zip(B, lat.f, lat.omega))
    for r in tab.rows:
        assert r.c == 0.0
        assert r.E0_classical == pytest.approx(hand, rel=1e-12)
        assert r.E2_part == tab.diagnostics["6.0"]["zero_point_shift"]


def test_doublet_gap(table, lattice, source):
    for key, d in table.diagnostics.items():
        mf = solve_mean_field(lattice, source, d["g"], velocity=d["c"])
        hand = math.fsum(b * u * f[2] for b, u, f in zip(mf.B, mf.u, lattice.f))
        assert d["a3"] == pytest.approx(hand, rel=1e-13)
        gap = ground_doublet(lattice, mf.u, mf.alpha, mf.a3).gap
        assert d["doublet_gap"] == pytest.approx(gap * d["g"] ** 2, rel=1e-13)


def test_momentum_target_config():
    cfg = RunConfig(serial=True, velocity=None, momentum=0.05, g_list=(4.0,))
    tab = assemble_table(cfg)
    d = tab.diagnostics["4.0"]
    assert d["P"] == pytest.approx(0.05, abs=1e-10)
    assert 0 < d["c"] < 0.99


def test_failure_is_stage_attributed():
    cfg = RunConfig(serial=True, velocity=None, momentum=1e9, g_list=(4.0,))
    with pytest.raises(PipelineError) as err:
        assemble_table(cfg)
    assert err.value.stage == "meanfield"


def _lattice_quantities_in_order(lat, source, order):
    return lattice_quantities(lat.with_order(order), source)


def test_invariance_under_z_preserving_group(lattice, source):
    base = lattice_quantities(lattice, source)
    lookup = {tuple(n): i for i, n in enumerate(lattice.n)}
    for R in z_preserving_group():
        order = [lookup[tuple(R @ n)] for n in lattice.n]
        moved = _lattice_quantities_in_order(lattice, source, order)
        for k in ("K", "gamma", "Nsq", "a3"):
            assert moved[k] == pytest.approx(base[k], rel=1e-12)


def test_invariance_under_random_permutation(lattice, source, rng):
    base = lattice_quantities(lattice, source)
    moved = lattice_quantities(lattice.with_order(rng.permutation(lattice.size)), source)
    for k in base:
        assert moved[k] == pytest.approx(base[k], rel=1e-12)


def test_cutoff_stability_at_default_radius():
    src = SourceProfile("gaussian", RunConfig().source_radius)
    q3 = lattice_quantities(build_mode_lattice(2 * math.pi, 1.0, 3.0), src)
    q4 = lattice_quantities(build_mode_lattice(2 * math.pi, 1.0, 4.0), src)
    for k in ("K", "gamma", "Nsq"):
        assert abs(q4[k] - q3[k]) / abs(q3[k]) < 0.01


def test_parallel_matches_serial(table):
    par = assemble_table(RunConfig(serial=False))
    assert par.as_dicts() == table.as_dicts()


def test_static_profile_switch():
    cfg = RunConfig(serial=True, v_choice="static", g_list=(4.0,))
    moving = assemble_table(replace(cfg, v_choice="u"))
    static = assemble_table(cfg)
    assert static.diagnostics["4.0"]["Nsq"] != moving.diagnostics["4.0"]["Nsq"]
    assert static.rows[0].E0_classical == moving.rows[0].E0_classical
