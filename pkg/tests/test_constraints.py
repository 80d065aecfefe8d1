import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongcoupling.constraints import (
    GENERATORS,
    ROTATION,
    TRANSLATION,
    DegenerateConstraintError,
    GeneratorAction,
    IterationDiverged,
    build_constraints,
    build_N,
    generator_rows,
    iterate_Ntilde,
)
from strongcoupling.meanfield import Profile, solve_mean_field
from strongcoupling.modes import DipoleGaussian, SourceProfile, ZeroFunction, build_mode_lattice, central_gradient

PROBE_Q = DipoleGaussian(direction=(0.3, -0.5, 0.8), width=1.3, shift=(0.2, 0.1, -0.4))


def fd_rotation(func, f, axis, h=1e-5):
    """-i (f x grad v)_axis with the gradient by central differences."""
    grad = central_gradient(func, f, h)
    return -1j * np.cross(f, grad)[:, axis]


def test_translation_rows(lattice, mf_moving):
    N = build_N(lattice, mf_moving.profile)
    for a in range(3):
        np.testing.assert_allclose(N[3 + a], lattice.f[:, a] * mf_moving.u, rtol=1e-14, atol=0)


def test_rotation_about_symmetry_axis_vanishes(lattice, mf_moving):
    assert np.max(np.abs(build_N(lattice, mf_moving.profile)[2])) <= 1e-18


def test_rotation_about_x_matches_finite_differences(lattice, source):
    prof = Profile.on(lattice, source, 0.3)
    f = np.array([[0.0, 1.0, 0.0], [0.4, 1.1, -0.7], [1.3, -0.2, 0.9]])
    act = GeneratorAction(ROTATION, 0)
    for axis in range(3):
        gen = GeneratorAction(ROTATION, axis)
        assert np.max(np.abs(gen.apply(prof, f) - fd_rotation(prof, f, axis))) <= 1e-8
    # at f = (0,1,0): -i (f2 d3 - f3 d2) u = -i d3 u
    expected = -1j * central_gradient(prof, f[:1])[0, 2]
    assert abs(act.apply(prof, f[:1])[0] - expected) <= 1e-8


def test_rotation_of_probe_function_matches_finite_differences(lattice):
    f = lattice.f[::5] + 0.17
    for axis in range(3):
        gen = GeneratorAction(ROTATION, axis)
        assert np.max(np.abs(gen.apply(PROBE_Q, f) - fd_rotation(PROBE_Q, f, axis))) <= 1e-8


def test_rotation_expectation_is_imaginary(lattice):
    v = PROBE_Q.value(lattice.f)
    for axis in range(3):
        val = np.sum(v * GeneratorAction(ROTATION, axis).apply(PROBE_Q, lattice.f))
        assert abs(val.real) <= 1e-14 * max(1.0, abs(val))


def test_zero_profile_is_rejected(lattice):
    with pytest.raises(DegenerateConstraintError):
        build_constraints(lattice, ZeroFunction())


def test_biorthogonality_on_active_directions(cs_moving):
    r = cs_moving.residuals()
    assert r["biorthogonality_active"] <= 1e-10
    assert r["inactive"] == ["rot_z"]
    assert cs_moving.n_active == 5


def test_gram_cross_block_vanishes_at_rest(lattice, mf_rest):
    cs = build_constraints(lattice, mf_rest.profile)
    # brute-force double loop over the lattice for the rotation/translation block
    N = build_N(lattice, mf_rest.profile)
    cross = np.array([[math.fsum(N[i, k] * N[3 + j, k] for k in range(lattice.size))
                       for j in range(3)] for i in range(3)])
    assert np.max(np.abs(cross)) <= 1e-15
    assert np.max(np.abs(cs.gram[:3, 3:])) <= 1e-15


def test_projector_properties(cs_moving, rng):
    r = cs_moving.residuals()
    assert r["AM"] <= 1e-10 and r["NA"] <= 1e-10 and r["idempotency"] <= 1e-10
    for k in np.flatnonzero(cs_moving.active):
        assert np.max(np.abs(cs_moving.project(cs_moving.M[:, k]))) <= 1e-10


def test_projector_fixed_point(cs_moving, rng):
    x = cs_moving.project(rng.standard_normal(cs_moving.N.shape[1]))
    np.testing.assert_allclose(cs_moving.project(x), x, atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_projection_kills_all_six_functionals(cs_moving, seed):
    x = np.random.default_rng(seed).standard_normal(cs_moving.N.shape[1])
    assert np.max(np.abs(cs_moving.N @ cs_moving.project(x))) <= 1e-10


def test_dense_projector_matches_factored(cs_moving, rng):
    x = rng.standard_normal(cs_moving.N.shape[1])
    np.testing.assert_allclose(cs_moving.dense_projector() @ x, cs_moving.project(x), atol=1e-14)


@pytest.mark.parametrize("R", [0.5, 0.7, 1.0])
@pytest.mark.parametrize("cutoff", [2.0, 3.0])
def test_constraint_sweep_active_residuals(R, cutoff):
    lat = build_mode_lattice(2 * math.pi, 1.0, cutoff)
    mf = solve_mean_field(lat, SourceProfile("gaussian", R), 4.0, velocity=0.2)
    r = build_constraints(lat, mf.profile).residuals()
    assert r["biorthogonality_active"] <= 1e-10
    assert max(r["AM"], r["NA"], r["idempotency"]) <= 1e-10


def test_kernel_basis_satisfies_constraints(cs_moving):
    W = cs_moving.kernel_basis()
    assert W.shape[1] == cs_moving.N.shape[1] - 5
    assert np.max(np.abs(cs_moving.N @ W)) <= 1e-12
    np.testing.assert_allclose(W.T @ W, np.eye(W.shape[1]), atol=1e-12)


def test_projector_is_orthogonal_for_v_equal_u(cs_moving):
    A = cs_moving.dense_projector()
    np.testing.assert_allclose(A, A.T, atol=1e-12)


# --- N~ iteration ---------------------------------------------------------------


@pytest.fixture(scope="module")
def n_rows(lattice, mf_moving):
    return generator_rows(lattice, mf_moving.profile)


def test_ntilde_vanishing_Q(lattice, n_rows):
    res = iterate_Ntilde(n_rows, np.zeros_like(n_rows), g=5.0)
    assert res.iterations == 1
    assert np.array_equal(res.Ntilde, -n_rows)


def test_ntilde_first_iterate(lattice, n_rows):
    JQ = generator_rows(lattice, PROBE_Q)
    g = 7.0
    one = iterate_Ntilde(n_rows, JQ, g, max_iter=1, tol=np.inf)
    T = n_rows @ JQ.T
    expected = -n_rows + (T @ n_rows) / g
    np.testing.assert_allclose(one.Ntilde, expected, rtol=0, atol=1e-15 * np.max(np.abs(expected)))


def test_ntilde_fixed_point_solves_linear_system(lattice, n_rows):
    JQ = generator_rows(lattice, PROBE_Q)
    g = 3.0
    res = iterate_Ntilde(n_rows, JQ, g)
    T = n_rows @ JQ.T
    direct = np.linalg.solve(np.eye(6) + T / g, -n_rows)
    np.testing.assert_allclose(res.Ntilde, direct, atol=1e-11)


def test_ntilde_ratio_halves_when_g_doubles(lattice, n_rows):
    JQ = generator_rows(lattice, PROBE_Q)
    r1 = iterate_Ntilde(n_rows, JQ, 2.0).ratio
    r2 = iterate_Ntilde(n_rows, JQ, 4.0).ratio
    assert r2 / r1 == pytest.approx(0.5, rel=0.1)


@pytest.mark.parametrize("scale,g", [(1.0, 1.0), (4.0, 1.0), (5.0, 2.0), (1.0, 10.0)])
def test_ntilde_geometric_decay(lattice, n_rows, scale, g):
    JQ = scale * generator_rows(lattice, PROBE_Q)
    exact = np.linalg.solve(np.eye(6) + (n_rows @ JQ.T) / g, -n_rows)
    res = iterate_Ntilde(n_rows, JQ, g)
    assert res.ratio < 1
    # replay the iterates and measure against the exact fixed point
    current = -n_rows
    for _ in range(res.iterations):
        nxt = -n_rows - (n_rows @ JQ.T) @ current / g
        e_now, e_next = np.linalg.norm(current - exact), np.linalg.norm(nxt - exact)
        assert e_next <= res.ratio * e_now + 1e-13
        current = nxt
    np.testing.assert_allclose(res.Ntilde, exact, atol=1e-11)


def test_ntilde_divergence_reports_ratio(lattice, n_rows):
    JQ = 1e6 * generator_rows(lattice, PROBE_Q)
    with pytest.raises(IterationDiverged) as err:
        iterate_Ntilde(n_rows, JQ, 1.0, max_iter=50)
    assert err.value.ratio > 1


def test_generator_order():
    assert [(g.kind, g.axis) for g in GENERATORS] == [
        (ROTATION, 0), (ROTATION, 1), (ROTATION, 2), (TRANSLATION, 0), (TRANSLATION, 1), (TRANSLATION, 2)]
