import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydberg_wstate.hamiltonian import (
    DimensionMismatchError, bloch_state, realspace_operator, sector_operator, vertex_ss,
)
from rydberg_wstate.hilbert import sector_momenta
from rydberg_wstate.params import C3_NQ80, derive

from conftest import A_UM, OMEGA_B, brute_force_hamiltonian, sweet_params


@pytest.mark.parametrize("n, m, zfrac", [(3, 1, None), (3, 2, 0.5), (4, 2, None), (5, 1, 0.9), (2, 3, None)])
def test_realspace_matches_brute_force(n, m, zfrac):
    p = sweet_params(4.0, n, m)
    if zfrac is not None:
        p = p.with_(delta=C3_NQ80 / (zfrac * A_UM**3))
    op = realspace_operator(p)
    d = derive(p)
    ref = brute_force_hamiltonian(n, m, d.eps0, d.t_e, d.omega_b, d.g_b * d.omega_b, d.g_p * d.omega_b)
    assert np.allclose(op.to_dense(), ref, rtol=0, atol=1e-9 * abs(d.t_e))
    assert np.allclose(op.to_sparse().toarray(), ref, rtol=0, atol=1e-9 * abs(d.t_e))


@pytest.mark.parametrize("n, m", [(3, 2), (4, 2), (5, 1)])
def test_sector_operators_hermitian_and_block_diagonalise(n, m):
    p = sweet_params(6.0, n, m).with_(delta=C3_NQ80 / (0.6 * A_UM**3))
    real = realspace_operator(p)
    h_real = real.to_dense()
    spectra = []
    for k in sector_momenta(n):
        op = sector_operator(p, k)
        h = op.to_dense()
        assert np.allclose(h, h.conj().T, rtol=0, atol=1e-12 * abs(op.derived.t_e))
        spectra.append(np.linalg.eigvalsh(h))
        # embedding intertwines the sector operator with the real-space one
        rng = np.random.default_rng(1)
        v = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
        assert np.allclose(op.basis.embed(op.apply(v)), h_real @ op.basis.embed(v))
    union = np.sort(np.concatenate(spectra))
    assert np.allclose(union, np.linalg.eigvalsh(h_real), rtol=0, atol=1e-9 * abs(real.derived.t_e))


def test_realspace_commutes_with_translation():
    op = realspace_operator(sweet_params(3.0, 5, 2))
    rng = np.random.default_rng(2)
    v = rng.standard_normal(op.dim)
    assert np.allclose(op.apply(op.basis.translate(v)), op.basis.translate(op.apply(v)))


@given(q=st.floats(-math.pi, math.pi), g=st.floats(0.01, 10.0))
@settings(max_examples=100, deadline=None)
def test_vertex_vanishes_at_pi(q, g):
    assert abs(vertex_ss(g, OMEGA_B, math.pi, q)) <= 1e-14 * g * OMEGA_B


@given(k=st.floats(-math.pi, math.pi), q=st.floats(-math.pi, math.pi))
@settings(max_examples=50, deadline=None)
def test_vertex_closed_form(k, q):
    g = 0.7
    expected = 2j * g * OMEGA_B * (math.sin(k) - math.sin(q) - math.sin(k + q))
    assert vertex_ss(g, OMEGA_B, k, q) == pytest.approx(expected)


@pytest.mark.parametrize("k_index", range(6))
def test_vertex_magnitude_from_matrix_elements(k_index):
    # |<excitation k+q, boson -q| H |k, 0_b>| = |gamma(k, q)| / sqrt(N) at the sweet spot
    n = 6
    p = sweet_params(3.0, n, 1)
    op = realspace_operator(p)
    d = op.derived
    k = 2 * math.pi * k_index / n
    out = op.apply(bloch_state(op.basis, k))
    bs = op.basis.bosons
    sites = np.arange(n)
    one = np.array([bs.index(tuple(int(i == m) for i in range(n))) for m in range(n)])
    rows = sites[:, None] * bs.dim + one[None, :]
    for j in range(n):
        q = 2 * math.pi * j / n
        final = np.exp(1j * (k + q) * sites[:, None] - 1j * q * sites[None, :]) / n
        amp = np.vdot(final.ravel(), out[rows].ravel())
        assert abs(amp) == pytest.approx(abs(vertex_ss(d.g_b, d.omega_b, k, q)) / math.sqrt(n),
                                         abs=1e-12 * d.omega_b)


@pytest.mark.parametrize("lam", [0.5, 3.0, 9.0])
def test_pi_bloch_state_is_exact_eigenstate(lam):
    p = sweet_params(lam, 6, 3)
    op = sector_operator(p, math.pi)
    d = op.derived
    v = np.zeros(op.dim, dtype=complex)
    v[op.basis.zero_boson_index] = 1
    assert np.linalg.norm(op.apply(v) - (d.eps0 - 2 * d.abs_te) * v) <= 1e-12 * d.abs_te
    real = realspace_operator(p)
    psi = bloch_state(real.basis, math.pi)
    assert np.linalg.norm(real.apply(psi) - (d.eps0 - 2 * d.abs_te) * psi) <= 1e-12 * d.abs_te


@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_pi_excitation_plus_one_boson_is_exact(j):
    # the vertex also vanishes for absorbing a boson into k = pi
    n = 4
    p = sweet_params(5.0, n, 3)
    op = realspace_operator(p)
    d = op.derived
    bs = op.basis.bosons
    q = 2 * math.pi * j / n
    psi = np.zeros(op.dim, dtype=complex)
    for s in range(n):
        for m in range(n):
            psi[s * bs.dim + bs.index(tuple(int(i == m) for i in range(n)))] = np.exp(1j * math.pi * s + 1j * q * m)
    psi /= np.linalg.norm(psi)
    target = d.eps0 - 2 * d.abs_te + d.omega_b
    assert np.linalg.norm(op.apply(psi) - target * psi) <= 1e-10 * d.abs_te


def test_pi_state_not_eigenstate_off_sweet_spot():
    p = sweet_params(3.0, 6, 2).with_(delta=C3_NQ80 / (0.6 * A_UM**3))
    op = sector_operator(p, math.pi)
    v = np.zeros(op.dim, dtype=complex)
    v[0] = 1
    d = op.derived
    assert np.linalg.norm(op.apply(v) - (d.eps0 - 2 * d.abs_te) * v) > 1e-3 * d.abs_te


def test_switches_and_zero_excitation_sector():
    n = 4
    p = sweet_params(3.0, n, 1)
    d = derive(p)
    for k in sector_momenta(n):
        free = sector_operator(p, k, include_b=False, include_p=False, include_eps0=False)
        # decoupled: band energy 2|t_e| cos(k_e) with k_e = K - q for one boson of momentum q
        expected = [2 * d.abs_te * math.cos(k)]
        expected += [2 * d.abs_te * math.cos(k - 2 * math.pi * j / n) + d.omega_b for j in range(n)]
        assert np.allclose(np.linalg.eigvalsh(free.to_dense()), np.sort(expected), rtol=0, atol=1e-9 * d.abs_te)
    zero = realspace_operator(p, sector=0)
    assert np.allclose(zero.to_dense(), np.diag(d.omega_b * zero.basis.bosons.totals))


def test_boson_number_and_dimension_check():
    op = sector_operator(sweet_params(3.0, 4, 2), math.pi)
    v = np.zeros(op.dim, dtype=complex)
    v[0] = 1
    assert op.boson_number(v) == 0
    with pytest.raises(DimensionMismatchError):
        op.apply(np.zeros(op.dim + 1))


@pytest.mark.parametrize("n, m, zfrac", [(2, 3, None), (3, 2, 0.6), (4, 2, None), (6, 2, 0.9)])
def test_assembled_matrix_matches_matrix_free_apply(n, m, zfrac):
    p = sweet_params(5.0, n, m)
    if zfrac is not None:
        p = p.with_(delta=C3_NQ80 / (zfrac * A_UM**3))
    ops = [realspace_operator(p)] + [sector_operator(p, k) for k in sector_momenta(n)]
    for op in ops:
        eye = np.eye(op.dim, dtype=op.dtype)
        cols = np.stack([op.apply(eye[:, i]) for i in range(op.dim)], axis=1)
        assert np.allclose(op.to_sparse().toarray(), cols, rtol=0, atol=1e-12 * abs(op.derived.t_e))


def test_linear_operator_wrapper():
    op = sector_operator(sweet_params(3.0, 4, 2), math.pi / 2)
    lin = op.as_linear_operator()
    v = np.random.default_rng(0).standard_normal(op.dim)
    assert np.allclose(lin @ v, op @ v)
    assert lin.shape == op.shape
