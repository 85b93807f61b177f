import itertools
import math

import numpy as np
import pytest

from markovprep.lattice import (
    BoseFockBasis,
    FermiFockBasis,
    SpinChainSpec,
    aklt_ground_space,
    aklt_hamiltonian,
    aklt_process,
    bec_process,
    bec_state,
    eta_process,
    eta_state,
)
from markovprep.lattice import aklt, fermi
from markovprep.liouvillian import LindbladProcess, build_superoperator, spectrum
from markovprep.operators import to_dense
from markovprep.verification import dark_space, krylov_reachability, null_space


# -- AKLT ---------------------------------------------------------------------

def test_bond_hamiltonian_spectrum():
    ev = np.linalg.eigvalsh(aklt.bond_hamiltonian())
    assert np.allclose(ev, [-2 / 3] * 4 + [4 / 3] * 5, atol=1e-12)


def test_bond_projector():
    P = aklt.bond_projector()
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.linalg.matrix_rank(P) == 5


def test_coupled_basis_quantum_numbers():
    phi, psi = aklt.coupled_basis()
    h = aklt.bond_hamiltonian()
    assert np.allclose(h @ phi, 4 / 3 * phi)
    assert np.allclose(h @ psi, -2 / 3 * psi)
    sz = np.kron(aklt.SZ, np.eye(3)) + np.kron(np.eye(3), aklt.SZ)
    assert np.allclose(np.real(np.diag(phi.conj().T @ sz @ phi)), [-2, -1, 0, 1, 2])
    assert np.allclose(np.real(np.diag(psi.conj().T @ sz @ psi)), [0, -1, 0, 1])


def test_ladder_jump_kernel_is_low_space():
    c = aklt.ladder_bond_jump()
    ker = null_space(c)
    _, psi = aklt.coupled_basis()
    assert ker.shape[1] == 4
    # same subspace: projectors agree
    assert np.allclose(ker @ ker.conj().T, psi @ psi.conj().T, atol=1e-10)


def test_ground_space_dimensions():
    assert aklt_ground_space(SpinChainSpec(3)).shape[1] == 1
    assert aklt_ground_space(SpinChainSpec(3, "open")).shape[1] == 4


def test_hamiltonian_bond_terms():
    spec = SpinChainSpec(3)
    H, terms = aklt_hamiltonian(spec)
    assert len(terms) == 3
    assert np.allclose(H, H.conj().T)
    H2, terms2 = aklt_hamiltonian(SpinChainSpec(2))
    assert len(terms2) == 2


@pytest.mark.parametrize("variant", ["ladder", "twirl"])
def test_aklt_dissipative_preparation_n3(variant):
    spec = SpinChainSpec(3)
    proc = aklt_process(spec, variant)
    rep = spectrum(build_superoperator(proc, sparse=False))
    assert rep.kernel_dim == 1
    g = aklt_ground_space(spec)[:, 0]
    assert np.real(np.vdot(g, rep.kernel_basis[0] @ g)) > 1 - 1e-8


def test_clock_shift_family():
    Us = aklt.clock_shift_family(81)
    for U in Us[:5]:
        assert np.allclose(U @ U.conj().T, np.eye(9))
    # orthogonal in Hilbert-Schmidt: a unitary operator basis
    G = np.array([[np.trace(a.conj().T @ b) for b in Us] for a in Us])
    assert np.allclose(G, 9 * np.eye(81))
    with pytest.raises(ValueError):
        aklt.clock_shift_family(82)


def test_chain_spec_validation():
    with pytest.raises(ValueError):
        SpinChainSpec(1)
    with pytest.raises(ValueError):
        SpinChainSpec(3, "twisted")


# -- bosons -------------------------------------------------------------------

def test_bec_amplitudes():
    b = BoseFockBasis(2, 2)
    assert b.states == [(2, 0), (1, 1), (0, 2)]
    assert np.allclose(bec_state(2, 2), np.array([1, math.sqrt(2), 1]) / 2)
    assert np.allclose(bec_state(4, 1), np.ones(4) / 2)


def test_bec_binomial_oracle():
    # oracle: (sum_j a_j^+)^N |vac> built by repeated creation on the full ladder space
    M, N = 3, 3
    basis = BoseFockBasis(M, N)
    amp = {}
    for word in itertools.product(range(M), repeat=N):
        occ = [0] * M
        coef = 1.0
        for j in word:
            occ[j] += 1
            coef *= math.sqrt(occ[j])
        amp[tuple(occ)] = amp.get(tuple(occ), 0) + coef
    v = np.array([amp[s] for s in basis.states])
    v /= np.linalg.norm(v)
    assert np.allclose(bec_state(M, N), v)


def test_difference_annihilates_bec():
    M, N = 3, 2
    upper, lower = BoseFockBasis(M, N), BoseFockBasis(M, N - 1)
    v = bec_state(M, N)
    a = [upper.annihilator(i, lower) for i in range(M)]
    for i, j in itertools.combinations(range(M), 2):
        assert np.linalg.norm((a[i] - a[j]) @ v) < 1e-12


@pytest.mark.parametrize("M,N", [(2, 2), (3, 2), (3, 3)])
def test_bec_dark_space(M, N):
    model = bec_process(M, N)
    ds = dark_space(LindbladProcess(model.basis, model.process.jumps))
    assert len(ds) == 1
    assert abs(np.vdot(ds.basis[:, 0], model.target)) ** 2 > 1 - 1e-10
    assert np.linalg.norm(model.kinetic @ model.target + 2 * N * model.target) < 1e-10


def test_bec_reachability():
    model = bec_process(3, 2)
    cert = krylov_reachability(model.process.jumps, model.target)
    assert cert.verdict == "unique"
    assert cert.evidence["reached_dim"] == 6


def test_fock_budget():
    with pytest.raises(ValueError):
        BoseFockBasis(10, 10)


# -- fermions -----------------------------------------------------------------

def test_anticommutation_full_space():
    M = 2
    full = FermiFockBasis.full(M)
    f = [full.matrix(fermi.ann(m)).toarray() for m in range(2 * M)]
    for a in range(2 * M):
        for b in range(2 * M):
            ac = f[a] @ f[b].conj().T + f[b].conj().T @ f[a]
            assert np.allclose(ac, np.eye(16) * (a == b))
            assert np.allclose(f[a] @ f[b] + f[b] @ f[a], 0)


def test_eta_state_two_sites():
    v = eta_state(2, 1)
    basis = FermiFockBasis(2, 1, 1)
    d0 = basis.index[1 | (1 << 2)]
    d1 = basis.index[2 | (1 << 3)]
    ref = np.zeros(len(basis), dtype=complex)
    ref[d0], ref[d1] = 1, -1
    assert abs(abs(np.vdot(ref / np.sqrt(2), v)) - 1) < 1e-12


def test_eta_two_site_family_one_annihilates():
    model = eta_process(2, 1)
    for c in model.families[1]:
        assert np.linalg.norm(c @ model.target) < 1e-12


def test_eta_doublon_signs():
    M, N = 4, 2
    basis = FermiFockBasis(M, N, N)
    v = eta_state(M, N)
    ref = {}
    for sites in itertools.combinations(range(M), N):
        s = sum(1 << l for l in sites) | sum(1 << (M + l) for l in sites)
        ref[basis.index[s]] = fermi.doublon_sign(sites)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    assert sorted(nz) == sorted(ref)
    # relative signs of the doublon configurations, up to a global phase
    first = nz[0]
    for i in nz:
        assert np.isclose(v[i] / v[first], ref[i] / ref[first])


@pytest.mark.parametrize("M,N", [(2, 1), (4, 1), (4, 2)])
def test_eta_dark_state(M, N):
    model = eta_process(M, N, U=0.7)
    for fam in model.families.values():
        for c in fam:
            assert np.linalg.norm(c @ model.target) < 1e-10
    ds = dark_space(model.process)
    assert len(ds) == 1
    assert abs(np.vdot(ds.basis[:, 0], model.target)) ** 2 > 1 - 1e-10
    H = model.hamiltonian
    assert np.linalg.norm(H @ model.target - N * 0.7 * model.target) < 1e-10


@pytest.mark.parametrize("M", [2, 4])
def test_eta_commutator(M):
    J, U = 1.0, 0.7
    for N in range(M):
        lo, hi = FermiFockBasis(M, N, N), FermiFockBasis(M, N + 1, N + 1)
        E = lo.matrix(fermi.eta_creator(M), hi).toarray()
        H_lo = to_dense(lo.matrix(fermi.hubbard(M, J, U)))
        H_hi = to_dense(hi.matrix(fermi.hubbard(M, J, U)))
        assert np.abs(H_hi @ E - E @ H_lo - U * E).max() < 1e-10


def test_eta_requires_even_ring():
    with pytest.raises(ValueError):
        eta_state(3, 1)
