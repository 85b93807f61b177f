"""Module-level invariants not already covered by the example-based tests."""
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from catalogue import build
from markovprep import constructors as cons
from markovprep.constructors import GraphSpec
from markovprep.dynamics import numeric_evolve
from markovprep.lattice import BoseFockBasis, FermiFockBasis, SpinChainSpec, aklt_process, bec_process, eta_process
from markovprep.lattice import aklt, fermi
from markovprep.liouvillian import (
    LindbladProcess,
    apply_generator,
    build_superoperator,
    kernel_overlap,
    spectrum,
    stationary_space,
)
from markovprep.operators import (
    HADAMARD,
    SIGMA_MINUS,
    CompositeSpace,
    QuasiLocalOperator,
    embed,
    kron,
    partial_trace,
    projector,
    random_density_matrix,
    random_unitary,
    restrict,
    support,
    to_dense,
)
from markovprep.verification import check_theorem1, dark_space, krylov_reachability

seeds = st.integers(0, 2 ** 32 - 1)


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- operator core --------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_embed_support_restrict_roundtrip(seed):
    rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in rng.integers(2, 4, size=int(rng.integers(2, 5))))
    space = CompositeSpace(dims)
    k = int(rng.integers(1, min(3, len(dims)) + 1))
    sites = tuple(sorted(rng.choice(len(dims), size=k, replace=False).tolist()))
    d = int(np.prod([dims[s] for s in sites]))
    local = _cplx(rng, d, d)
    full = embed(QuasiLocalOperator(local, sites, space), sparse=False)
    assert support(full, space) == sites
    back = restrict(full, space)
    assert np.abs(back.local_matrix - local).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_partial_trace_invariants(seed):
    rng = np.random.default_rng(seed)
    space = CompositeSpace((2, 3, 2))
    rho = random_density_matrix(12, rng)
    assert np.allclose(partial_trace(rho, space, [0, 1, 2]), rho, atol=1e-12)
    for keep in ([0], [1], [0, 2], [1, 2]):
        assert abs(np.trace(partial_trace(rho, space, keep)) - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_kron_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = _cplx(rng, 2, 2), _cplx(rng, 3, 3), _cplx(rng, 2, 2)
    assert np.abs(kron(kron(a, b), c) - kron(a, kron(b, c))).max() < 1e-12


# -- generator ----------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_unitary_covariance(seed):
    rng = np.random.default_rng(seed)
    D = 4
    H = _cplx(rng, D, D)
    H = H + H.conj().T
    proc = LindbladProcess(CompositeSpace.qubits(2), (_cplx(rng, D, D), _cplx(rng, D, D)), (0.4, 1.1), H)
    moved = proc.conjugated(random_unitary(D, rng))
    a, b = spectrum(build_superoperator(proc)).values, spectrum(build_superoperator(moved)).values
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-8 * max(1.0, np.abs(a).max())


@settings(max_examples=20, deadline=None)
@given(seed=seeds, n_jumps=st.integers(1, 3))
def test_hermitian_jumps_keep_identity(seed, n_jumps):
    rng = np.random.default_rng(seed)
    D = 4
    jumps = []
    for _ in range(n_jumps):
        a = _cplx(rng, D, D)
        jumps.append(a + a.conj().T)
    proc = LindbladProcess(CompositeSpace.qubits(2), tuple(jumps))
    assert np.abs(apply_generator(proc, np.eye(D))).max() < 1e-10
    ker = stationary_space(build_superoperator(proc))
    assert kernel_overlap(ker, np.eye(D)) > 1 - 1e-10


# -- constructors -------------------------------------------------------------

def _targets():
    g2, g3 = GraphSpec.path(2), GraphSpec.path(3)
    U = cons.gate_sequence_unitary(2, seed=3)
    V = np.kron(HADAMARD, np.eye(2))
    zero2 = np.eye(4)[0]
    return [
        (cons.sigma_minus_jumps(2), zero2),
        (cons.conjugated_jumps(U, cons.sigma_minus_jumps(2)), U @ zero2),
        (cons.qudit_ladder_jumps(2, 3), np.eye(9)[0]),
        (cons.graph_state_jumps(g3), cons.graph_state(g3)),
        (cons.stabilizer_jumps(g2, V), V @ cons.graph_state(g2)),
        ([cons.global_ladder_jump(cons.graph_basis(g2))], cons.graph_state(g2)),
    ]


def test_constructor_jumps_annihilate_targets():
    for jumps, psi in _targets():
        for c in jumps:
            c = embed(c, sparse=False) if isinstance(c, QuasiLocalOperator) else to_dense(c)
            assert np.linalg.norm(c @ psi) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3])
def test_graph_jumps_are_rotated_sigma_minus(n):
    g = GraphSpec.path(n)
    U = cons.graph_basis_unitary(g)
    for k, c in enumerate(cons.graph_state_jumps(g)):
        sm = embed(QuasiLocalOperator(SIGMA_MINUS, (k,), g.space), sparse=False)
        assert np.abs(embed(c, sparse=False) - U @ sm @ U.conj().T).max() < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_stabilizers_commute(n):
    for g in (GraphSpec.path(n), GraphSpec(n, [(0, k) for k in range(1, n)])):
        S = [embed(u, sparse=True) for u in cons.stabilizer_generators(g)]
        for a in S:
            for b in S:
                assert abs(a @ b - b @ a).max() < 1e-12


# -- verification -------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(seed=seeds, n=st.integers(1, 3), use_target=st.booleans(), with_h=st.booleans())
def test_stationarity_verdict_matches_generator(seed, n, use_target, with_h):
    rng = np.random.default_rng(seed)
    D = 2 ** n
    U = random_unitary(D, rng)
    jumps = cons.conjugated_jumps(U, cons.sigma_minus_jumps(n))
    target = U @ np.eye(D)[0]
    H = None
    if with_h:
        # a Hamiltonian diagonal in the rotated basis keeps the target stationary
        H = U @ np.diag(rng.standard_normal(D)) @ U.conj().T
    proc = LindbladProcess(CompositeSpace.qubits(n), tuple(jumps), tuple(rng.uniform(0.2, 2, n)), H)
    phi = target if use_target else _cplx(rng, D)
    v = check_theorem1(proc, phi)
    direct = np.linalg.norm(apply_generator(proc, projector(phi / np.linalg.norm(phi)))) < 1e-9
    assert v.stationary == direct
    if use_target:
        assert v.stationary


SHIPPED = build()


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_dark_vectors_annihilated(name):
    proc, _ = SHIPPED[name]
    ds = dark_space(proc)
    for v in ds.vectors:
        assert max(np.linalg.norm(c @ v) for c in proc.jumps) < 1e-10


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_krylov_unique_implies_kernel_one(name):
    proc, _ = SHIPPED[name]
    if proc.dim > 81:
        pytest.skip("only cross-checked up to D = 81")
    ds = dark_space(proc)
    if len(ds) != 1:
        return
    cert = krylov_reachability(proc.jumps, ds.basis[:, 0])
    if cert.verdict == "unique":
        assert len(stationary_space(build_superoperator(proc, sparse=False))) == 1


# -- dynamics -----------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_trace_conserved(name):
    proc, _ = SHIPPED[name]
    rho0 = random_density_matrix(proc.dim, np.random.default_rng(1))
    traj = numeric_evolve(proc, rho0, 2.0, 10)
    assert np.abs(traj.trace - 1).max() < 1e-9


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_fidelity_monotone_from_diagonal(seed):
    rng = np.random.default_rng(seed)
    n = 3
    p = rng.dirichlet(np.ones(2 ** n))
    proc = LindbladProcess(CompositeSpace.qubits(n), tuple(cons.sigma_minus_jumps(n)), tuple(rng.uniform(0.3, 2, n)))
    traj = numeric_evolve(proc, np.diag(p).astype(complex), 4.0, 40, target=np.eye(8)[0])
    assert (np.diff(traj.fidelity) >= -1e-12).all()


def test_rk4_step_halving():
    g = GraphSpec.path(3)
    proc = LindbladProcess(g.space, tuple(cons.graph_state_jumps(g)), (1.0, 0.5, 2.0))
    rho0 = random_density_matrix(8, np.random.default_rng(0))
    a = numeric_evolve(proc, rho0, 2.0, 4, method="rk4", keep_states=True)
    # same samples, twice as many substeps
    b = numeric_evolve(proc, rho0, 2.0, 8, method="rk4", keep_states=True)
    err = max(np.abs(x - y).max() for x, y in zip(a.states, b.states[::2]))
    assert err < 1e-8


# -- lattice models -----------------------------------------------------------

@pytest.mark.parametrize("M,N", [(2, 2), (3, 2)])
def test_bose_canonical_commutator(M, N):
    up, mid, lo = BoseFockBasis(M, N + 1), BoseFockBasis(M, N), BoseFockBasis(M, N - 1)
    for i in range(M):
        for j in range(M):
            a_i_up = up.annihilator(i, mid)  # N+1 -> N
            a_j_up = up.annihilator(j, mid)
            a_i = mid.annihilator(i, lo)  # N -> N-1
            a_j = mid.annihilator(j, lo)
            comm = (a_i_up @ a_j_up.conj().T - a_j.conj().T @ a_i).toarray()
            assert np.abs(comm - np.eye(len(mid)) * (i == j)).max() < 1e-12


def test_fermion_number_conservation_full_space():
    M = 2
    full = FermiFockBasis.full(M)
    n_up = sum(full.matrix(fermi.number(fermi.mode(0, l, M))) for l in range(M))
    n_dn = sum(full.matrix(fermi.number(fermi.mode(1, l, M))) for l in range(M))
    for fam in fermi.jump_families(M).values():
        for e in fam:
            c = full.matrix(e)
            for n_op in (n_up, n_dn):
                assert abs(c @ n_op - n_op @ c).max() < 1e-12


def test_fermion_anticommutation_m4():
    M = 4
    full = FermiFockBasis.full(M)
    f = [full.matrix(fermi.ann(m)) for m in range(2 * M)]
    eye = sp.identity(4 ** M, format="csr")
    for a in range(2 * M):
        for b in range(2 * M):
            ac = f[a] @ f[b].conj().T + f[b].conj().T @ f[a]
            assert abs(ac - eye * (a == b)).max() < 1e-12


def test_aklt_bond_is_rotation_invariant():
    h = aklt.bond_hamiltonian()
    for s in (aklt.SX, aklt.SY, aklt.SZ):
        tot = np.kron(s, np.eye(3)) + np.kron(np.eye(3), s)
        assert np.abs(h @ tot - tot @ h).max() < 1e-10


def test_lattice_targets_annihilated():
    for model in (bec_process(3, 2), bec_process(3, 3), eta_process(4, 2)):
        for c in model.process.jumps:
            assert np.linalg.norm(c @ model.target) < 1e-10
    from markovprep.lattice import aklt_ground_space

    spec = SpinChainSpec(3)
    g = aklt_ground_space(spec)[:, 0]
    for c in aklt_process(spec, "twirl").jumps:
        assert np.linalg.norm(c @ g) < 1e-10
