"""Stationarity checks for pure states and uniqueness certificates.

Three certificates are layered. The Liouvillian kernel dimension is
authoritative wherever the superoperator fits in memory. Krylov
reachability of the whole space from the target under the adjoint jumps
is sufficient for uniqueness at any size. The invariant-subspace probe
searches for a refutation: a subspace orthogonal to the dark states that
the dynamics cannot leave.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .liouvillian import (
    LindbladProcess,
    apply_generator,
    build_superoperator,
    stationary_space,
)
from .operators import DEFAULT_TOL, QuasiLocalOperator, embed, projector, to_dense


@dataclass
class Theorem1Verdict:
    stationary: bool
    lam: complex | None
    lambdas: list[complex | None]
    eigen_residual: float
    jump_residuals: list[float]
    balance_residual: float
    generator_residual: float

    @property
    def consistent(self) -> bool:
        """Whether the verdict agrees with the direct generator evaluation."""
        return self.stationary == (self.generator_residual < 1e-9)


@dataclass
class UniquenessCertificate:
    method: str  # kernel-dimension | krylov-reachability | invariant-probe
    verdict: str  # unique | not-unique | inconclusive
    evidence: dict = field(default_factory=dict)
    witness: np.ndarray | None = None

    def report(self) -> str:
        lines = [f"method: {self.method}", f"verdict: {self.verdict}"]
        for k, v in self.evidence.items():
            lines.append(f"{k}: {v}")
        return "\n".join(lines) + "\n"


def _mat(op):
    if isinstance(op, QuasiLocalOperator):
        return embed(op)
    return op if sp.issparse(op) else np.asarray(op, dtype=complex)


def check_theorem1(process: LindbladProcess, phi, tol: float = 1e-9) -> Theorem1Verdict:
    """Test whether |phi><phi| is stationary via the eigenvector conditions.

    (1) Q^+ phi = lam phi with Q = sum g c^+ c - iH; (2) c_l phi = lam_l phi
    for every jump, with sum g |lam_l|^2 = Re lam.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    phi = phi / np.linalg.norm(phi)
    Qd = process.effective_operator().conj().T
    chi = Qd @ phi
    lam = complex(np.vdot(phi, chi))
    eigen_res = float(np.linalg.norm(chi - lam * phi))
    lambdas, jump_res = [], []
    for c in process.jumps:
        v = np.asarray(c @ phi).ravel()
        lam_l = complex(np.vdot(phi, v))
        lambdas.append(lam_l)
        jump_res.append(float(np.linalg.norm(v - lam_l * phi)))
    balance = abs(sum(g * abs(l) ** 2 for g, l in zip(process.rates, lambdas)) - lam.real)
    gen_res = float(np.linalg.norm(apply_generator(process, projector(phi))))
    ok = eigen_res < tol and all(r < tol for r in jump_res) and balance < tol
    return Theorem1Verdict(
        stationary=bool(ok),
        lam=lam if eigen_res < tol else None,
        lambdas=[l if r < tol else None for l, r in zip(lambdas, jump_res)],
        eigen_residual=eigen_res,
        jump_residuals=jump_res,
        balance_residual=float(balance),
        generator_residual=gen_res,
    )


def null_space(A, rtol: float = DEFAULT_TOL) -> np.ndarray:
    A = to_dense(A)
    if A.shape[0] == 0:
        return np.eye(A.shape[1], dtype=complex)
    return la.null_space(A, rcond=rtol)


@dataclass
class DarkSpace:
    """Common kernel of the jumps, split by Hamiltonian eigenvalue."""

    basis: np.ndarray  # D x k, orthonormal columns
    energies: list[float]
    groups: list[np.ndarray]
    is_subspace: bool

    def __len__(self):
        return self.basis.shape[1]

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.basis[:, i] for i in range(self.basis.shape[1])]


def dark_space(process: LindbladProcess, tol: float = DEFAULT_TOL) -> DarkSpace:
    """Orthonormal basis of the states annihilated by every jump.

    With a Hamiltonian present, only those dark vectors that are also
    energy eigenstates are kept; if they belong to more than one energy,
    ``is_subspace`` is False and the groups are reported separately.
    """
    D = process.dim
    if process.jumps:
        stacked = sp.vstack([sp.csr_matrix(c) for c in process.jumps]).toarray()
        K = null_space(stacked, tol)
    else:
        K = np.eye(D, dtype=complex)
    H = process.hamiltonian
    if H is None or K.shape[1] == 0:
        return DarkSpace(K, [0.0] if K.shape[1] else [], [K] if K.shape[1] else [], True)
    H = to_dense(H)
    h = K.conj().T @ H @ K
    e, w = np.linalg.eigh((h + h.conj().T) / 2)
    cand = K @ w
    keep = [i for i in range(len(e))
            if np.linalg.norm(H @ cand[:, i] - e[i] * cand[:, i]) < np.sqrt(tol)]
    groups, energies = [], []
    for i in keep:
        for gi, en in enumerate(energies):
            if abs(en - e[i]) < np.sqrt(tol):
                groups[gi] = np.column_stack([groups[gi], cand[:, i]])
                break
        else:
            energies.append(float(e[i]))
            groups.append(cand[:, [i]])
    basis = np.column_stack(groups) if groups else np.zeros((D, 0), dtype=complex)
    return DarkSpace(basis, energies, groups, len(groups) <= 1)


def krylov_closure(ops: Sequence, start: np.ndarray, max_degree: int,
                   tol: float = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    """Orthonormal basis of span{P(ops) v : v in start, P monomial of degree <= max_degree}.

    Returns the basis and the degree at which the span stopped growing
    (or the budget ran out).
    """
    start = np.asarray(start, dtype=complex)
    if start.ndim == 1:
        start = start[:, None]
    D = start.shape[0]
    Q = np.zeros((D, 0), dtype=complex)
    Q, frontier = _extend(Q, start, tol)
    degree = 0
    while frontier.shape[1] and Q.shape[1] < D and degree < max_degree:
        new = np.column_stack([np.asarray(op @ frontier) for op in ops]) if ops else np.zeros((D, 0))
        Q, frontier = _extend(Q, new, tol)
        degree += 1
    return Q, degree


def _extend(Q, cand, tol):
    # two rounds of classical Gram-Schmidt against Q, then rank-revealing QR
    if cand.shape[1] == 0:
        return Q, cand
    for _ in range(2):
        cand = cand - Q @ (Q.conj().T @ cand)
    norms = np.linalg.norm(cand, axis=0)
    cand = cand[:, norms > tol]
    if cand.shape[1] == 0:
        return Q, cand
    q, r, _ = la.qr(cand, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int((diag > tol * max(diag[0], 1.0)).sum())
    q = q[:, :rank]
    q = q - Q @ (Q.conj().T @ q)
    q, _ = np.linalg.qr(q)
    return np.column_stack([Q, q]), q


def krylov_reachability(jumps: Sequence, psi, max_degree: int | None = None,
                        tol: float = DEFAULT_TOL) -> UniquenessCertificate:
    """Certify uniqueness when monomials of the adjoint jumps map psi onto a spanning set.

    Only "unique" or "inconclusive" are ever returned: reaching the whole
    space is sufficient, stalling proves nothing.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    D = psi.size
    max_degree = 4 * D if max_degree is None else max_degree
    adj = [_mat(c).conj().T for c in jumps]
    Q, degree = krylov_closure(adj, psi, max_degree, tol)
    reached = Q.shape[1]
    verdict = "unique" if reached == D else "inconclusive"
    return UniquenessCertificate("krylov-reachability", verdict,
                                 {"total_dim": D, "reached_dim": reached, "degree": degree})


def invariant_subspace_probe(jumps: Sequence, dark, trials: int = 20, seed: int = 0,
                             hamiltonian=None, rates: Sequence[float] | None = None,
                             dim: int | None = None, tol: float = 1e-9) -> UniquenessCertificate:
    """Search for a subspace S orthogonal to the dark states with c_l S in S.

    The largest such S is the orthogonal complement of the closure of the
    dark span under the adjoint jumps. A witness is only reported when S is
    also invariant under Q = P + iH: then the dynamics restricted to S is a
    trace-preserving semigroup of its own, so it has a stationary state that
    is not dark. Random vectors of S seed cyclic subspaces, and the smallest
    witness found over ``trials`` seeded draws is returned.
    """
    mats = [_mat(c) for c in jumps]
    if isinstance(dark, DarkSpace):
        dark = dark.basis
    elif isinstance(dark, (list, tuple)):
        dark = np.column_stack(dark) if len(dark) else np.zeros((0, 0))
    dark = np.asarray(dark, dtype=complex)
    if dark.ndim == 1:
        dark = dark[:, None] if dark.size else dark.reshape(0, 0)
    D = mats[0].shape[0] if mats else (dark.shape[0] if dark.size else dim)
    if D is None:
        raise ValueError("pass dim when both the jump list and the dark set are empty")
    if dark.size == 0:
        dark = np.zeros((D, 0), dtype=complex)
    rates = [1.0] * len(mats) if rates is None else list(rates)
    Qeff = np.zeros((D, D), dtype=complex)
    for g, c in zip(rates, mats):
        Qeff += g * to_dense(c.conj().T @ c)
    if hamiltonian is not None:
        Qeff += 1j * to_dense(hamiltonian)
    ops = mats + [Qeff]
    adj = [to_dense(o).conj().T if not sp.issparse(o) else o.conj().T for o in ops]

    # largest subspaces inside dark^perp invariant under the jumps alone and
    # under jumps plus Q: orthogonal complements of the adjoint closures
    if dark.shape[1]:
        K_c, _ = krylov_closure(adj[:-1], dark, 4 * D, 1e-10)
        K_all, _ = krylov_closure(adj, dark, 4 * D, 1e-10)
        s_jumps = D - K_c.shape[1]
        S = null_space(K_all.conj().T)
    else:
        s_jumps = D
        S = np.eye(D, dtype=complex)
    evidence = {"total_dim": D, "dark_dim": dark.shape[1],
                "jump_invariant_dim": s_jumps, "enclosure_dim": S.shape[1],
                "trials": trials, "seed": seed}
    if S.shape[1] == 0:
        return UniquenessCertificate("invariant-probe", "inconclusive", evidence)

    rng = np.random.default_rng(seed)
    best = S
    for _ in range(trials):
        v = S @ (rng.standard_normal(S.shape[1]) + 1j * rng.standard_normal(S.shape[1]))
        W, _ = krylov_closure(ops, v, 4 * D, 1e-10)
        if W.shape[1] < best.shape[1]:
            best = W
    resid = 0.0
    for o in ops:
        image = np.asarray(o @ best)
        resid = max(resid, float(np.linalg.norm(image - best @ (best.conj().T @ image))))
    overlap = float(np.linalg.norm(dark.conj().T @ best)) if dark.shape[1] else 0.0
    evidence.update({"witness_dim": best.shape[1], "invariance_residual": resid,
                     "dark_overlap": overlap})
    if resid < tol and overlap < tol:
        return UniquenessCertificate("invariant-probe", "not-unique", evidence, witness=best)
    return UniquenessCertificate("invariant-probe", "inconclusive", evidence)


def kernel_certificate(process: LindbladProcess, sparse: bool | None = None) -> UniquenessCertificate:
    """Authoritative small-system verdict from the Liouvillian kernel dimension."""
    kernel = stationary_space(build_superoperator(process, sparse=sparse))
    k = len(kernel)
    verdict = "unique" if k == 1 else ("not-unique" if k > 1 else "inconclusive")
    return UniquenessCertificate("kernel-dimension", verdict,
                                 {"total_dim": process.dim, "kernel_dim": k})
