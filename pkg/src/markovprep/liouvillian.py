"""Lindblad generators as superoperators: assembly, action, spectrum, kernel.

The generator is

    L(rho) = -i[H, rho] + sum_l g_l (2 c_l rho c_l^+ - c_l^+ c_l rho - rho c_l^+ c_l)

and density matrices are vectorized column-major, so that
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence, TextIO

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.cluster.hierarchy import fcluster, linkage

from .operators import (
    DEFAULT_TOL,
    DimensionError,
    QuasiLocalOperator,
    embed,
    is_hermitian,
    to_dense,
    write_matrix,
)

# largest Hilbert-space dimension for which a dense superoperator is built
SUPEROP_DENSE_MAX_DIM = 64
# auto mode switches to sparse storage above this dimension
SUPEROP_AUTO_DENSE_DIM = 32
CLUSTER_RADIUS = 1e-8
KERNEL_RTOL = 1e-10
AMBIGUITY_BAND = (1e-12, 1e-8)


class SpectrumError(RuntimeError):
    """An eigensolver failed to converge; carries the residuals it reached."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class KernelRankWarning(UserWarning):
    """A singular value fell inside the rank-decision ambiguity band."""


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class LindbladProcess:
    """Hamiltonian plus weighted jump operators on one Hilbert space.

    ``space`` is anything with a ``total_dim`` attribute: a
    :class:`~markovprep.operators.CompositeSpace` or a Fock-sector basis.
    Jumps may be dense arrays, sparse matrices or quasi-local operators.
    """

    space: object
    jumps: tuple = ()
    rates: tuple[float, ...] = ()
    hamiltonian: object = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        D = self.dim
        jumps = tuple(self._matrix(c) for c in self.jumps)
        rates = tuple(float(g) for g in self.rates) if self.rates else (1.0,) * len(jumps)
        if len(rates) != len(jumps):
            raise ValueError(f"{len(jumps)} jumps but {len(rates)} rates")
        if any(g < 0 for g in rates):
            raise ValueError(f"rates must be nonnegative, got {rates}")
        for c in jumps:
            if c.shape != (D, D):
                raise DimensionError(f"jump of shape {c.shape} on a space of dimension {D}")
        H = self.hamiltonian
        if H is not None:
            H = self._matrix(H)
            if H.shape != (D, D):
                raise DimensionError(f"hamiltonian of shape {H.shape} on dimension {D}")
            if not is_hermitian(H, self.tol):
                raise ValueError("hamiltonian is not hermitian")
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "hamiltonian", H)

    def _matrix(self, op):
        if isinstance(op, QuasiLocalOperator):
            return embed(op)
        if sp.issparse(op):
            return op.tocsr().astype(complex)
        return np.asarray(op, dtype=complex)

    @property
    def dim(self) -> int:
        return int(self.space.total_dim)

    def dissipator_weight(self) -> np.ndarray:
        """P = sum_l g_l c_l^+ c_l."""
        P = np.zeros((self.dim, self.dim), dtype=complex)
        for g, c in zip(self.rates, self.jumps):
            P += g * to_dense(c.conj().T @ c)
        return P

    def effective_operator(self) -> np.ndarray:
        """Q = P - iH."""
        Q = self.dissipator_weight()
        if self.hamiltonian is not None:
            Q = Q - 1j * to_dense(self.hamiltonian)
        return Q

    def conjugated(self, U) -> "LindbladProcess":
        U = to_dense(U)
        Ud = U.conj().T
        H = None if self.hamiltonian is None else U @ to_dense(self.hamiltonian) @ Ud
        return LindbladProcess(self.space, tuple(U @ to_dense(c) @ Ud for c in self.jumps),
                               self.rates, H, self.tol)

    def with_rates(self, rates: Sequence[float]) -> "LindbladProcess":
        return LindbladProcess(self.space, self.jumps, tuple(rates), self.hamiltonian, self.tol)


@dataclass(frozen=True)
class Superoperator:
    matrix: object  # dense ndarray or CSR, shape (D^2, D^2)
    dim: int

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def apply(self, sigma) -> np.ndarray:
        return unvec(self.matrix @ vec(sigma), self.dim)

    def dense(self) -> np.ndarray:
        return to_dense(self.matrix)

    def scale(self) -> float:
        m = self.matrix
        s = abs(m).max() if sp.issparse(m) else np.abs(m).max()
        return float(s) if s > 0 else 1.0


def build_superoperator(process: LindbladProcess, sparse: bool | None = None) -> Superoperator:
    """Matrix of the generator acting on column-major vectorized density matrices."""
    D = process.dim
    if sparse is None:
        sparse = D > SUPEROP_AUTO_DENSE_DIM
    if not sparse and D > SUPEROP_DENSE_MAX_DIM:
        raise DimensionError(
            f"dense superoperator requested for D={D} (limit {SUPEROP_DENSE_MAX_DIM})"
        )
    if sparse:
        eye = sp.identity(D, dtype=complex, format="csr")
        kr = lambda a, b: sp.kron(a, b, format="csr")
        conv = lambda a: sp.csr_matrix(a)
        M = sp.csr_matrix((D * D, D * D), dtype=complex)
    else:
        eye = np.eye(D, dtype=complex)
        kr = np.kron
        conv = to_dense
        M = np.zeros((D * D, D * D), dtype=complex)
    if process.hamiltonian is not None:
        H = conv(process.hamiltonian)
        M = M - 1j * (kr(eye, H) - kr(H.T, eye))
    for g, c in zip(process.rates, process.jumps):
        if g == 0:
            continue
        c = conv(c)
        cdc = c.conj().T @ c
        M = M + g * (2 * kr(c.conj(), c) - kr(eye, cdc) - kr(cdc.T, eye))
    if sparse:
        M = sp.csr_matrix(M)
        M.eliminate_zeros()
    return Superoperator(M, D)


def apply_generator(process: LindbladProcess, sigma) -> np.ndarray:
    """L(sigma) from direct matrix products, without forming the superoperator."""
    sigma = np.asarray(sigma, dtype=complex)
    D = process.dim
    if sigma.shape != (D, D):
        raise DimensionError(f"sigma has shape {sigma.shape}, expected {(D, D)}")
    out = np.zeros((D, D), dtype=complex)
    if process.hamiltonian is not None:
        H = process.hamiltonian
        out += -1j * (H @ sigma - (H.T @ sigma.T).T)
    for g, c in zip(process.rates, process.jumps):
        if g == 0:
            continue
        cd = c.conj().T
        c_sigma = c @ sigma
        cdc_sigma = cd @ c_sigma
        # right multiplications done as transposed left ones so sparse c stays on the left
        sigma_cd = (c.conj() @ sigma.T).T
        sigma_cdc = (c.T @ (cd.T @ sigma.T)).T
        out += g * (2 * (c @ sigma_cd) - cdc_sigma - sigma_cdc)
    return np.asarray(out)


# -- spectrum -----------------------------------------------------------------

@dataclass
class SpectrumReport:
    """Clustered eigenvalues plus kernel information.

    ``clusters`` holds (value, multiplicity) pairs sorted by descending real
    part, ties broken by ascending imaginary part.
    """

    values: np.ndarray
    clusters: list[tuple[complex, int]]
    kernel_dim: int
    kernel_basis: list[np.ndarray] = field(default_factory=list)
    gap: float | None = None
    mode: str = "full"
    imaginary_violations: list[complex] = field(default_factory=list)
    residuals: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def relaxation_time(self) -> float | None:
        return None if self.gap is None else 1.0 / self.gap

    def multiset(self) -> list[complex]:
        return sorted_eigenvalues(self.values)


def sorted_eigenvalues(values) -> list[complex]:
    vals = [complex(v) for v in values]
    return sorted(vals, key=lambda z: (-z.real, z.imag))


def cluster_eigenvalues(values, radius: float) -> list[tuple[complex, int]]:
    """Single-linkage clustering of eigenvalues in the complex plane."""
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return []
    if values.size == 1:
        return [(complex(values[0]), 1)]
    pts = np.column_stack([values.real, values.imag])
    labels = fcluster(linkage(pts, method="single"), t=radius, criterion="distance")
    out = []
    for lab in np.unique(labels):
        members = values[labels == lab]
        out.append((complex(members.mean()), int(members.size)))
    out.sort(key=lambda vm: (-vm[0].real, vm[0].imag))
    return out


def hermitian_basis_transform(D: int) -> sp.csr_matrix:
    """Unitary whose columns are vec'd orthonormal hermitian matrices.

    In this basis any hermiticity-preserving superoperator is a real matrix,
    so its eigenvalues come out in exact conjugate pairs.
    """
    rows, cols, data = [], [], []
    col = 0
    s = 1 / np.sqrt(2)
    for j in range(D):
        rows.append(j + j * D); cols.append(col); data.append(1.0)
        col += 1
    for j in range(D):
        for k in range(j + 1, D):
            # (E_jk + E_kj)/sqrt2 and i(E_jk - E_kj)/sqrt2, column-major index r + c*D
            rows += [j + k * D, k + j * D]; cols += [col, col]; data += [s, s]
            col += 1
            rows += [j + k * D, k + j * D]; cols += [col, col]; data += [1j * s, -1j * s]
            col += 1
    return sp.csr_matrix((data, (rows, cols)), shape=(D * D, D * D), dtype=complex)


def real_form(superop: Superoperator) -> np.ndarray:
    """The superoperator in the hermitian basis; real for Lindblad generators."""
    T = hermitian_basis_transform(superop.dim)
    M = superop.matrix
    R = T.conj().T @ (M @ T)
    R = to_dense(R)
    if np.abs(R.imag).max() > 1e-9 * max(superop.scale(), 1.0):
        raise ValueError("superoperator does not preserve hermiticity")
    return np.ascontiguousarray(R.real)


def spectrum(superop: Superoperator, mode: Literal["full", "gap"] = "full",
             tol: float = CLUSTER_RADIUS, n_eigs: int = 12,
             with_kernel: bool = True) -> SpectrumReport:
    """Eigenvalues, kernel and spectral gap of a Liouvillian.

    ``full`` diagonalizes the dense real form (D <= 64). ``gap`` runs
    shift-invert Arnoldi just to the right of zero and returns the
    ``n_eigs`` eigenvalues nearest the origin; the kernel cluster is
    filtered out before the gap is taken.
    """
    scale = superop.scale()
    if mode == "full":
        if superop.dim > SUPEROP_DENSE_MAX_DIM:
            raise DimensionError(f"full spectrum needs D <= {SUPEROP_DENSE_MAX_DIM}")
        values = la.eigvals(real_form(superop))
        residuals = None
    elif mode in ("gap", "gap-only"):
        values, vecs, residuals = _shift_invert(superop, n_eigs, tol)
        mode = "gap"
    else:
        raise ValueError(f"unknown spectrum mode {mode!r}")

    kernel_tol = tol * scale
    clusters = cluster_eigenvalues(values / scale, tol)
    clusters = [(v * scale, m) for v, m in clusters]
    kernel_dim = sum(m for v, m in clusters if abs(v) <= kernel_tol)
    violations = [v for v, m in clusters if abs(v.real) <= kernel_tol and abs(v.imag) > kernel_tol]
    decaying = [-v.real for v, m in clusters if abs(v.real) > kernel_tol]
    gap = min(decaying) if decaying else None
    report = SpectrumReport(values=np.asarray(values), clusters=clusters, kernel_dim=kernel_dim,
                            gap=gap, mode=mode, imaginary_violations=violations,
                            residuals=residuals)
    if with_kernel:
        if mode == "full":
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", KernelRankWarning)
                report.kernel_basis = stationary_space(superop)
            report.warnings = [str(w.message) for w in caught]
            for msg in report.warnings:
                warnings.warn(msg, KernelRankWarning, stacklevel=2)
        else:
            kernel = [vecs[:, i] for i in range(len(values)) if abs(values[i]) <= kernel_tol]
            report.kernel_basis = _finish_kernel(np.column_stack(kernel) if kernel else None,
                                                 superop.dim)
    return report


def _shift_invert(superop: Superoperator, n_eigs: int, tol: float):
    M = sp.csc_matrix(superop.matrix)
    N = M.shape[0]
    scale = superop.scale()
    # every Liouvillian eigenvalue has Re <= 0, so a small positive shift is
    # never an eigenvalue and the kernel maps to the dominant Ritz values
    sigma = 1e-3 * scale
    k = min(n_eigs, N - 2)
    # minimum-degree ordering on A^T + A gives about half the fill of COLAMD
    # on Liouvillians of local jump processes
    lu = spla.splu(M - sigma * sp.identity(N, format="csc"), permc_spec="MMD_AT_PLUS_A")
    op_inv = spla.LinearOperator((N, N), matvec=lu.solve, dtype=complex)
    while True:
        try:
            vals, vecs = spla.eigs(M, k=k, sigma=sigma, which="LM", tol=1e-13, OPinv=op_inv,
                                   maxiter=max(1000, 20 * N))
        except spla.ArpackNoConvergence as exc:
            res = [np.linalg.norm(M @ exc.eigenvectors[:, i] - exc.eigenvalues[i] * exc.eigenvectors[:, i])
                   for i in range(len(exc.eigenvalues))]
            raise SpectrumError(f"shift-invert Arnoldi did not converge (k={k})", res) from exc
        kernel = np.abs(vals) <= tol * scale
        if kernel.all() and k < N - 2:
            k = min(2 * k, N - 2)
            continue
        break
    residuals = np.array([np.linalg.norm(M @ vecs[:, i] - vals[i] * vecs[:, i])
                          for i in range(len(vals))])
    bad = residuals > 1e-6 * scale
    if bad.any():
        raise SpectrumError("shift-invert Arnoldi returned inaccurate eigenpairs", residuals)
    order = np.lexsort((vals.imag, -vals.real))
    return vals[order], vecs[:, order], residuals[order]


def stationary_space(superop: Superoperator, rtol: float = KERNEL_RTOL,
                     n_eigs: int = 12) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of ker L, as D x D matrices.

    Dense superoperators go through an SVD with relative cut ``rtol``;
    sparse ones through shift-invert Arnoldi. A one-dimensional kernel is
    returned as a density matrix.
    """
    D = superop.dim
    if superop.is_sparse:
        vals, vecs, _ = _shift_invert(superop, n_eigs, CLUSTER_RADIUS)
        keep = np.abs(vals) <= CLUSTER_RADIUS * superop.scale()
        return _finish_kernel(vecs[:, keep] if keep.any() else None, D)
    M = superop.dense()
    u, s, vh = la.svd(M)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    rel = s / smax
    lo, hi = AMBIGUITY_BAND
    for r in rel:
        if lo <= r <= hi:
            warnings.warn(f"singular value {r:.3e} (relative) inside ambiguity band "
                          f"[{lo:g}, {hi:g}]; kernel rank decision is fragile",
                          KernelRankWarning, stacklevel=2)
    null = vh[rel <= rtol].conj().T if s[0] > 0 else np.eye(D * D, dtype=complex)
    return _finish_kernel(null if null.shape[1] else None, D)


def _finish_kernel(null, D) -> list[np.ndarray]:
    if null is None:
        return []
    q, _ = np.linalg.qr(null)
    mats = [unvec(q[:, i], D) for i in range(q.shape[1])]
    if len(mats) == 1:
        return [to_density_matrix(mats[0])]
    return mats


def to_density_matrix(m) -> np.ndarray:
    """Rescale a stationary operator to unit trace and take its hermitian part."""
    m = np.asarray(m, dtype=complex)
    tr = np.trace(m)
    if abs(tr) < 1e-14:
        # traceless kernel element: fall back to the phase of the largest entry
        idx = np.unravel_index(np.argmax(np.abs(m)), m.shape)
        m = m * np.exp(-1j * np.angle(m[idx]))
        return (m + m.conj().T) / 2
    m = m / tr
    return (m + m.conj().T) / 2


def relaxation_time(report: SpectrumReport) -> float:
    if report.gap is None:
        raise ValueError("spectrum has no nonzero eigenvalue; relaxation time undefined")
    return 1.0 / report.gap


def kernel_overlap(basis: Sequence[np.ndarray], target) -> float:
    """Norm of the projection of ``target`` (normalized in HS) onto span(basis)."""
    target = np.asarray(target, dtype=complex)
    t = vec(target) / np.linalg.norm(target)
    if not basis:
        return 0.0
    B = np.column_stack([vec(b) for b in basis])
    q, _ = np.linalg.qr(B)
    return float(np.linalg.norm(q.conj().T @ t))


def check_vectorization(dim: int, rng: np.random.Generator) -> float:
    """Max deviation of vec(A X B) from (B^T kron A) vec(X) on random inputs."""
    a, x, b = (rng.standard_normal((3, dim, dim)) + 1j * rng.standard_normal((3, dim, dim)))
    return float(np.abs(vec(a @ x @ b) - np.kron(b.T, a) @ vec(x)).max())


# -- CSV output ---------------------------------------------------------------

def _num(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0
    return repr(x)


def write_spectrum_csv(report: SpectrumReport, stream: TextIO) -> None:
    stream.write("re,im,multiplicity\n")
    for v, m in report.clusters:
        stream.write(f"{_num(v.real)},{_num(v.imag)},{m}\n")


def write_kernel_states(report: SpectrumReport, stream: TextIO) -> None:
    for i, k in enumerate(report.kernel_basis):
        stream.write(f"# kernel state {i}\n")
        write_matrix(k, stream, tol=1e-15)
