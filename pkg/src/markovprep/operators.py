"""Operator algebra on tensor-product Hilbert spaces.

Site 0 is the most significant tensor factor, so the basis index of
``|i_0 i_1 ... i_{n-1}>`` is the base-d numeral ``i_0 i_1 ... i_{n-1}``.
Operators are plain numpy arrays (or scipy sparse matrices once the
dimension exceeds :data:`DENSE_MAX_DIM`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

DEFAULT_TOL = 1e-10

# above this total dimension embedded operators are returned in CSR form
DENSE_MAX_DIM = 256


class DimensionError(ValueError):
    """Raised when operator shapes or site lists do not fit a space."""


@dataclass(frozen=True)
class CompositeSpace:
    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims:
            raise DimensionError("a composite space needs at least one site")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "CompositeSpace":
        return cls((2,) * n)

    @classmethod
    def uniform(cls, n: int, d: int) -> "CompositeSpace":
        return cls((d,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.local_dims))

    def concat(self, other: "CompositeSpace") -> "CompositeSpace":
        return CompositeSpace(self.local_dims + other.local_dims)

    def check_sites(self, sites: Sequence[int]) -> tuple[int, ...]:
        sites = tuple(int(s) for s in sites)
        if not sites:
            raise DimensionError("site list is empty")
        for s in sites:
            if not 0 <= s < self.n_sites:
                raise DimensionError(f"site {s} out of range for {self.n_sites} sites")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise DimensionError(f"sites must be distinct and ascending, got {sites}")
        return sites


@dataclass(frozen=True)
class QuasiLocalOperator:
    """An operator given by its matrix on a few sites, identity elsewhere."""

    local_matrix: np.ndarray
    sites: tuple[int, ...]
    space: CompositeSpace = field(repr=False)

    def __post_init__(self):
        sites = self.space.check_sites(self.sites)
        object.__setattr__(self, "sites", sites)
        mat = np.asarray(self.local_matrix, dtype=complex)
        d = int(np.prod([self.space.local_dims[s] for s in sites]))
        if mat.shape != (d, d):
            raise DimensionError(
                f"local matrix has shape {mat.shape}, sites {sites} need {(d, d)}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "local_matrix", mat)

    def full(self, sparse: bool | None = None):
        return embed(self, sparse=sparse)

    def dagger(self) -> "QuasiLocalOperator":
        return QuasiLocalOperator(self.local_matrix.conj().T, self.sites, self.space)


# -- standard local operators -------------------------------------------------

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def spin_matrices(s: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-s matrices (Sx, Sy, Sz) in the basis m = s, s-1, ..., -s."""
    dim = int(round(2 * s + 1))
    m = s - np.arange(dim)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def ladder(d: int) -> np.ndarray:
    """Finite-dimensional lowering matrix sum_j |j-1><j| (unit prefactors)."""
    return np.diag(np.ones(d - 1, dtype=complex), 1)


def basis_state(index: int | Sequence[int], space: CompositeSpace) -> np.ndarray:
    """Computational basis ket, given a flat index or per-site digits."""
    if not isinstance(index, (int, np.integer)):
        index = int(np.ravel_multi_index(tuple(index), space.local_dims))
    v = np.zeros(space.total_dim, dtype=complex)
    v[index] = 1.0
    return v


def dagger(op):
    return op.conj().T


def is_sparse(op) -> bool:
    return sp.issparse(op)


def to_dense(op) -> np.ndarray:
    return op.toarray() if sp.issparse(op) else np.asarray(op)


# -- core operations ----------------------------------------------------------

def kron(*ops):
    """Kronecker product of any number of operators, left factor most significant.

    Sparse inputs give a CSR result; otherwise a dense array.
    """
    if not ops:
        raise ValueError("kron needs at least one operand")
    if any(sp.issparse(o) for o in ops):
        return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)
    return reduce(np.kron, [np.asarray(o) for o in ops])


def embed(local: QuasiLocalOperator, sparse: bool | None = None):
    """Full-space matrix of ``local`` (identity on every other site).

    ``sparse=None`` picks CSR storage when the total dimension exceeds
    :data:`DENSE_MAX_DIM`.
    """
    space = local.space
    if sparse is None:
        sparse = space.total_dim > DENSE_MAX_DIM
    sites = local.sites
    dims = space.local_dims
    if sparse:
        return _embed_sparse(local.local_matrix, sites, dims)
    n = len(dims)
    k = len(sites)
    rest = [s for s in range(n) if s not in sites]
    d_rest = int(np.prod([dims[s] for s in rest])) if rest else 1
    # operator on (sites..., rest...) ordering, then permute axes to natural order
    big = np.kron(local.local_matrix, np.eye(d_rest, dtype=complex))
    order = list(sites) + rest
    shape = [dims[s] for s in order]
    t = big.reshape(shape + shape)
    perm = np.argsort(order)
    t = t.transpose(list(perm) + [n + p for p in perm])
    D = space.total_dim
    return np.ascontiguousarray(t.reshape(D, D))


def _embed_sparse(mat, sites, dims):
    # only contiguous blocks are cheap with sp.kron; general site sets go
    # through index arithmetic on the nonzero pattern of mat
    n = len(dims)
    D = int(np.prod(dims))
    coo = sp.coo_matrix(mat)
    rest = [s for s in range(n) if s not in sites]
    strides = np.array([int(np.prod(dims[s + 1:])) for s in range(n)], dtype=np.int64)
    site_dims = [dims[s] for s in sites]
    rest_dims = [dims[s] for s in rest]
    d_rest = int(np.prod(rest_dims)) if rest else 1

    def offsets(local_idx):
        digits = np.array(np.unravel_index(local_idx, site_dims))
        return (strides[list(sites)][:, None] * digits).sum(axis=0)

    row_off = offsets(coo.row)
    col_off = offsets(coo.col)
    if rest:
        rd = np.array(np.unravel_index(np.arange(d_rest), rest_dims))
        rest_off = (strides[rest][:, None] * rd).sum(axis=0)
    else:
        rest_off = np.zeros(1, dtype=np.int64)
    rows = (row_off[:, None] + rest_off[None, :]).ravel()
    cols = (col_off[:, None] + rest_off[None, :]).ravel()
    data = np.repeat(coo.data, len(rest_off))
    return sp.csr_matrix((data, (rows, cols)), shape=(D, D))


def partial_trace(rho, space: CompositeSpace, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the ascending site list ``keep``."""
    keep = space.check_sites(sorted(set(keep)))
    rho = to_dense(rho)
    D = space.total_dim
    if rho.shape != (D, D):
        raise DimensionError(f"density matrix shape {rho.shape} does not match D={D}")
    n = space.n_sites
    dims = space.local_dims
    t = rho.reshape(dims + dims)
    traced = [s for s in range(n) if s not in keep]
    # trace out from the highest site down so axis numbers stay valid
    for count, s in enumerate(sorted(traced, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=s, axis2=s + m)
    d_keep = int(np.prod([dims[s] for s in keep]))
    return t.reshape(d_keep, d_keep)


def acts_trivially_on(op, space: CompositeSpace, site: int, tol: float = DEFAULT_TOL) -> bool:
    """True if ``op`` factorizes as identity on ``site`` times something else."""
    op = to_dense(op)
    dims = space.local_dims
    d = dims[site]
    rest = space.total_dim // d
    perm = [site] + [s for s in range(space.n_sites) if s != site]
    n = space.n_sites
    t = op.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    t = t.reshape(d, rest, d, rest)
    reduced = np.einsum("arab->rb", t) / d
    ideal = np.einsum("ab,rs->arbs", np.eye(d), reduced)
    scale = max(np.abs(op).max(), 1.0)
    return bool(np.abs(t - ideal).max() <= tol * scale)


def support(op, space: CompositeSpace, tol: float = DEFAULT_TOL) -> tuple[int, ...]:
    """Sites on which ``op`` acts non-trivially."""
    return tuple(s for s in range(space.n_sites) if not acts_trivially_on(op, space, s, tol))


def restrict(op, space: CompositeSpace, sites: Sequence[int] | None = None,
             tol: float = DEFAULT_TOL) -> QuasiLocalOperator:
    """Inverse of :func:`embed`: recover the local matrix on ``sites``.

    When ``sites`` is omitted the detected support is used. Raises if the
    operator does not act as identity outside ``sites``.
    """
    op = to_dense(op)
    if sites is None:
        sites = support(op, space, tol) or (0,)
    sites = space.check_sites(sites)
    n = space.n_sites
    dims = space.local_dims
    rest = [s for s in range(n) if s not in sites]
    d_loc = int(np.prod([dims[s] for s in sites]))
    d_rest = space.total_dim // d_loc
    perm = list(sites) + rest
    t = op.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    t = t.reshape(d_loc, d_rest, d_loc, d_rest)
    local = np.einsum("arbr->ab", t) / d_rest
    out = QuasiLocalOperator(local, sites, space)
    if np.abs(embed(out, sparse=False) - op).max() > tol * max(np.abs(op).max(), 1.0):
        raise DimensionError(f"operator is not supported on sites {sites}")
    return out


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    u = to_dense(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol)


def is_hermitian(op, tol: float = DEFAULT_TOL) -> bool:
    op = to_dense(op)
    scale = max(np.abs(op).max(), 1.0)
    return bool(np.abs(op - op.conj().T).max() <= tol * scale)


def check_state_vector(psi, tol: float = DEFAULT_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ValueError(f"state vector not normalized (norm {np.linalg.norm(psi):.3g})")
    return psi


def check_density_matrix(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    rho = to_dense(rho).astype(complex)
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.6g} != 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


# -- matrix text format -------------------------------------------------------

def write_matrix(mat, stream: TextIO, tol: float = 0.0) -> None:
    """Write ``dim rows cols`` then ``row col re im`` for each nonzero entry."""
    coo = sp.coo_matrix(mat)
    rows, cols = coo.shape
    stream.write(f"dim {rows} {cols}\n")
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        v = complex(coo.data[k])
        if abs(v) <= tol:
            continue
        stream.write(f"{coo.row[k]} {coo.col[k]} {v.real!r} {v.imag!r}\n")


def read_matrix(stream: TextIO) -> np.ndarray:
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "dim":
        raise ValueError(f"bad matrix header: {lines[0]!r}")
    rows, cols = int(head[1]), int(head[2])
    out = np.zeros((rows, cols), dtype=complex)
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'row col re im', got {ln!r}")
        r, c = int(parts[0]), int(parts[1])
        if not (0 <= r < rows and 0 <= c < cols):
            raise ValueError(f"line {lineno}: entry ({r}, {c}) outside {rows}x{cols}")
        out[r, c] = float(parts[2]) + 1j * float(parts[3])
    return out
