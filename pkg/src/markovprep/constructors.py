"""Jump-operator families whose only common dark state is a chosen target."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .operators import (
    DEFAULT_TOL,
    PAULI_X,
    PAULI_Z,
    SIGMA_MINUS,
    CompositeSpace,
    QuasiLocalOperator,
    embed,
    is_unitary,
    ladder,
    random_unitary,
    to_dense,
)


@dataclass(frozen=True)
class GraphSpec:
    n_vertices: int
    edges: frozenset

    def __init__(self, n_vertices: int, edges=()):
        n = int(n_vertices)
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        norm = set()
        for e in edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) references a vertex outside 0..{n - 1}")
            key = (min(a, b), max(a, b))
            if key in norm:
                raise ValueError(f"duplicate edge {key}")
            norm.add(key)
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def path(cls, n: int) -> "GraphSpec":
        """Linear cluster: vertices 0..n-1 joined in a line."""
        return cls(n, [(k, k + 1) for k in range(n - 1)])

    def neighbors(self, a: int) -> list[int]:
        return sorted({b for e in self.edges for b in e if a in e and b != a})

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace.qubits(self.n_vertices)


def parse_graph(stream: TextIO) -> GraphSpec:
    """Read ``n <vertices>`` followed by ``edge a b`` lines (0-indexed)."""
    n = None
    edges = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n" and len(parts) == 2 and n is None:
            n = int(parts[1])
        elif parts[0] == "edge" and len(parts) == 3 and n is not None:
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw.rstrip()!r}")
    if n is None:
        raise ValueError("graph file has no 'n <vertices>' line")
    return GraphSpec(n, edges)


def format_graph(g: GraphSpec) -> str:
    lines = [f"n {g.n_vertices}"] + [f"edge {a} {b}" for a, b in sorted(g.edges)]
    return "\n".join(lines) + "\n"


# -- sigma-minus products and their conjugates --------------------------------

def sigma_minus_jumps(n: int) -> list[QuasiLocalOperator]:
    space = CompositeSpace.qubits(n)
    return [QuasiLocalOperator(SIGMA_MINUS, (k,), space) for k in range(n)]


def qudit_ladder_jumps(n: int, d: int) -> list[QuasiLocalOperator]:
    """One ladder matrix J_d = sum_j |j-1><j| per site of ``n`` qudits."""
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    space = CompositeSpace.uniform(n, d)
    J = ladder(d)
    return [QuasiLocalOperator(J, (k,), space) for k in range(n)]


def conjugated_jumps(U, base: Sequence, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """{U c U^+ : c in base}; the dark state |0...0> is carried to U|0...0>."""
    U = to_dense(U)
    if not is_unitary(U, tol):
        raise ValueError("conjugating matrix is not unitary")
    Ud = U.conj().T
    out = []
    for c in base:
        c = embed(c, sparse=False) if isinstance(c, QuasiLocalOperator) else to_dense(c)
        out.append(U @ c @ Ud)
    return out


def gate_sequence_unitary(n: int, seed: int, depth: int = 3) -> np.ndarray:
    """Deterministic random circuit: layers of single-qubit unitaries and CZs."""
    rng = np.random.default_rng(seed)
    space = CompositeSpace.qubits(n)
    U = np.eye(space.total_dim, dtype=complex)
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    for _ in range(depth):
        for k in range(n):
            U = embed(QuasiLocalOperator(random_unitary(2, rng), (k,), space), sparse=False) @ U
        for k in range(n - 1):
            U = embed(QuasiLocalOperator(cz, (k, k + 1), space), sparse=False) @ U
    return U


# -- graph states --------------------------------------------------------------

def _pauli_string(space, ops: dict[int, np.ndarray]) -> QuasiLocalOperator:
    sites = tuple(sorted(ops))
    local = np.array([[1.0 + 0j]])
    for s in sites:
        local = np.kron(local, ops[s])
    return QuasiLocalOperator(local, sites, space)


def stabilizer_generators(g: GraphSpec) -> list[QuasiLocalOperator]:
    """U_k = X_k prod_{b in N(k)} Z_b for every vertex k."""
    space = g.space
    out = []
    for k in range(g.n_vertices):
        ops = {b: PAULI_Z for b in g.neighbors(k)}
        ops[k] = PAULI_X
        out.append(_pauli_string(space, ops))
    return out


def graph_state_jumps(g: GraphSpec) -> list[QuasiLocalOperator]:
    """c_k = (1 + U_k) Z_k / 2, supported on vertex k and its neighbours."""
    out = []
    for k, U in enumerate(stabilizer_generators(g)):
        sites = U.sites
        dims = [2] * len(sites)
        Z = np.eye(1, dtype=complex)
        for s in sites:
            Z = np.kron(Z, PAULI_Z if s == k else np.eye(2))
        local = 0.5 * (np.eye(int(np.prod(dims))) + U.local_matrix) @ Z
        out.append(QuasiLocalOperator(local, sites, U.space))
    return out


def graph_state(g: GraphSpec) -> np.ndarray:
    """Joint +1 eigenvector of all U_k, with real positive |0...0> amplitude."""
    n = g.n_vertices
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    phase = np.zeros(len(bits), dtype=np.int64)
    for a, b in g.edges:
        phase += bits[:, a] * bits[:, b]
    return ((-1.0) ** phase).astype(complex) / np.sqrt(2 ** n)


def graph_basis_state(g: GraphSpec, label: Sequence[int]) -> np.ndarray:
    """|Psi_{i_1...i_n}> = Z_1^{i_1} ... Z_n^{i_n} |G>."""
    label = [int(x) for x in label]
    if len(label) != g.n_vertices or any(x not in (0, 1) for x in label):
        raise ValueError(f"label {label} is not a bitstring of length {g.n_vertices}")
    n = g.n_vertices
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    signs = (-1.0) ** (bits @ np.array(label, dtype=np.int64))
    return graph_state(g) * signs


def graph_basis(g: GraphSpec) -> list[np.ndarray]:
    """All graph-basis states ordered by binary label (site 0 most significant)."""
    n = g.n_vertices
    return [graph_basis_state(g, lab) for lab in itertools.product((0, 1), repeat=n)]


def graph_basis_unitary(g: GraphSpec) -> np.ndarray:
    """Unitary mapping computational |i> to graph-basis |Psi_i>."""
    return np.column_stack(graph_basis(g))


def stabilizer_jumps(g: GraphSpec, V) -> list[np.ndarray]:
    """Jumps for the stabilizer state V|G>, V a (local) unitary."""
    return conjugated_jumps(V, graph_state_jumps(g))


# -- single global ladder -----------------------------------------------------

def global_ladder_jump(basis: Sequence, tol: float = DEFAULT_TOL) -> np.ndarray:
    """C = sum_i |phi_i><phi_{i+1}|, whose only eigenvector is basis[0]."""
    B = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in basis])
    if np.abs(B.conj().T @ B - np.eye(B.shape[1])).max() > tol:
        raise ValueError("basis is not orthonormal")
    return B[:, :-1] @ B[:, 1:].conj().T
