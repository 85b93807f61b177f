"""Spin-1 AKLT chain: bond Hamiltonians, bond projectors and their jump operators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..liouvillian import LindbladProcess
from ..operators import CompositeSpace, QuasiLocalOperator, embed, spin_matrices

SX, SY, SZ = spin_matrices(1.0)
SWAP9 = np.eye(9)[[3 * (i % 3) + i // 3 for i in range(9)]]


@dataclass(frozen=True)
class SpinChainSpec:
    n_sites: int
    boundary: Literal["periodic", "open"] = "periodic"

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("a spin chain needs at least two sites")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace.uniform(self.n_sites, 3)

    def bonds(self) -> list[tuple[int, int]]:
        n = self.n_sites
        out = [(k, k + 1) for k in range(n - 1)]
        if self.boundary == "periodic" and n > 2:
            out.append((n - 1, 0))
        return out


def heisenberg_bond() -> np.ndarray:
    """S_1 . S_2 on two spin-1 sites."""
    return sum(np.kron(s, s) for s in (SX, SY, SZ))


def bond_hamiltonian() -> np.ndarray:
    ss = heisenberg_bond()
    return ss + ss @ ss / 3


def bond_projector() -> np.ndarray:
    """P = (2/3 + h)/2, the projector onto the total-spin-2 (4/3) eigenspace."""
    return (2 / 3 * np.eye(9) + bond_hamiltonian()) / 2


def coupled_basis() -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the h = 4/3 and h = -2/3 eigenspaces.

    Returns (phi, psi) as 9x5 and 9x4 column matrices: phi is the J = 2
    multiplet ordered m = -2..2, psi is J = 0 followed by J = 1 with
    m = -1..1. Each vector's largest component is made real positive.
    """
    tot = [np.kron(s, np.eye(3)) + np.kron(np.eye(3), s) for s in (SX, SY, SZ)]
    s2 = sum(t @ t for t in tot)
    # 10 J(J+1) + m separates all nine (J, m) pairs
    _, vecs = np.linalg.eigh(10 * s2 + tot[2])
    for i in range(9):
        v = vecs[:, i]
        k = np.argmax(np.abs(v))
        vecs[:, i] = v * np.exp(-1j * np.angle(v[k]))
    return vecs[:, 4:9], vecs[:, 0:4]


def ladder_bond_jump() -> np.ndarray:
    """c = sum_{i=1..4} |Psi_i><Phi_i| + |Phi_4><Phi_5| on one bond."""
    phi, psi = coupled_basis()
    c = psi @ phi[:, :4].conj().T
    c += np.outer(phi[:, 3], phi[:, 4].conj())
    return c


def clock_shift_family(count: int, d: int = 9) -> list[np.ndarray]:
    """First ``count`` Weyl operators X^a Z^b on C^d, a = 1..d-1 major, then a = 0."""
    if count < 1:
        raise ValueError("need at least one unitary")
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    pairs = [(a, b) for a in range(1, d) for b in range(d)] + [(0, b) for b in range(1, d)] + [(0, 0)]
    if count > len(pairs):
        raise ValueError(f"at most {len(pairs)} clock-and-shift unitaries exist for d={d}")
    mp = np.linalg.matrix_power
    return [mp(shift, a) @ mp(clock, b) for a, b in pairs[:count]]


def _bond_op(local: np.ndarray, a: int, b: int, space) -> QuasiLocalOperator:
    if a > b:
        local = SWAP9 @ local @ SWAP9
        a, b = b, a
    return QuasiLocalOperator(local, (a, b), space)


def aklt_hamiltonian(spec: SpinChainSpec):
    """Full Hamiltonian and the list of bond terms h_k."""
    h = bond_hamiltonian()
    terms = [_bond_op(h, a, b, spec.space) for a, b in spec.bonds()]
    if spec.boundary == "periodic" and spec.n_sites == 2:
        terms = terms * 2  # the ring of two sites has two bonds
    H = sum(embed(t) for t in terms)
    return H, terms


def aklt_ground_space(spec: SpinChainSpec, tol: float = 1e-8) -> np.ndarray:
    """Columns spanning the lowest eigenspace of H (exact diagonalization)."""
    H, _ = aklt_hamiltonian(spec)
    e, v = np.linalg.eigh(H)
    return v[:, e < e[0] + tol]


def aklt_process(spec: SpinChainSpec, variant: Literal["ladder", "twirl"] = "ladder",
                 n_twirl: int = 9, rate: float = 1.0) -> LindbladProcess:
    """Dissipative process whose only dark state is the AKLT ground state."""
    if variant == "ladder":
        locals_ = [ladder_bond_jump()]
    elif variant == "twirl":
        P = bond_projector()
        locals_ = [U @ P for U in clock_shift_family(n_twirl)]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    jumps = [_bond_op(c, a, b, spec.space) for a, b in spec.bonds() for c in locals_]
    return LindbladProcess(spec.space, tuple(jumps), (rate,) * len(jumps))
