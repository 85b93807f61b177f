"""Bosons on a 1D lattice at fixed particle number; the driven-BEC process."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, TextIO

import numpy as np
import scipy.sparse as sp

from ..liouvillian import LindbladProcess

FOCK_MAX_DIM = 4096


def _compositions(N: int, M: int):
    # occupation vectors summing to N, in descending lexicographic order
    if M == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(N - first, M - 1):
            yield (first,) + rest


class BoseFockBasis:
    """Occupation-number basis of N bosons on M sites."""

    def __init__(self, M: int, N: int, max_dim: int = FOCK_MAX_DIM):
        if M < 1 or N < 0:
            raise ValueError("need M >= 1 sites and N >= 0 particles")
        size = math.comb(N + M - 1, M - 1)
        if size > max_dim:
            raise ValueError(f"Fock sector of dimension {size} exceeds the budget {max_dim}")
        self.M, self.N = M, N
        self.states = list(_compositions(N, M))
        self.index = {s: i for i, s in enumerate(self.states)}

    @property
    def total_dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def annihilator(self, i: int, lower: "BoseFockBasis") -> sp.csr_matrix:
        """a_i as a map from this sector (N) to ``lower`` (N - 1)."""
        rows, cols, vals = [], [], []
        for col, s in enumerate(self.states):
            if s[i] == 0:
                continue
            t = list(s)
            t[i] -= 1
            rows.append(lower.index[tuple(t)])
            cols.append(col)
            vals.append(math.sqrt(s[i]))
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(lower), len(self)), dtype=complex)

    def hop(self, i: int, j: int) -> sp.csr_matrix:
        """a_i^+ a_j within the sector."""
        rows, cols, vals = [], [], []
        for col, s in enumerate(self.states):
            if s[j] == 0:
                continue
            t = list(s)
            amp = math.sqrt(t[j])
            t[j] -= 1
            t[i] += 1
            amp *= math.sqrt(t[i])
            rows.append(self.index[tuple(t)])
            cols.append(col)
            vals.append(amp)
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(self), len(self)), dtype=complex)

    def number(self, i: int) -> sp.csr_matrix:
        return sp.diags([complex(s[i]) for s in self.states], format="csr")

    def dump(self, stream: TextIO) -> None:
        for s in self.states:
            stream.write(" ".join(str(x) for x in s) + "\n")


def chain_bonds(M: int, boundary: str) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds; a periodic ring of two sites has two bonds."""
    bonds = [(l, l + 1) for l in range(M - 1)]
    if boundary == "periodic":
        bonds.append((M - 1, 0))
    elif boundary != "open":
        raise ValueError(f"unknown boundary {boundary!r}")
    return bonds


def bec_state(M: int, N: int) -> np.ndarray:
    """(sum_j a_j^+)^N |vac> normalized, in BoseFockBasis(M, N) order."""
    if M < 1 or N < 0:
        raise ValueError("need M >= 1 and N >= 0")
    basis = BoseFockBasis(M, N)
    # multinomial coefficient N!/prod n_j! times prod sqrt(n_j!)
    amps = np.array([math.factorial(N) / math.prod(math.sqrt(math.factorial(n)) for n in s)
                     for s in basis.states], dtype=complex)
    return amps / np.linalg.norm(amps)


@dataclass
class BecModel:
    basis: BoseFockBasis
    process: LindbladProcess
    kinetic: sp.csr_matrix
    interaction: sp.csr_matrix
    target: np.ndarray

    @property
    def hubbard(self) -> sp.csr_matrix:
        return self.kinetic + self.interaction


def bec_process(M: int, N: int, boundary: Literal["periodic", "open"] = "periodic",
                J: float = 1.0, U_int: float = 0.0, rate: float = 1.0) -> BecModel:
    """Jumps c_ij = (a_i^+ + a_j^+)(a_i - a_j) for each ordered neighbour pair.

    The process Hamiltonian is the Bose-Hubbard H_B = H_0 + V; with the
    default U_int = 0 the condensate is an eigenstate of it.
    """
    if M < 2 or N < 1:
        raise ValueError("need M >= 2 sites and N >= 1 particles")
    basis = BoseFockBasis(M, N)
    jumps = []
    kinetic = sp.csr_matrix((len(basis), len(basis)), dtype=complex)
    for a, b in chain_bonds(M, boundary):
        kinetic = kinetic - J * (basis.hop(a, b) + basis.hop(b, a))
        for i, j in ((a, b), (b, a)):
            # (a_i^+ + a_j^+)(a_i - a_j) = n_i - a_i^+ a_j + a_j^+ a_i - n_j
            c = basis.number(i) - basis.hop(i, j) + basis.hop(j, i) - basis.number(j)
            jumps.append(c.tocsr())
    n = [basis.number(i) for i in range(M)]
    interaction = 0.5 * U_int * sum(ni @ ni - ni for ni in n)
    interaction = sp.csr_matrix(interaction, dtype=complex)
    proc = LindbladProcess(basis, tuple(jumps), (rate,) * len(jumps), kinetic + interaction)
    return BecModel(basis, proc, kinetic.tocsr(), interaction, bec_state(M, N))
