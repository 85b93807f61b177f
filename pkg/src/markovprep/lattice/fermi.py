"""Spin-1/2 fermions on a 1D ring; the driven eta-condensate process.

Modes are ordered spin-up sites 0..M-1 followed by spin-down sites
0..M-1, i.e. mode(s, l) = s*M + l. A Fock state is an integer whose bit
``m`` is the occupation of mode ``m``; applying f_m or f_m^+ picks up the
sign (-1)^(number of occupied modes below m).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from ..liouvillian import LindbladProcess
from .bose import FOCK_MAX_DIM, chain_bonds

UP, DOWN = 0, 1

# an operator expression is a list of (coefficient, word); a word is a tuple
# of (mode, is_creator) read left to right as an operator product
Expr = list


def mode(s: int, l: int, M: int) -> int:
    return s * M + l


def cre(m: int) -> Expr:
    return [(1.0, ((m, True),))]


def ann(m: int) -> Expr:
    return [(1.0, ((m, False),))]


def identity() -> Expr:
    return [(1.0, ())]


def add(*exprs: Expr) -> Expr:
    return [term for e in exprs for term in e]


def scale(a: complex, e: Expr) -> Expr:
    return [(a * c, w) for c, w in e]


def mul(*exprs: Expr) -> Expr:
    out = identity()
    for e in exprs:
        out = [(c1 * c2, w1 + w2) for c1, w1 in out for c2, w2 in e]
    return out


def dag(e: Expr) -> Expr:
    return [(np.conj(c), tuple((m, not cr) for m, cr in reversed(w))) for c, w in e]


def number(m: int) -> Expr:
    return mul(cre(m), ann(m))


def apply_word(word, state: int):
    """Apply an operator word to a Fock state; returns (sign, new_state) or None."""
    sign = 1
    for m, creator in reversed(word):
        occupied = (state >> m) & 1
        if occupied == creator:
            return None
        if bin(state & ((1 << m) - 1)).count("1") % 2:
            sign = -sign
        state ^= 1 << m
    return sign, state


class FermiFockBasis:
    """Fock states of M sites with fixed (N_up, N_down), or the full space."""

    def __init__(self, M: int, n_up: int | None, n_down: int | None,
                 max_dim: int = FOCK_MAX_DIM):
        self.M = M
        self.n_up, self.n_down = n_up, n_down
        if n_up is None:
            size = 4 ** M
        else:
            if not (0 <= n_up <= M and 0 <= n_down <= M):
                raise ValueError(f"particle numbers ({n_up}, {n_down}) impossible on {M} sites")
            size = math.comb(M, n_up) * math.comb(M, n_down)
        if size > max_dim:
            raise ValueError(f"Fock space of dimension {size} exceeds the budget {max_dim}")
        if n_up is None:
            self.states = list(range(4 ** M))
        else:
            ups = [sum(1 << l for l in c) for c in itertools.combinations(range(M), n_up)]
            downs = [sum(1 << (M + l) for l in c) for c in itertools.combinations(range(M), n_down)]
            self.states = [u | d for u in ups for d in downs]
        self.index = {s: i for i, s in enumerate(self.states)}

    @classmethod
    def full(cls, M: int) -> "FermiFockBasis":
        return cls(M, None, None)

    @property
    def total_dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def occupations(self, state: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        M = self.M
        return (tuple((state >> l) & 1 for l in range(M)),
                tuple((state >> (M + l)) & 1 for l in range(M)))

    def matrix(self, expr: Expr, target: "FermiFockBasis | None" = None) -> sp.csr_matrix:
        """Matrix of ``expr`` from this basis into ``target`` (default: itself).

        Terms leading outside ``target`` must vanish; anything else is an error.
        """
        target = self if target is None else target
        acc: dict[tuple[int, int], complex] = {}
        for col, s in enumerate(self.states):
            for coef, word in expr:
                res = apply_word(word, s)
                if res is None:
                    continue
                sign, t = res
                row = target.index.get(t)
                if row is None:
                    raise ValueError("operator leaves the target sector")
                acc[(row, col)] = acc.get((row, col), 0) + sign * coef
        keys = [k for k, v in acc.items() if v != 0]
        rows = [k[0] for k in keys]
        cols = [k[1] for k in keys]
        vals = [acc[k] for k in keys]
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(target), len(self)), dtype=complex)

    def dump(self, stream: TextIO) -> None:
        """One line per state: up occupations then down occupations."""
        for s in self.states:
            up, down = self.occupations(s)
            stream.write(" ".join(str(x) for x in up + down) + "\n")


def stagger(l: int) -> int:
    return -1 if l % 2 else 1


def eta_creator(M: int) -> Expr:
    """eta^+ = M^{-1/2} sum_l (-1)^l f^+_{up,l} f^+_{down,l}."""
    terms = [scale(stagger(l), mul(cre(mode(UP, l, M)), cre(mode(DOWN, l, M)))) for l in range(M)]
    return scale(1 / math.sqrt(M), add(*terms))


def pair_creator(l: int, M: int) -> Expr:
    return mul(cre(mode(UP, l, M)), cre(mode(DOWN, l, M)))


def hubbard(M: int, J: float, U: float, boundary: str = "periodic") -> Expr:
    terms = []
    for a, b in chain_bonds(M, boundary):
        for s in (UP, DOWN):
            terms.append(scale(-J, mul(cre(mode(s, a, M)), ann(mode(s, b, M)))))
            terms.append(scale(-J, mul(cre(mode(s, b, M)), ann(mode(s, a, M)))))
    for l in range(M):
        terms.append(scale(U, mul(number(mode(UP, l, M)), number(mode(DOWN, l, M)))))
    return add(*terms)


def jump_families(M: int, boundary: str = "periodic") -> dict[int, list[Expr]]:
    """The four families c^(1..4)_l, one member per bond (l, l+1)."""
    fam = {1: [], 2: [], 3: [], 4: []}
    one = identity()
    for l, r in chain_bonds(M, boundary):
        u = lambda s: mode(UP, s, M)
        d = lambda s: mode(DOWN, s, M)
        eta_l, eta_r = pair_creator(l, M), pair_creator(r, M)
        fam[1].append(mul(add(eta_l, scale(-1, eta_r)), dag(add(eta_l, eta_r))))
        fam[2].append(add(mul(number(u(l)), cre(d(l)), ann(d(r))),
                          mul(number(u(r)), cre(d(r)), ann(d(l)))))
        hole_l = add(one, scale(-1, number(d(l))))
        hole_r = add(one, scale(-1, number(d(r))))
        fam[3].append(mul(add(cre(u(l)), cre(u(r))), add(ann(u(l)), ann(u(r))), hole_l, hole_r))
        fam[4].append(mul(add(mul(cre(d(l)), ann(d(r))), mul(cre(d(r)), ann(d(l)))),
                          number(u(l)), number(u(r))))
    return fam


def eta_state(M: int, N: int) -> np.ndarray:
    """(eta^+)^N |0> normalized, in FermiFockBasis(M, N, N) order."""
    if M % 2:
        raise ValueError("the staggered sign needs an even number of sites")
    if not 0 <= N <= M:
        raise ValueError(f"cannot place {N} pairs on {M} sites")
    v = np.ones(1, dtype=complex)
    eta = eta_creator(M)
    for k in range(N):
        v = FermiFockBasis(M, k, k).matrix(eta, FermiFockBasis(M, k + 1, k + 1)) @ v
    return v / np.linalg.norm(v)


@dataclass
class EtaModel:
    basis: FermiFockBasis
    process: LindbladProcess
    families: dict[int, list[sp.csr_matrix]]
    hamiltonian: sp.csr_matrix
    target: np.ndarray


def eta_process(M: int, N: int, J: float = 1.0, U: float = 1.0, rate: float = 1.0,
                include_hamiltonian: bool = True) -> EtaModel:
    """All four jump families on the (N, N) sector of a periodic ring."""
    if M % 2:
        raise ValueError("the staggered sign needs an even number of sites")
    basis = FermiFockBasis(M, N, N)
    fams = {k: [basis.matrix(e) for e in exprs] for k, exprs in jump_families(M).items()}
    jumps = tuple(c for k in sorted(fams) for c in fams[k])
    H = basis.matrix(hubbard(M, J, U))
    proc = LindbladProcess(basis, jumps, (rate,) * len(jumps), H if include_hamiltonian else None)
    return EtaModel(basis, proc, fams, H, eta_state(M, N))


def doublon_sign(sites: Sequence[int]) -> int:
    return int(np.prod([stagger(l) for l in sites])) if sites else 1
