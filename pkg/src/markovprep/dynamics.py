"""Time evolution toward the stationary state and gap-versus-size scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import constructors as cons
from .liouvillian import (
    SUPEROP_DENSE_MAX_DIM,
    LindbladProcess,
    SpectrumError,
    apply_generator,
    build_superoperator,
    spectrum,
    unvec,
    vec,
)
from .operators import PAULI_X, PAULI_Y, PAULI_Z, CompositeSpace, is_unitary, to_dense


class IntegrationError(RuntimeError):
    """The propagated state lost positivity beyond the monitoring threshold."""


POSITIVITY_ABORT = -1e-6

# per-site eigenbasis of the sigma-minus dissipator: |0><0|, X, Y, Z
_SITE_BASIS = np.column_stack([
    np.array([[1, 0], [0, 0]], dtype=complex).ravel(),
    PAULI_X.ravel(), PAULI_Y.ravel(), PAULI_Z.ravel(),
])
# not Hilbert-Schmidt orthogonal (|0><0| overlaps Z), so coefficients come
# from the inverse change of basis rather than inner products
_SITE_BASIS_INV = np.linalg.inv(_SITE_BASIS)


def site_eigenvalues(g: float) -> np.ndarray:
    return np.array([0.0, -g, -g, -2.0 * g])


def _apply_per_site(tensor: np.ndarray, mat: np.ndarray) -> np.ndarray:
    for axis in range(tensor.ndim):
        tensor = np.moveaxis(np.tensordot(mat, tensor, axes=([1], [axis])), 0, axis)
    return tensor


def analytic_evolve(U, rates: Sequence[float], rho0, times: Sequence[float]) -> list[np.ndarray]:
    """Closed-form rho(t) for the jumps U sigma_minus^(k) U^+ with rates g_k.

    The rotated initial state U^+ rho0 U is expanded in products of
    {|0><0|, X, Y, Z}; each product decays as exp(sum_k lambda_{i_k} t).
    """
    U = to_dense(U)
    if not is_unitary(U):
        raise ValueError("U is not unitary")
    n = len(rates)
    D = 2 ** n
    rho0 = np.asarray(rho0, dtype=complex)
    if U.shape != (D, D) or rho0.shape != (D, D):
        raise ValueError(f"expected {D}x{D} matrices for {n} qubits")
    sigma = U.conj().T @ rho0 @ U
    # (a_1..a_n, b_1..b_n) -> (a_1 b_1, a_2 b_2, ...) with a_k b_k -> 2a + b
    t = sigma.reshape((2,) * (2 * n))
    interleave = [ax for k in range(n) for ax in (k, n + k)]
    t = t.transpose(interleave).reshape((4,) * n)
    coeffs = _apply_per_site(t, _SITE_BASIS_INV)
    lam = np.zeros((4,) * n)
    for k, g in enumerate(rates):
        shape = [1] * n
        shape[k] = 4
        lam = lam + site_eigenvalues(g).reshape(shape)
    back = np.argsort(interleave)
    out = []
    for tt in times:
        ct = coeffs * np.exp(lam * tt)
        m = _apply_per_site(ct, _SITE_BASIS).reshape((2,) * (2 * n)).transpose(back)
        out.append(U @ m.reshape(D, D) @ U.conj().T)
    return out


@dataclass
class Trajectory:
    times: np.ndarray
    fidelity: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    min_eig: np.ndarray
    states: list[np.ndarray] = field(default_factory=list)
    step: float = 0.0
    method: str = ""

    def write_csv(self, stream: TextIO) -> None:
        stream.write("t,fidelity,trace,purity,min_eig\n")
        for row in zip(self.times, self.fidelity, self.trace, self.purity, self.min_eig):
            stream.write(",".join(_num(x) for x in row) + "\n")


def _num(x) -> str:
    x = float(x)
    return repr(0.0 if x == 0 else x)


def _norm2_bound(op) -> float:
    if sp.issparse(op):
        a = abs(op)
        return math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max())
    a = np.abs(op)
    return math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max())


def rk4_step_size(process: LindbladProcess) -> float:
    """Fixed step with g_max * dt <= 0.05, tightened by a bound on |L|."""
    gmax = max(process.rates, default=0.0)
    bound = sum(4 * g * _norm2_bound(c) ** 2 for g, c in zip(process.rates, process.jumps))
    if process.hamiltonian is not None:
        bound += 2 * _norm2_bound(process.hamiltonian)
    candidates = [0.05 / gmax] if gmax > 0 else []
    if bound > 0:
        candidates.append(0.5 / bound)
    return min(candidates) if candidates else math.inf


def numeric_evolve(process: LindbladProcess, rho0, t_max: float, n_steps: int,
                   target=None, method: str | None = None,
                   keep_states: bool = False) -> Trajectory:
    """Propagate rho0 and record observables at n_steps + 1 equally spaced times.

    ``method`` is ``"expm"`` (dense propagator, default for D <= 64) or
    ``"rk4"`` (fixed-step integration of the generator).
    """
    if t_max <= 0 or n_steps < 1:
        raise ValueError("need t_max > 0 and n_steps >= 1")
    D = process.dim
    rho = np.asarray(rho0, dtype=complex).copy()
    if rho.shape != (D, D):
        raise ValueError(f"rho0 has shape {rho.shape}, expected {(D, D)}")
    method = method or ("expm" if D <= SUPEROP_DENSE_MAX_DIM else "rk4")
    times = np.linspace(0.0, t_max, n_steps + 1)
    dt = t_max / n_steps
    psi = None if target is None else np.asarray(target, dtype=complex).ravel()

    if method == "expm":
        M = build_superoperator(process, sparse=False).dense()
        prop = la.expm(M * dt)
        advance = lambda r: unvec(prop @ vec(r), D)
        sub_dt = dt
    elif method == "rk4":
        h_max = rk4_step_size(process)
        n_sub = max(1, math.ceil(dt / h_max)) if math.isfinite(h_max) else 1
        sub_dt = dt / n_sub

        def advance(r):
            for _ in range(n_sub):
                k1 = apply_generator(process, r)
                k2 = apply_generator(process, r + 0.5 * sub_dt * k1)
                k3 = apply_generator(process, r + 0.5 * sub_dt * k2)
                k4 = apply_generator(process, r + sub_dt * k3)
                r = r + (sub_dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            return r
    else:
        raise ValueError(f"unknown method {method!r}")

    fid, tr, pur, mins, states = [], [], [], [], []
    for i, t in enumerate(times):
        if i:
            rho = advance(rho)
        rho = (rho + rho.conj().T) / 2
        ev = np.linalg.eigvalsh(rho)
        if ev[0] < POSITIVITY_ABORT:
            raise IntegrationError(
                f"min eigenvalue {ev[0]:.3e} at t={t:.6g} with step {sub_dt:.3e} ({method}); "
                "reduce the step size"
            )
        tr.append(np.trace(rho).real)
        pur.append(np.real(np.vdot(rho, rho)))
        mins.append(ev[0])
        fid.append(np.nan if psi is None else np.real(np.vdot(psi, rho @ psi)))
        if keep_states:
            states.append(rho.copy())
    return Trajectory(times, np.array(fid), np.array(tr), np.array(pur), np.array(mins),
                      states, sub_dt, method)


# -- gap scans ----------------------------------------------------------------

FAMILIES = ("sigma-minus", "linear-cluster", "qudit-ladder")


def family_process(family: str, n: int, rates=1.0, **params) -> LindbladProcess:
    """Process of a named constructor family at size n.

    ``rates`` is a scalar, a list, or a callable n -> list.
    """
    if family == "sigma-minus":
        jumps = cons.sigma_minus_jumps(n)
        space = CompositeSpace.qubits(n)
    elif family == "linear-cluster":
        jumps = cons.graph_state_jumps(cons.GraphSpec.path(n))
        space = CompositeSpace.qubits(n)
    elif family == "qudit-ladder":
        d = int(params.get("d", 3))
        jumps = cons.qudit_ladder_jumps(n, d)
        space = CompositeSpace.uniform(n, d)
    else:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if callable(rates):
        rates = rates(n)
    if np.isscalar(rates):
        rates = [float(rates)] * len(jumps)
    return LindbladProcess(space, tuple(jumps), tuple(rates))


@dataclass
class GapRow:
    n: int
    gap: float | None
    relaxation_time: float | None
    error: str | None = None


def gap_scan(family: str, sizes: Sequence[int], rates=1.0, dense_max_dim: int = 16,
             n_eigs: int = 12, **params) -> list[GapRow]:
    """Spectral gap and relaxation time per system size.

    Sizes with Hilbert dimension above ``dense_max_dim`` use sparse
    shift-invert; a solver failure is recorded on its row and the scan
    moves on.
    """
    rows = []
    for n in sizes:
        try:
            proc = family_process(family, n, rates, **params)
            sparse = proc.dim > dense_max_dim
            report = spectrum(build_superoperator(proc, sparse=sparse),
                              mode="gap" if sparse else "full", n_eigs=n_eigs,
                              with_kernel=False)
            rows.append(GapRow(n, report.gap, report.relaxation_time))
        except (SpectrumError, ValueError, MemoryError) as exc:
            rows.append(GapRow(n, None, None, f"{type(exc).__name__}: {exc}"))
    return rows


def write_scan_csv(rows: Sequence[GapRow], stream: TextIO) -> None:
    stream.write("n,gap,relaxation_time\n")
    for r in rows:
        gap = "" if r.gap is None else _num(r.gap)
        rt = "" if r.relaxation_time is None else _num(r.relaxation_time)
        stream.write(f"{r.n},{gap},{rt}\n")
