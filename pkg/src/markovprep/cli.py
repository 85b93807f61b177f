"""Command-line front end.

Reads a YAML run configuration, builds the process it describes, runs one
task and writes CSV and report files into the output directory.
"""
from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import constructors as cons
from .config import ConfigError, RunConfig, load_config
from .dynamics import IntegrationError, gap_scan, numeric_evolve, write_scan_csv
from .lattice import SpinChainSpec, aklt_ground_space, aklt_process, bec_process, eta_process
from .liouvillian import (
    SUPEROP_AUTO_DENSE_DIM,
    SUPEROP_DENSE_MAX_DIM,
    LindbladProcess,
    SpectrumError,
    build_superoperator,
    kernel_overlap,
    spectrum,
    write_kernel_states,
    write_spectrum_csv,
)
from .operators import (
    HADAMARD,
    CompositeSpace,
    DimensionError,
    basis_state,
    kron,
    projector,
    random_density_matrix,
)
from .verification import (
    UniquenessCertificate,
    check_theorem1,
    dark_space,
    invariant_subspace_probe,
    kernel_certificate,
    krylov_reachability,
)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INTEGRATION = 4
EXIT_DIMENSION = 5

EPILOG = """\
exit status:
  0  success
  1  unexpected error
  2  invalid command line or configuration (syntax or schema)
  3  spectral solver failure (Arnoldi non-convergence, inaccurate eigenpairs)
  4  integration failure (state lost positivity)
  5  problem too large for the requested method
"""


@dataclass
class Model:
    process: LindbladProcess
    target: np.ndarray | None  # the state the process is designed to prepare


def build_model(cfg: RunConfig) -> Model:
    s, p = cfg.system, cfg.process
    params = p.params
    c = p.constructor
    target = None
    if s.kind == "qubits":
        n = s.n
        space = CompositeSpace.qubits(n)
        zero = basis_state([0] * n, space)
        if c == "sigma-minus":
            jumps, target = cons.sigma_minus_jumps(n), zero
        elif c == "conjugated-sigma-minus":
            if params.unitary == "hadamard":
                U = kron(*([HADAMARD] * n))
            else:
                U = cons.gate_sequence_unitary(n, params.unitary_seed)
            jumps, target = cons.conjugated_jumps(U, cons.sigma_minus_jumps(n)), U @ zero
        elif c == "graph":
            g = cfg.graph()
            jumps, target = cons.graph_state_jumps(g), cons.graph_state(g)
        else:  # global-ladder
            if params.basis == "graph":
                basis = cons.graph_basis(cfg.graph())
            else:
                basis = list(np.eye(space.total_dim, dtype=complex))
            jumps, target = [cons.global_ladder_jump(basis)], basis[0]
        proc = LindbladProcess(space, tuple(jumps), _rates(cfg, len(jumps)))
    elif s.kind == "qudits":
        space = CompositeSpace.uniform(s.n, s.d)
        jumps = cons.qudit_ladder_jumps(s.n, s.d)
        target = basis_state([0] * s.n, space)
        proc = LindbladProcess(space, tuple(jumps), _rates(cfg, len(jumps)))
    elif s.kind == "spin1-chain":
        spec = SpinChainSpec(s.n, s.boundary)
        variant = "ladder" if c == "aklt-ladder" else "twirl"
        proc = aklt_process(spec, variant, n_twirl=params.n_twirl)
        proc = proc.with_rates(_rates(cfg, len(proc.jumps)))
        ground = aklt_ground_space(spec)
        target = ground[:, 0] if ground.shape[1] == 1 else None
    elif s.kind == "bose-lattice":
        model = bec_process(s.M, s.N, s.boundary, J=params.J, U_int=params.U)
        proc = model.process.with_rates(_rates(cfg, len(model.process.jumps)))
        target = model.target
    else:
        if s.boundary != "periodic":
            raise ConfigError("schema violation: system.boundary: fermi-lattice is a periodic ring")
        model = eta_process(s.M, s.N, J=params.J, U=params.U)
        proc = model.process.with_rates(_rates(cfg, len(model.process.jumps)))
        target = model.target
    return Model(proc, target)


def _rates(cfg: RunConfig, count: int) -> tuple[float, ...]:
    r = cfg.process.rates
    if isinstance(r, list):
        if len(r) != count:
            raise ConfigError(f"schema violation: process.rates: expected {count} rates, got {len(r)}")
        return tuple(float(x) for x in r)
    return (float(r),) * count


def _use_sparse(dim: int, force: str | None) -> bool:
    if force == "dense":
        if dim > SUPEROP_DENSE_MAX_DIM:
            raise DimensionError(f"--dense needs Hilbert dimension <= {SUPEROP_DENSE_MAX_DIM}, got {dim}")
        return False
    if force == "sparse":
        return True
    return dim > SUPEROP_AUTO_DENSE_DIM


def _initial_state(cfg: RunConfig, D: int) -> np.ndarray:
    kind = cfg.task.initial
    if kind == "maximally-mixed":
        return np.eye(D, dtype=complex) / D
    if kind == "excited":
        return projector(np.eye(D, dtype=complex)[D - 1])
    return random_density_matrix(D, np.random.default_rng(cfg.task.seed))


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def run(cfg: RunConfig, force: str | None = None) -> list[Path]:
    """Execute the configured task; returns the files written."""
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.output.stem
    task = cfg.task
    written = []

    def emit(suffix: str, text: str):
        path = out / f"{stem}_{suffix}"
        _write(path, text)
        written.append(path)

    if task.kind == "gap-scan":
        family = {"sigma-minus": "sigma-minus", "graph": "linear-cluster",
                  "qudit-ladder": "qudit-ladder"}[cfg.process.constructor]
        extra = {"d": cfg.system.d} if family == "qudit-ladder" else {}
        rows = gap_scan(family, task.sizes, rates=float(cfg.process.rates), **extra)
        buf = io.StringIO()
        write_scan_csv(rows, buf)
        emit("scan.csv", buf.getvalue())
        failed = [r for r in rows if r.error]
        if failed:
            raise SpectrumError("; ".join(f"n={r.n}: {r.error}" for r in failed))
        return written

    model = build_model(cfg)
    proc = model.process
    D = proc.dim

    if task.kind == "spectrum":
        sparse = _use_sparse(D, force)
        mode = task.mode if task.mode != "auto" else ("gap" if sparse else "full")
        report = spectrum(build_superoperator(proc, sparse=sparse), mode=mode, tol=task.tol)
        buf = io.StringIO()
        write_spectrum_csv(report, buf)
        emit("spectrum.csv", buf.getvalue())
        buf = io.StringIO()
        write_kernel_states(report, buf)
        emit("kernel.txt", buf.getvalue())
        k = report.kernel_dim
        verdict = "unique" if k == 1 else ("not-unique" if k > 1 else "inconclusive")
        lines = ["method: kernel-dimension", f"verdict: {verdict}", f"total_dim: {D}",
                 f"kernel_dim: {k}", f"mode: {report.mode}",
                 f"gap: {'' if report.gap is None else repr(float(report.gap))}"]
        if model.target is not None and len(report.kernel_basis) == 1:
            psi = model.target
            fid = float(np.real(np.vdot(psi, report.kernel_basis[0] @ psi)))
            lines.append(f"target_fidelity: {fid!r}")
        elif model.target is not None and report.kernel_basis:
            ov = kernel_overlap(report.kernel_basis, projector(model.target))
            lines.append(f"target_overlap: {ov!r}")
        emit("certificate.txt", "\n".join(lines) + "\n")
    elif task.kind == "evolve":
        traj = numeric_evolve(proc, _initial_state(cfg, D), task.t_max, task.n_steps,
                              target=model.target)
        buf = io.StringIO()
        traj.write_csv(buf)
        emit("trajectory.csv", buf.getvalue())
    else:  # verify
        sections = []
        if model.target is not None:
            v = check_theorem1(proc, model.target, tol=task.tol)
            sections.append("\n".join([
                "[stationarity]",
                f"stationary: {v.stationary}",
                f"eigen_residual: {v.eigen_residual!r}",
                f"max_jump_residual: {max(v.jump_residuals, default=0.0)!r}",
                f"balance_residual: {v.balance_residual!r}",
                f"generator_residual: {v.generator_residual!r}",
            ]) + "\n")
        certs: list[UniquenessCertificate] = []
        if D <= SUPEROP_DENSE_MAX_DIM or force == "sparse":
            certs.append(kernel_certificate(proc, sparse=_use_sparse(D, force)))
        if model.target is not None:
            certs.append(krylov_reachability(proc.jumps, model.target))
        dark = dark_space(proc)
        certs.append(invariant_subspace_probe(proc.jumps, dark, trials=task.trials, seed=task.seed,
                                              hamiltonian=proc.hamiltonian, rates=proc.rates,
                                              dim=D))
        sections.append(f"[dark-space]\ndark_dim: {len(dark)}\n")
        for c in certs:
            sections.append(f"[{c.method}]\n" + c.report())
        emit("verify.txt", "\n".join(sections))
    return written


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="markovprep",
        description="Build a dissipative state-preparation process and analyze it.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--tol", type=float, help="override task.tol")
    g = ap.add_mutually_exclusive_group()
    g.add_argument("--dense", dest="force", action="store_const", const="dense",
                   help="force dense superoperators")
    g.add_argument("--sparse", dest="force", action="store_const", const="sparse",
                   help="force sparse superoperators")
    ap.add_argument("--seed", type=int, help="override task.seed")
    ap.add_argument("--out", help="override output.dir")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            if args.tol <= 0:
                raise ConfigError("--tol must be positive")
            cfg.task.tol = args.tol
        if args.seed is not None:
            cfg.task.seed = args.seed
        if args.out is not None:
            cfg.output.dir = args.out
        written = run(cfg, force=args.force)
    except ConfigError as exc:
        print(f"markovprep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpectrumError as exc:
        print(f"markovprep: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IntegrationError as exc:
        print(f"markovprep: integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except DimensionError as exc:
        print(f"markovprep: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except Exception as exc:  # noqa: BLE001
        print(f"markovprep: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
