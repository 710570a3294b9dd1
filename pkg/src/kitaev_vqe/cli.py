"""Command-line interface: ``kitaev-vqe <command> [flags]``.

Exit codes are 0 on success, 1 on runtime, tolerance or I/O failure and 2 on
invalid arguments.  Every flag can also come from ``--config FILE`` holding
``key = value`` or ``key: value`` lines; flags given on the command line win.
The output directory defaults to ``$KITAEV_VQE_OUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from kitaev_vqe import scan, vqe
from kitaev_vqe.ansatz import AnsatzKind, AnsatzSpec
from kitaev_vqe.model import ChainParams, Parity, even_odd_gap, ground_energy, sector_eigenvalues
from kitaev_vqe.pauli import jw_hamiltonian, spectra_match

OUT_ENV = "KITAEV_VQE_OUT"
DEFAULT_OUT = "results"
SPECTRA_MAX_SITES = 12

# flags that never affect results and are kept out of artifact metadata
_NOT_ECHOED = {"command", "handler", "config", "out"}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully validated inputs of one command."""

    command: str
    chain: ChainParams | None = None
    ansatz: AnsatzSpec | None = None
    optimizer: vqe.OptimizerConfig | None = None
    grid: scan.GridSpec | None = None
    out: Path | None = None
    seed: int = 0


def _chain(args: argparse.Namespace) -> ChainParams:
    return ChainParams(args.n, args.t, args.delta, args.mu)


def _optimizer(args: argparse.Namespace) -> vqe.OptimizerConfig:
    return vqe.OptimizerConfig(
        max_iterations=args.max_iterations,
        convergence_tol=args.convergence_tol,
        restarts=args.restarts,
        seed=args.seed,
        shots=args.shots,
    )


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Validate every field up front; raises ``ValueError`` on bad input."""
    cmd = args.command
    if cmd == "ed":
        return RunConfig(cmd, chain=_chain(args))
    if cmd == "spectra-match":
        if not 1 <= args.n <= SPECTRA_MAX_SITES:
            raise ValueError(f"spectra-match supports 1 <= n <= {SPECTRA_MAX_SITES}")
        if args.tol <= 0:
            raise ValueError("--tol must be positive")
        return RunConfig(cmd, chain=_chain(args), seed=args.seed)
    if cmd == "phase-scan":
        if not 1 <= args.n <= scan.MAX_GAP_SITES:
            raise ValueError(f"phase-scan supports 1 <= n <= {scan.MAX_GAP_SITES}")
        grid = scan.GridSpec(tuple(args.delta_range), tuple(args.mu_range), args.t)
        return RunConfig(cmd, grid=grid, out=_out_dir(args))

    kind = AnsatzKind.parse(args.ansatz)
    optimizer = _optimizer(args)
    if cmd == "vqe":
        chain = _chain(args)
        return RunConfig(cmd, chain, AnsatzSpec(kind, chain.n, args.layers), optimizer,
                         out=_out_dir(args), seed=args.seed)
    if cmd == "layer-scan":
        chain = _chain(args)
        if args.min_layers > args.max_layers:
            raise ValueError(f"empty layer range {args.min_layers}..{args.max_layers}")
        spec = AnsatzSpec(kind, chain.n, args.min_layers)
        return RunConfig(cmd, chain, spec, optimizer, out=_out_dir(args), seed=args.seed)
    if cmd == "error-scan":
        if args.jobs < 1:
            raise ValueError("--jobs must be >= 1")
        grid = scan.GridSpec(tuple(args.delta_range), tuple(args.mu_range), args.t)
        spec = AnsatzSpec(kind, args.n, args.layers)
        ChainParams(args.n, args.t, 0.0, 0.0)
        return RunConfig(cmd, None, spec, optimizer, grid, _out_dir(args), args.seed)
    raise ValueError(f"unknown command {cmd!r}")


def _flag_echo(args: argparse.Namespace) -> dict[str, object]:
    out = {"command": args.command}
    for key, value in vars(args).items():
        if key in _NOT_ECHOED:
            continue
        if value is None:
            value = "none"
        out[key] = value
    return out


def _prepare_out(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise OSError(f"output directory {path} is not writable")


def _spectrum(values: np.ndarray) -> str:
    return " ".join(f"{v:.12g}" for v in values)


def cmd_ed(args: argparse.Namespace, cfg: RunConfig) -> int:
    chain = cfg.chain
    for parity in Parity:
        print(f"{parity} spectrum: {_spectrum(sector_eigenvalues(chain, parity))}")
    energy, parity = ground_energy(chain)
    print(f"ground energy: {energy:.12g} ({parity})")
    print(f"gap: {even_odd_gap(chain):.12g}")
    return 0


def cmd_spectra_match(args: argparse.Namespace, cfg: RunConfig) -> int:
    chain = cfg.chain
    if args.random:
        t, delta, mu = np.random.default_rng(args.seed).uniform(-2.0, 2.0, 3)
        chain = ChainParams(chain.n, t, delta, mu)
    deviation = spectra_match(chain)
    print(f"n: {chain.n}")
    print(f"t: {chain.t!r}\ndelta: {chain.delta!r}\nmu: {chain.mu!r}")
    print(f"max deviation: {deviation:.3e}")
    if deviation > args.tol:
        print(f"deviation exceeds tolerance {args.tol:g}", file=sys.stderr)
        return 1
    return 0


def cmd_vqe(args: argparse.Namespace, cfg: RunConfig) -> int:
    chain, spec, config = cfg.chain, cfg.ansatz, cfg.optimizer
    _prepare_out(cfg.out)
    best, runs = vqe.multi_restart(jw_hamiltonian(chain), spec.build(chain), config)
    exact, _ = ground_energy(chain)
    summary = _flag_echo(args)
    summary.update(
        vqe.run_summary(
            best,
            ansatz=spec.kind.value,
            layers=spec.layers,
            chain=chain,
            config=config,
            exact_energy=exact,
            parameter_count=spec.parameter_count,
        )
    )
    vqe.write_summary(summary, cfg.out / "summary.txt")
    vqe.write_trace(best, cfg.out / "trace.csv")
    vqe.write_evaluations(runs, cfg.out / "evaluations.csv")
    print(f"final energy: {best.final_energy!r}")
    print(f"exact energy: {exact!r}")
    print(f"relative error: {summary['relative_error']!r}")
    return 0


def cmd_layer_scan(args: argparse.Namespace, cfg: RunConfig) -> int:
    _prepare_out(cfg.out)
    rows = vqe.layer_scan(
        cfg.ansatz.kind,
        cfg.chain,
        range(args.min_layers, args.max_layers + 1),
        cfg.optimizer,
    )
    lines = ["layers,parameter_count,energy,exact_energy,relative_error"]
    for row in rows:
        lines.append(
            f"{row.layers},{row.parameter_count},{row.energy!r},"
            f"{row.exact_energy!r},{row.relative_error!r}"
        )
    (cfg.out / "layer_scan.csv").write_text("\n".join(lines) + "\n")
    summary = _flag_echo(args)
    summary["estimator"] = cfg.optimizer.estimator
    summary["optimizer"] = vqe.OPTIMIZER_NAME
    vqe.write_summary(summary, cfg.out / "summary.txt")
    print("\n".join(lines))
    return 0


def _write_scan(result: scan.ScanResult, args: argparse.Namespace, out: Path,
                color_scale: str) -> None:
    scan.write_csv(result, out / "scan.csv")
    scan.write_svg_heatmap(result, out / "scan.svg", color_scale, args.threshold)
    summary = _flag_echo(args)
    summary.update({f"meta_{k}": v for k, v in result.metadata.items()})
    summary["failed_cells"] = len(result.failures)
    vqe.write_summary(summary, out / "summary.txt")
    errors = out / "scan_errors.txt"
    if result.failures:
        errors.write_text(
            "".join(f"{i},{j}: {message}\n" for i, j, message in result.failures)
        )
    elif errors.exists():
        errors.unlink()


def cmd_phase_scan(args: argparse.Namespace, cfg: RunConfig) -> int:
    _prepare_out(cfg.out)
    result = scan.phase_gap_scan(cfg.grid, args.n)
    _write_scan(result, args, cfg.out, args.color_scale or "linear")
    print(f"wrote {cfg.out / 'scan.csv'} and {cfg.out / 'scan.svg'}")
    return 0


def cmd_error_scan(args: argparse.Namespace, cfg: RunConfig) -> int:
    _prepare_out(cfg.out)
    result = scan.vqe_error_scan(
        cfg.grid, args.n, cfg.ansatz.kind, args.layers, cfg.optimizer, jobs=args.jobs
    )
    _write_scan(result, args, cfg.out, args.color_scale or "log")
    print(f"wrote {cfg.out / 'scan.csv'} and {cfg.out / 'scan.svg'}")
    if result.failures:
        print(
            f"{len(result.failures)} cells failed; see {cfg.out / 'scan_errors.txt'}",
            file=sys.stderr,
        )
        return 1
    return 0


def _add_model(p: argparse.ArgumentParser, n: int) -> None:
    p.add_argument("--n", type=int, default=n, help="number of sites (default %(default)s)")
    p.add_argument("--t", type=float, default=-1.0, help="hopping (default %(default)s)")
    p.add_argument("--delta", type=float, default=1.0, help="pairing (default %(default)s)")
    p.add_argument("--mu", type=float, default=0.0, help="chemical potential (default %(default)s)")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})"
    )


def _add_vqe(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ansatz", default="even", help="even, odd, su2 or hva (default %(default)s)")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=None,
                   help="shots per measurement group; omit for the exact estimator")
    p.add_argument("--max-iterations", type=int, default=5000)
    p.add_argument("--convergence-tol", type=float, default=1e-8)


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta-range", type=float, nargs=3, default=[-2.0, 2.0, 41],
                   metavar=("MIN", "MAX", "STEPS"), help="delta/|t| axis")
    p.add_argument("--mu-range", type=float, nargs=3, default=[-4.0, 4.0, 41],
                   metavar=("MIN", "MAX", "STEPS"), help="mu/|t| axis")
    p.add_argument("--threshold", type=float, nargs="*", default=[],
                   help="outline cells with |value| below each level")
    p.add_argument("--color-scale", choices=("linear", "log"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitaev-vqe", description="Kitaev chain exact diagonalization and VQE."
    )
    parser.add_argument("--config", default=None, help="file of key=value flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ed", help="print both sector spectra and the even-odd gap")
    _add_model(p, 5)
    p.set_defaults(handler=cmd_ed)

    p = sub.add_parser("spectra-match", help="compare fermionic and spin spectra")
    _add_model(p, 6)
    p.add_argument("--random", action="store_true", help="draw t, delta, mu from [-2, 2]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(handler=cmd_spectra_match)

    p = sub.add_parser("vqe", help="run VQE; writes summary.txt, trace.csv, evaluations.csv")
    _add_model(p, 10)
    _add_vqe(p)
    p.add_argument("--layers", type=int, default=1)
    _add_out(p)
    p.set_defaults(handler=cmd_vqe)

    p = sub.add_parser("layer-scan", help="VQE error versus layer count")
    _add_model(p, 5)
    _add_vqe(p)
    p.add_argument("--min-layers", type=int, default=1)
    p.add_argument("--max-layers", type=int, default=10)
    _add_out(p)
    p.set_defaults(handler=cmd_layer_scan)

    p = sub.add_parser("phase-scan", help="even-odd gap over (delta/|t|, mu/|t|)")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--t", type=float, default=-1.0)
    _add_grid(p)
    _add_out(p)
    p.set_defaults(handler=cmd_phase_scan)

    p = sub.add_parser("error-scan", help="VQE relative error over (delta/|t|, mu/|t|)")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--t", type=float, default=-1.0)
    p.add_argument("--layers", type=int, default=1)
    _add_vqe(p)
    _add_grid(p)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_out(p)
    p.set_defaults(handler=cmd_error_scan)
    return parser


def _config_tokens(path: str, subparser: argparse.ArgumentParser) -> list[str]:
    """Turn a key-value file into flag tokens; unknown keys raise ``UsageError``."""
    known = {
        opt: action
        for action in subparser._actions
        for opt in action.option_strings
        if opt.startswith("--")
    }
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    tokens: list[str] = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        key, found, value = line.partition(sep)
        flag = "--" + key.strip().replace("_", "-")
        if not found or flag not in known or flag in ("--help", "--config"):
            raise UsageError(f"{path}:{number}: unknown config key {key.strip()!r}")
        action = known[flag]
        if action.nargs == 0:
            if value.strip().lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
            continue
        tokens.append(flag)
        tokens.extend(shlex.split(value.replace(",", " ")))
    return tokens


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        tokens = _config_tokens(args.config, _subparser(parser, args.command))
    except UsageError as exc:
        parser.error(str(exc))
    argv = list(argv)
    at = argv.index(args.command) + 1
    merged = parser.parse_args(argv[:at] + tokens + argv[at:])
    return merged


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    try:
        cfg = build_config(args)
    except ValueError as exc:
        print(f"kitaev-vqe {args.command}: error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.handler(args, cfg)
    except (OSError, ArithmeticError, RuntimeError, MemoryError) as exc:
        print(f"kitaev-vqe {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
