"""Command-line entry point: figure data as CSV and the acceptance suite.

Exit codes: 0 success, 2 invalid arguments, 3 solver failure (partial
output is still written, with the failing step in the header), 4 failed
verification.
"""
from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


@dataclass
class RunManifest:
    """Everything needed to rerun a command; written as ``#`` lines atop each file."""

    subcommand: str
    argv: List[str]
    params: dict
    grid: str = ""
    seed: Optional[int] = None
    out: str = "-"
    results: dict = field(default_factory=dict)

    def lines(self) -> List[str]:
        out = [f"heatpot {__version__}",
               f"command: heatpot {' '.join(shlex.quote(a) for a in self.argv)}",
               f"subcommand: {self.subcommand}"]
        out += [f"{k}: {v}" for k, v in self.params.items()]
        if self.grid:
            out.append(f"grid: {self.grid}")
        if self.seed is not None:
            out.append(f"seed: {self.seed}")
        out.append(f"output: {self.out}")
        out += [f"{k}: {v}" for k, v in self.results.items()]
        return ["# " + s for s in out]


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def write_csv(path: str, manifest: RunManifest, columns: Sequence[str], data: Sequence[np.ndarray],
              gnuplot: bool = False) -> None:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in data])
    text = "\n".join(manifest.lines()) + "\n" + ",".join(columns) + "\n"
    text += "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    if gnuplot:
        if path == "-":
            raise ValueError("--gnuplot needs --out FILE")
        plots = ", ".join(f"'{path}' using 1:{i + 2} with lines title '{c}'"
                          for i, c in enumerate(columns[1:]))
        with open(path.rsplit(".", 1)[0] + ".gp", "w", newline="\n") as fh:
            fh.write(f"set datafile separator ','\nset key autotitle columnhead\n"
                     f"set xlabel '{columns[0]}'\nplot {plots}\n")


# ---------------------------------------------------------------------------
# subcommands


def _report_failure(manifest: RunManifest, report) -> int:
    if report.converged:
        return EXIT_OK
    manifest.results["failed_step"] = report.failed_step
    manifest.results["failure_time"] = _fmt(report.failure_time)
    manifest.results["message"] = report.message
    return EXIT_SOLVER


def _cmd_default_boundary(a, manifest):
    from .default_boundary import CalibrationInput, calibrate
    inp = CalibrationInput(a.eta, a.tau, a.T, a.N, a.form, a.grading)
    manifest.grid = f"graded on [{a.tau}, {a.T}], N={a.N}"
    cb = calibrate(inp)
    for w in cb.report.warnings:
        manifest.results.setdefault("warning", w)
    code = _report_failure(manifest, cb.report)
    return code, ["t", "b", "nu"], [cb.b.t, cb.b.values, cb.nu.values]


def _cmd_meanfield(a, manifest):
    from .meanfield import MeanFieldParams, solve
    sol = solve(MeanFieldParams(a.alpha, a.z, a.T, a.N))
    manifest.grid = f"uniform on [0, {a.T}], N={a.N}"
    code = _report_failure(manifest, sol.report)
    if sol.blowup_time is not None:
        manifest.results["blowup_time"] = _fmt(sol.blowup_time)
    return code, ["t", "L", "mu", "nu"], [sol.mu.t, sol.L.values, sol.mu.values, sol.nu.values]


def _cmd_ou_hitting(a, manifest):
    from .core import parse_boundary
    from .ou_hitting import OUHittingInput, solve_general
    d = solve_general(OUHittingInput(a.z, parse_boundary(a.boundary), a.T), a.N)
    manifest.grid = f"uniform in heat time, N={a.N}"
    return EXIT_OK, ["t", "pdf", "cdf"], [d.t, d.pdf.values, d.cdf.values]


def _cmd_stefan(a, manifest):
    from .stefan import StefanParams, solve
    sol = solve(StefanParams(a.alpha, a.z, a.T, a.N))
    manifest.grid = f"uniform on [0, {a.T}], N={a.N}"
    code = _report_failure(manifest, sol.report)
    return code, ["t", "b", "nu"], [sol.b.t, sol.b.values, sol.nu.values]


def _cmd_neuron(a, manifest):
    from .neuron import NeuronParams, evaluate_profile, solve_stationary
    prof = solve_stationary(NeuronParams(a.x0, a.m0, a.m1))
    x = np.linspace(a.xmin, 0.0, a.points)
    p, dp = evaluate_profile(prof, x)
    manifest.results["lambda"] = _fmt(prof.lam)
    manifest.grid = f"uniform x on [{a.xmin}, 0], {a.points} points"
    return EXIT_OK, ["x", "p", "dp"], [x, p, dp]


def _cmd_mc(a, manifest):
    from .core import parse_boundary
    from .mc_oracle import McConfig, first_passage, meanfield_particles
    cfg = McConfig(a.paths, a.dt, a.seed, not a.no_bridge)
    times = np.linspace(0.0, a.T, a.points)
    manifest.seed = a.seed
    manifest.grid = f"dt={a.dt}, {a.points} output times on [0, {a.T}]"
    if a.process == "meanfield":
        est = meanfield_particles(a.alpha, a.z, times, cfg)
    else:
        est = first_passage(a.process, parse_boundary(a.boundary), a.z, times, cfg)
    return EXIT_OK, ["t", "value", "se"], [est.t, est.values, est.se]


def _cmd_verify(a) -> int:
    from .acceptance import run_all
    numbers = None if not a.only else [int(v) for v in a.only.split(",")]
    checks = run_all(numbers, echo=print)
    failed = [c.number for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heatpot", description="Heat-potential solvers for moving boundaries.")
    p.add_argument("--version", action="version", version=f"heatpot {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def out_args(sp):
        sp.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
        sp.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script next to --out")

    sp = sub.add_parser("default-boundary", help="calibrate the default barrier to intensity eta")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--T", type=float, default=10.0)
    sp.add_argument("--N", type=int, default=1000)
    sp.add_argument("--form", choices=("differential", "integrated"), default="differential")
    sp.add_argument("--grading", type=float, default=None)
    out_args(sp)

    sp = sub.add_parser("meanfield", help="mean-field loss cascade")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--T", type=float, default=5.0)
    sp.add_argument("--N", type=int, default=500)
    out_args(sp)

    sp = sub.add_parser("ou-hitting", help="OU hitting-time pdf and cdf")
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--boundary", default="flat:0", help="flat:L | lin:L,S | sin:L,A,W | exp:A,B | file:PATH")
    sp.add_argument("--T", type=float, default=2.0)
    sp.add_argument("--N", type=int, default=500)
    out_args(sp)

    sp = sub.add_parser("stefan", help="supercooled Stefan free boundary")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--N", type=int, default=400)
    out_args(sp)

    sp = sub.add_parser("neuron", help="stationary integrate-and-fire profile")
    sp.add_argument("--x0", type=float, required=True)
    sp.add_argument("--m0", type=float, required=True)
    sp.add_argument("--m1", type=float, required=True)
    sp.add_argument("--xmin", type=float, default=-5.0)
    sp.add_argument("--points", type=int, default=501)
    out_args(sp)

    sp = sub.add_parser("mc", help="Monte Carlo first passage or particle system")
    sp.add_argument("--process", choices=("wiener", "ou", "meanfield"), default="wiener")
    sp.add_argument("--boundary", default="flat:0")
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=11)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-bridge", action="store_true")
    out_args(sp)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--only", default="", help="comma-separated check numbers")
    return p


COMMANDS = {"default-boundary": _cmd_default_boundary, "meanfield": _cmd_meanfield,
            "ou-hitting": _cmd_ou_hitting, "stefan": _cmd_stefan, "neuron": _cmd_neuron,
            "mc": _cmd_mc}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if a.command == "verify":
        return _cmd_verify(a)
    params = {k: v for k, v in vars(a).items() if k not in ("command", "out", "gnuplot")}
    manifest = RunManifest(a.command, argv, params, out=a.out)
    try:
        code, columns, data = COMMANDS[a.command](a, manifest)
        write_csv(a.out, manifest, columns, data, a.gnuplot)
    except ValueError as exc:
        print(f"heatpot {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"heatpot {a.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if code == EXIT_SOLVER:
        print(f"heatpot {a.command}: {manifest.results.get('message', 'solver failure')}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())
