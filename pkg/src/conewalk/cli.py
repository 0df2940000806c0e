"""Command-line entry point.

Subcommands ``simulate``, ``verify``, ``decompose`` and ``geometry`` build a
one-off scenario from flags; ``scenario run`` and ``scenario check`` work on
scenario files.  Exit codes follow :func:`conewalk.experiments.run_scenario`.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ParseError
from .experiments import EXIT_RUNTIME, run_scenario
from .scenario import parse_scenario, parse_scenario_text


def _globals(p: argparse.ArgumentParser):
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, help="master seed (overrides the scenario)")
    g.add_argument("--runs", type=int, help="number of runs (overrides the scenario)")
    g.add_argument("--horizon", type=int, help="step horizon (overrides the scenario)")
    g.add_argument("--workers", type=int, help="worker threads")
    g.add_argument("--out", help="output directory (default: $CONEWALK_OUT or results/)")


def _kernel_flags(p: argparse.ArgumentParser):
    p.add_argument("--kernel", default="zero",
                   choices=["zero", "radial", "principal_a", "principal_b", "half_plane", "rwre"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--env-seed", type=int, default=0)
    p.add_argument("--chi-bound", type=float, default=0.125)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conewalk", description="Cone exit experiments for lattice walks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="batch of cone-exit times")
    _kernel_flags(p)
    p.add_argument("--x0", default="50 0", help="start point, space-separated")
    p.add_argument("--axis", default=None, help="cone axis (default e1)")
    p.add_argument("--half-angle", default="pi/2", help="radians, or pi/N")
    _globals(p)

    p = sub.add_parser("verify", help="check the assumption clauses at listed states")
    _kernel_flags(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--B0", type=float, default=1.0)
    p.add_argument("--states", required=True, help="points separated by ';', e.g. '1 0; 5 2'")
    _globals(p)

    p = sub.add_parser("decompose", help="split skeleton jumps into V and residual parts")
    _kernel_flags(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--x0", default="0 0")
    p.add_argument("--T", type=int, default=1000)
    _globals(p)

    p = sub.add_parser("geometry", help="Lyapunov contour and derivative checks")
    p.add_argument("--nu", type=float, default=0.2)
    p.add_argument("--s", type=float, default=0.25)
    p.add_argument("--points", type=int, default=1000)
    _globals(p)

    p = sub.add_parser("scenario", help="run or validate a scenario file")
    ssub = p.add_subparsers(dest="action", required=True)
    for name, text in (("run", "run a scenario"), ("check", "parse and validate only")):
        q = ssub.add_parser(name, help=text)
        q.add_argument("file")
        _globals(q)
    return ap


def _kernel_text(a) -> str:
    lines = [f"variant = {a.kernel}", f"dim = {a.dim}"]
    if a.kernel in ("radial", "principal_a", "principal_b"):
        lines += [f"c = {a.c!r}", f"beta = {a.beta!r}"]
    if a.kernel == "rwre":
        lines += [f"env_seed = {a.env_seed}", f"chi_bound = {a.chi_bound!r}"]
    return "[kernel]\n" + "\n".join(lines) + "\n"


def _adhoc(a) -> str:
    seed = a.seed if a.seed is not None else 0
    runs = a.runs or 100
    if a.command == "simulate":
        geo = f"[geometry]\nhalf_angle = {a.half_angle}\n" + (f"axis = {a.axis}\n" if a.axis else "")
        return (f"name = simulate\nexperiment = exit_cone\n{_kernel_text(a)}{geo}"
                f"[run]\nx0 = {a.x0}\nn_runs = {runs}\nhorizon = {a.horizon or 10**5}\n"
                f"master_seed = {seed}\n")
    if a.command == "verify":
        return (f"name = verify\nexperiment = verify_assumptions\n{_kernel_text(a)}"
                f"[assumptions]\nkappa = {a.kappa!r}\nk = {a.k}\nn0 = {a.n0}\nB0 = {a.B0!r}\n"
                f"[run]\nstates = {a.states}\nmaster_seed = {seed}\n[acceptance]\nexpect_pass = true\n")
    if a.command == "decompose":
        return (f"name = decompose\nexperiment = decompose\n{_kernel_text(a)}"
                f"[assumptions]\nkappa = {a.kappa!r}\n"
                f"[run]\nx0 = {a.x0}\nn_runs = {a.runs or 1}\nT = {a.horizon or a.T}\nmaster_seed = {seed}\n")
    return (f"name = geometry\nexperiment = geometry\n[geometry]\nnu = {a.nu!r}\ns = {a.s!r}\n"
            f"points = {a.points}\n[run]\nmaster_seed = {seed}\n")


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        if a.command == "scenario":
            sc = parse_scenario(a.file)
            if a.action == "check":
                print(f"ok {sc.name}: experiment={sc.experiment} master_seed={sc.master_seed} "
                      f"sha256={sc.digest[:12]}")
                return 0
            sc = sc.with_run(master_seed=a.seed, n_runs=a.runs, horizon=a.horizon)
        else:
            sc = parse_scenario_text(_adhoc(a), f"<{a.command}>")
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return run_scenario(sc, workers=a.workers, out_dir=a.out)


if __name__ == "__main__":
    sys.exit(main())
