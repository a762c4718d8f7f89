"""Command line interface: ``aeflow <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 monitor
failure.  JSON summaries go to standard output; files go to ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import entropy, flow, heat, io, mass, soliton
from .config import Config, ConfigError, load_config, parse_config
from .geometry import InvalidProfileError, MassUndefinedError
from .harness import EXIT_INPUT, EXIT_MONITOR, EXIT_NUMERICAL, EXIT_OK, run_scenario, sweep

log = logging.getLogger("aeflow")


class _InputError(Exception):
    pass


def _floats(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _emit(obj, out: Path | None, name: str) -> None:
    text = io.to_json(obj)
    sys.stdout.write(text)
    if out is not None:
        io.atomic_write(out / name, text)


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else parse_config("")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg = parse_config(f"{k}={v}", base=cfg)
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    rep = run_scenario(None, cfg)
    out = Path(args.out) if args.out else None
    if out is not None:
        io.atomic_write(out / "config.txt", cfg.to_text())
        if rep.trajectory is not None:
            io.write_run_dir(out, rep.trajectory)
        io.write_json(out / "timing.json", rep.timing)
    _emit(rep, out, "summary.json")
    return rep.exit_code


def cmd_mass(args) -> int:
    prof = io.read_profile(args.profile)
    rep = mass.adm_mass(prof, radii=args.rmax_list)
    out = Path(args.out) if args.out else None
    if out is not None:
        lines = ["radius,estimate"] + [f"{r!r},{v!r}" for r, v in rep.mass_estimates]
        io.atomic_write(out / "mass.csv", "\n".join(lines) + "\n")
    _emit(rep, out, "mass.json")
    return EXIT_OK


def _mu_outputs(sols, prof, out) -> int:
    if out is not None:
        for s in sols:
            io.write_field(out / f"mu_tau_{s.tau!r}.csv", prof.r, s.u, "u", {"n": prof.n, "tau": repr(s.tau)})
    return EXIT_OK if all(s.converged for s in sols) else EXIT_NUMERICAL


def cmd_mu(args) -> int:
    prof = io.read_profile(args.profile)
    sol = entropy.minimize_mu(prof, args.tau)
    out = Path(args.out) if args.out else None
    code = _mu_outputs([sol], prof, out)
    _emit(sol, out, "mu.json")
    return code


def cmd_mu_sweep(args) -> int:
    prof = io.read_profile(args.profile)
    sols = [entropy.minimize_mu(prof, t) for t in args.taus]
    out = Path(args.out) if args.out else None
    code = _mu_outputs(sols, prof, out)
    _emit({"solutions": sols}, out, "mu_sweep.json")
    return code


def cmd_heat(args) -> int:
    run_dir = Path(args.run_dir)
    traj = io.read_run_dir(run_dir)
    sol = heat.solve_heat(traj, args.sigma, p=args.p)
    ly = heat.li_yau_check(sol)
    lp_ok, _ = heat.lp_dissipation(sol)
    summary = {"sigma": sol.sigma, "p": sol.p, "c1": ly.c1, "lp_nonincreasing": lp_ok}
    code = EXIT_OK if lp_ok else EXIT_MONITOR
    try:
        d = heat.decay_fit(sol)
        summary["decay"] = {"slope": d.slope, "delta": d.delta, "C": d.C, "pass": d.passed}
        if not d.passed:
            code = EXIT_MONITOR
    except flow.WindowError as exc:
        summary["decay"] = {"skipped": str(exc)}
    out = Path(args.out) if args.out else run_dir
    io.write_series(out / "heat_series.csv", sol.times, sol.diagnostics)
    _emit(summary, out, "heat_summary.json")
    return code


def cmd_soliton(args) -> int:
    prof = io.read_profile(args.profile)
    r, f = io.read_field(args.potential)
    if r.shape != prof.r.shape or not np.array_equal(r, prof.r):
        raise _InputError("potential file must use the profile's nodes")
    cand = soliton.SolitonCandidate(prof, f, args.lam)
    res = soliton.soliton_residual(cand)
    report = {"lambda": cand.lam, "sup_residual": res.sup_residual,
              "is_soliton": res.sup_residual <= soliton.NOT_A_SOLITON}
    if cand.lam == 0:
        report["hamilton"] = soliton.hamilton_identity_check(cand)
    out = Path(args.out) if args.out else None
    _emit(report, out, "soliton.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = Path(args.out) if args.out else None
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    reports = sweep(args.axis, values, cfg)
    rows = []
    for v, rep in zip(values, reports):
        if out is not None:
            sub = out / f"{args.axis}={v}"
            if rep.trajectory is not None:
                io.write_run_dir(sub, rep.trajectory, rep)
        rows.append({"value": v, "report": rep})
    _emit({"axis": args.axis, "items": rows}, out, "sweep.json")
    codes = [r.exit_code for r in reports]
    return max(codes) if codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aeflow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="key=value configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration key")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("run", help="flow a scenario and evaluate its monitors")
    with_config(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("mass", help="ADM mass of a profile")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--rmax-list", type=_floats, help="comma-separated sampling radii")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_mass)

    sp = sub.add_parser("mu", help="entropy minimizer at one scale")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_mu)

    sp = sub.add_parser("mu-sweep", help="entropy minimizers over several scales")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--taus", type=_floats, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_mu_sweep)

    sp = sub.add_parser("heat", help="heat equation along a stored run")
    sp.add_argument("--run-dir", required=True)
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--p", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_heat)

    sp = sub.add_parser("soliton", help="soliton residual of a profile and potential")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--potential", required=True, help="two-column r,f file")
    sp.add_argument("--lambda", dest="lam", type=int, choices=(0, -1, 1), required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_soliton)

    sp = sub.add_parser("sweep", help="run one scenario per value of a configuration key")
    with_config(sp)
    sp.add_argument("--axis", required=True, help="configuration key, e.g. grid.N")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidProfileError, MassUndefinedError, entropy.ContractError,
            _InputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"aeflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (flow.SingularityError, heat.HeatError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"aeflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"aeflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
