"""Command-line entry point: ``gev verify``, ``gev qm ...``, ``gev list-claims``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .report import build_report, emit_report, trajectory_csv, write_atomic

log = logging.getLogger("gev")

GROUPS = {"su2": ("su2",), "su3": ("su3",), "both": ("su2", "su3")}


class ConfigError(ValueError):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _power_of_two(text):
    v = int(text)
    if v < 8 or v & (v - 1):
        raise argparse.ArgumentTypeError("grid size must be a power of two >= 8")
    return v


def _output_args(p):
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", help="report path (written atomically); stdout if omitted")


def make_parser():
    parser = argparse.ArgumentParser(prog="gev", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify catalog claims")
    v.add_argument("--claims", default="", help="comma separated ids; empty means all")
    v.add_argument("--mode", choices=("symbolic", "numeric", "both"), default="both")
    v.add_argument("--group", choices=tuple(GROUPS), default="both")
    v.add_argument("--trials", type=_positive_int, default=100)
    v.add_argument("--seed", type=int, default=0, help="overridden by $GEV_SEED")
    v.add_argument("--tol", type=_positive_float, default=1e-10)
    v.add_argument("--allow-conditional", action="store_true",
                   help="count conditional claims as passing")
    _output_args(v)

    sub.add_parser("list-claims", help="print the claim catalog")

    q = sub.add_parser("qm", help="wave-packet experiments")
    qs = q.add_subparsers(dest="experiment", required=True)

    s = qs.add_parser("schrodinger")
    s.add_argument("--potential", default="harmonic:1.0")
    s.add_argument("--grid", type=_power_of_two, default=1024)
    s.add_argument("--domain", type=_positive_float, default=40.0)
    s.add_argument("--dt", type=_positive_float, default=1e-3)
    s.add_argument("--steps", type=_positive_int, default=6283)
    s.add_argument("--mass", type=_positive_float, default=1.0)
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--p0", type=float, default=0.0)
    s.add_argument("--sigma", type=_positive_float, default=None,
                   help="packet width; default is the coherent width for harmonic, else 1")
    s.add_argument("--csv", help="trajectory CSV path")
    _output_args(s)

    d = qs.add_parser("dirac-packet")
    d.add_argument("--mass", type=_positive_float, default=1.0)
    d.add_argument("--py", type=float, default=0.3)
    d.add_argument("--pz", type=float, default=-0.2)
    d.add_argument("--p0", type=float, default=1.0)
    d.add_argument("--width", type=_positive_float, default=0.5)
    d.add_argument("--nodes", type=_positive_int, default=512)
    d.add_argument("--p-max", type=_positive_float, default=12.0)
    d.add_argument("--amplitudes", default="1,0", help="weights of A1,A2")
    d.add_argument("--csv", help="per-node CSV path")
    _output_args(d)

    f = qs.add_parser("dirac-force")
    f.add_argument("--potential", default="gaussian:1.0,1.0", help="zero | linear:k | gaussian:a,s")
    f.add_argument("--grid", type=_power_of_two, default=1024)
    f.add_argument("--domain", type=_positive_float, default=40.0)
    f.add_argument("--dt", type=_positive_float, default=5e-3)
    f.add_argument("--steps", type=_positive_int, default=400)
    f.add_argument("--mass", type=_positive_float, default=1.0)
    f.add_argument("--charge", type=float, default=1.0)
    f.add_argument("--x0", type=float, default=-1.0)
    f.add_argument("--p0", type=float, default=0.5)
    f.add_argument("--sigma", type=_positive_float, default=1.0)
    f.add_argument("--csv", help="trajectory CSV path")
    _output_args(f)
    return parser


def _seed(args):
    env = os.environ.get("GEV_SEED")
    if env is None or env == "":
        return args.seed
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"GEV_SEED must be an integer, got {env!r}") from None


def _emit(report, args):
    text = emit_report(report, args.format, args.output)
    if args.output is None:
        sys.stdout.write(text)


def _write_csv(args, columns):
    path = args.csv
    if path is None and args.output:
        path = os.path.splitext(args.output)[0] + ".csv"
    if path:
        write_atomic(path, trajectory_csv(columns))


def cmd_verify(args) -> int:
    from .suite import UnknownClaim, list_claims, verify_claim
    known = [c["id"] for c in list_claims()]
    ids = [s.strip() for s in args.claims.split(",") if s.strip()] or known
    bad = [i for i in ids if i not in known]
    if bad:
        raise UnknownClaim(", ".join(bad))
    ids = [i for i in known if i in ids]      # catalog order, no duplicates
    seed = _seed(args)
    config = {"command": "verify", "claims": ids, "mode": args.mode, "group": args.group,
              "trials": args.trials, "seed": seed, "tol": args.tol,
              "allow_conditional": args.allow_conditional}
    results = []
    for cid in ids:
        log.info("verifying %s", cid)
        results.append(verify_claim(cid, groups=GROUPS[args.group], trials=args.trials,
                                    seed=seed, tol=args.tol, mode=args.mode))
    _emit(build_report(config, results), args)
    return exit_status([r.status for r in results], args.allow_conditional)


def exit_status(statuses, allow_conditional=False) -> int:
    ok = {"verified", "conditional"} if allow_conditional else {"verified"}
    return 0 if statuses and all(s in ok for s in statuses) else 1


def _pad(series, n):
    out = np.full(n, np.nan)
    out[1:-1] = series
    return out


def cmd_schrodinger(args) -> int:
    from .qm.schrodinger import run_experiment
    params = {"potential": args.potential, "grid": args.grid, "domain": args.domain,
              "dt": args.dt, "steps": args.steps, "mass": args.mass, "x0": args.x0,
              "p0": args.p0, "sigma": args.sigma, "hbar": 1.0}
    tr, (rx, rp), summary = run_experiment(args.potential, args.grid, args.domain, args.dt,
                                           args.steps, args.mass, args.x0, args.p0, args.sigma)
    n = len(tr)
    _write_csv(args, {"t": tr.t, "x": tr.x, "p": tr.p, "force": tr.force, "norm": tr.norm,
                      "r_x": _pad(rx, n), "r_p": _pad(rp, n)})
    status = "ok" if summary["norm_drift"] < 1e-10 else "failed"
    entry = {"experiment": "schrodinger", "params": params, "status": status, **summary,
             "checks": {"norm_drift": summary["norm_drift"]}}
    entry.pop("norm_drift")
    _emit(build_report({"command": "qm schrodinger"}, qm=[entry]), args)
    return 0 if status == "ok" else 1


def cmd_dirac_packet(args) -> int:
    from .qm.dirac import MomentumAmplitudes, dirac_wavepacket_check, spinors
    try:
        c1, c2 = (float(v) for v in args.amplitudes.split(","))
    except ValueError:
        raise ConfigError("--amplitudes expects two numbers, e.g. 1,0") from None
    amps = MomentumAmplitudes.gaussian(args.nodes, args.p_max, args.p0, args.width, c1, c2,
                                       args.py, args.pz, args.mass)
    rep = dirac_wavepacket_check(amps)
    params = {"mass": args.mass, "py": args.py, "pz": args.pz, "p0": args.p0,
              "width": args.width, "nodes": args.nodes, "p_max": args.p_max,
              "amplitudes": [c1, c2], "hbar": 1.0, "c": 1.0}
    checks = {}
    for sector in ("positive", "negative"):
        for key in ("normalization_error", "norm_difference", "alpha_x_difference",
                    "alpha_x_cross_terms"):
            checks[f"{sector}.{key}"] = float(rep[sector][key])
    checks["sector_overlap"] = rep["sector_overlap"]
    checks["nonrelativistic_gap"] = rep["nonrelativistic_gap"]
    ok = all(v < 1e-12 for k, v in checks.items() if k.endswith(("difference", "cross_terms"))) \
        and all(v < 1e-13 for k, v in checks.items() if k.endswith(("error", "overlap")))
    entry = {"experiment": "dirac-packet", "params": params, "status": "ok" if ok else "failed",
             "max_residuals": {"norm": max(checks["positive.norm_difference"],
                                           checks["negative.norm_difference"]),
                               "alpha_x": max(checks["positive.alpha_x_difference"],
                                              checks["negative.alpha_x_difference"])},
             "expectations": {"velocity": rep["velocity"], "p_over_m": rep["p_over_m"],
                              "norm": rep["positive"]["norm_closed"]},
             "checks": checks}
    u = spinors(amps.px, amps.py, amps.pz, amps.m)
    from .qm.dirac import ALPHA_X
    w = np.abs(amps.a1) ** 2 + np.abs(amps.a2) ** 2
    _write_csv(args, {"px": amps.px, "E": amps.energy, "weight": w,
                      "u1_alpha_x_u1": np.einsum("ns,st,nt->n", u[:, 0].conj(), ALPHA_X, u[:, 0]).real,
                      "p_over_m": amps.px / amps.m})
    _emit(build_report({"command": "qm dirac-packet"}, qm=[entry]), args)
    return 0 if ok else 1


def cmd_dirac_force(args) -> int:
    from .qm.dirac import dirac_force_check
    params = {"potential": args.potential, "grid": args.grid, "domain": args.domain,
              "dt": args.dt, "steps": args.steps, "mass": args.mass, "charge": args.charge,
              "x0": args.x0, "p0": args.p0, "sigma": args.sigma, "hbar": 1.0, "c": 1.0}
    tr, (rp, rx), summary = dirac_force_check(args.potential, args.grid, args.domain, args.dt,
                                              args.steps, args.mass, args.charge, args.x0,
                                              args.p0, args.sigma)
    n = len(tr.t)
    _write_csv(args, {"t": tr.t, "x": tr.x, "p": tr.p, "alpha_x": tr.alpha_x,
                      "force": tr.force, "norm": tr.norm, "r_x": _pad(rx, n), "r_p": _pad(rp, n)})
    status = "ok" if summary["norm_drift"] < 1e-8 else "failed"
    entry = {"experiment": "dirac-force", "params": params, "status": status,
             "max_residuals": summary["max_residuals"],
             "half_dt_max_residuals": summary.get("half_dt_max_residuals", {}),
             "convergence_ratios": summary.get("convergence_ratios", {}),
             "checks": {"norm_drift": summary["norm_drift"],
                        "momentum_drift": summary["momentum_drift"]}}
    _emit(build_report({"command": "qm dirac-force"}, qm=[entry]), args)
    return 0 if status == "ok" else 1


def cmd_list_claims(args) -> int:
    from .suite import list_claims
    for c in list_claims():
        print(f"{c['id']:<5} {c['anchor']:<26} {c['strategy']:<18} {c['description']}")
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"verify": cmd_verify, "list-claims": cmd_list_claims}
    qm = {"schrodinger": cmd_schrodinger, "dirac-packet": cmd_dirac_packet,
          "dirac-force": cmd_dirac_force}
    handler = qm[args.experiment] if args.command == "qm" else handlers[args.command]
    from .suite import UnknownClaim
    try:
        return handler(args)
    except UnknownClaim as exc:
        parser.error(f"unknown claim id(s): {exc.args[0]}")
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"gev: cannot write report: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
