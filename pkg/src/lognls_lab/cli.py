"""Command-line entry point: ``lognls-lab <command> --config PATH --out DIR``.

Commands: period, breather, evolve, superpose, lemmas. Every flag may also
be given through an environment variable ``LOGNLS_<FLAG>`` (e.g.
``LOGNLS_OUT``, ``LOGNLS_SEED``); explicit flags win.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 property violation.
"""

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from ._io import dump_json
from .breather import IntegrationError, energy_of, integrate, tau_bounds, turning_points
from .gaussian import sum_field
from .inequalities import run_all_sweeps
from .period import (SMALL_OSCILLATION_PERIOD, PeriodError, continuity_scan, period_alpha,
                     period_asymptotic_alpha, write_scan_csv)
from .spectral import SolverError, evolve_record, linf_lower_bound, write_manifest
from .superposition import (erf_tail, erf_tail_bound, gronwall_residual, run_superposition,
                            tail_check)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_PROPERTY = 0, 2, 3, 4
ENV_PREFIX = "LOGNLS_"

log = logging.getLogger("lognls_lab")


def cmd_period(doc, out, args):
    spec = cfg.parse_period(doc)
    for e in spec["errors"]:
        log.error("invalid entry: %s", e)
    summary = {"reference_small_oscillation": SMALL_OSCILLATION_PERIOD, "errors": list(spec["errors"]),
               "rows": [], "alphas": []}
    status = EXIT_VALIDATION if spec["errors"] else EXIT_OK
    if spec["energies"]:
        try:
            rows = continuity_scan(spec["energies"], oracle=spec["oracle"], threads=args.threads)
        except (PeriodError, IntegrationError) as exc:
            summary["failure"] = str(exc)
            dump_json(out / "period_summary.json", summary)
            log.error("%s", exc)
            return EXIT_NUMERICAL
        write_scan_csv(rows, out / "period_table.csv")
        summary["rows"] = [{"E": r.e_gamma, "T": r.t_quadrature, "ratio_asymptotic": r.ratio_asymptotic,
                            "ratio_oracle": None if math.isnan(r.ratio_oracle) else r.ratio_oracle}
                           for r in rows]
    for p in spec["alphas"]:
        try:
            res = period_alpha(p)
        except PeriodError as exc:
            summary["errors"].append(str(exc))
            status = EXIT_NUMERICAL
            continue
        summary["alphas"].append({"alpha_r": p.alpha_r, "alpha_i": p.alpha_i, "lambda": p.lam,
                                  "T_alpha": res.period, "method": res.method,
                                  "T_asymptotic": period_asymptotic_alpha(p).period})
    dump_json(out / "period_summary.json", summary)
    return status


def cmd_breather(doc, out, args):
    spec = cfg.parse_breather(doc)
    p = spec["param"]
    level = energy_of(p)
    period = period_alpha(p).period * 2.0 * p.lam
    try:
        traj = integrate(p, spec["periods"] * period, n_samples=spec["n_samples"])
    except IntegrationError as exc:
        log.error("%s", exc)
        dump_json(out / "breather_summary.json", {"failure": str(exc)})
        return EXIT_NUMERICAL
    traj.write_csv(out / "trajectory.csv")
    tp = turning_points(level)
    lo, hi = tau_bounds(level)
    drift = float(np.max(traj.energy_drift))
    confined = bool(np.all(traj.tau >= lo * (1 - 1e-12)) and np.all(traj.tau <= hi * (1 + 1e-12)))
    summary = {"gamma": [traj.gamma.real, traj.gamma.imag], "lambda": p.lam, "E": level.e_gamma,
               "gamma_minus": tp.gamma_minus, "gamma_plus": tp.gamma_plus,
               "tau_bounds": [lo, hi], "period_normalized": period,
               "period_physical": period / (2.0 * p.lam), "max_energy_drift": drift,
               "energy_ok": drift < spec["energy_tolerance"], "confined": confined}
    dump_json(out / "breather_summary.json", summary)
    return EXIT_OK if summary["energy_ok"] and confined else EXIT_PROPERTY


def cmd_evolve(doc, out, args):
    spec = cfg.parse_evolve(doc)
    grid, controls = spec["grid"], spec["controls"]
    u0 = sum_field(spec["packets"], 0.0, grid)
    try:
        rec = evolve_record(u0, spec["t_end"], controls, spec["snapshots"], workers=args.threads,
                            monitor_every=spec["monitor_every"])
    except SolverError as exc:
        log.error("%s", exc)
        dump_json(out / "manifest.json", {"failure": str(exc)})
        return EXIT_NUMERICAL
    checks = []
    for i, (t, f) in enumerate(rec.snapshots):
        f.write_csv(out / f"snapshot_{i:03d}.csv")
        top, bound = linf_lower_bound(f, controls.lam)
        exact = sum_field(spec["packets"], t, grid) if len(spec["packets"]) == 1 else None
        checks.append({"t": t, "max_abs": top, "linf_lower_bound": bound, "bound_ok": top >= bound - 1e-10,
                       "error_vs_exact": None if exact is None else f.distance(exact)})
    m = rec.masses
    drift = max(abs(x - m[0]) for x in m) / m[0] if m and m[0] > 0 else 0.0
    write_manifest(out / "manifest.json", grid, controls, rec,
                   {"snapshots": checks, "mass_relative_drift": drift})
    return EXIT_OK if all(c["bound_ok"] for c in checks) else EXIT_PROPERTY


def cmd_superpose(doc, out, args):
    spec = cfg.parse_superpose(doc)
    rep = run_superposition(spec["packets"], spec["grid"], spec["controls"], spec["t_end"],
                            spec["sample"], delta=spec["delta"], c_d=spec["c_d"],
                            stop_at_horizon=spec["stop_at_horizon"], workers=args.threads)
    dominated = rep.dominated(spec["c_d"], floor=spec["error_floor"])
    rep.extra.update({"c_d": spec["c_d"], "error_floor": spec["error_floor"],
                      "dominated_by_c_d": dominated,
                      "gronwall_residual": gronwall_residual(rep, spec["lam"])})
    rep.write(out / "report.json", out / "series.csv")
    if not rep.completed:
        log.error("%s", rep.failure)
        return EXIT_NUMERICAL
    if not (rep.admissible and dominated):
        log.warning("property check failed: admissible=%s dominated_by_c_d=%s",
                    rep.admissible, dominated)
        return EXIT_PROPERTY
    return EXIT_OK


def _tail_rows(spec, rng):
    # (gamma, R, d, |x0|) drawn log-uniformly in gamma with R >= gamma^(-1/2), |x0| <= 2R
    rows = []
    for _ in range(spec["tail_checks"]):
        d = int(rng.choice(spec["tail_dimensions"]))
        gamma = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
        R = gamma ** -0.5 * float(rng.uniform(1.0, 4.0))
        a = 2.0 * R * float(rng.random())
        vals, bounds, ok = tail_check(gamma, R, d, a)
        rows.append({"d": d, "gamma": gamma, "R": R, "x0_norm": a, "integrals": vals,
                     "bounds": bounds, "ok": all(ok)})
    return rows


def cmd_lemmas(doc, out, args):
    spec = cfg.parse_lemmas(doc)
    sweeps = run_all_sweeps(spec["samples"], args.seed)
    rows = _tail_rows(spec, np.random.default_rng([args.seed, 1]))
    with open(out / "tail_checks.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "gamma", "R", "x0_norm", "I1", "I2", "I3", "B1", "B2", "B3", "ok"])
        for r in rows:
            w.writerow([r["d"]] + [repr(v) for v in (r["gamma"], r["R"], r["x0_norm"])]
                       + [repr(float(v)) for v in r["integrals"] + r["bounds"]] + [r["ok"]])
    erf_rows = [{"y": y, "gamma": g, "integral": erf_tail(y, g), "bound": erf_tail_bound(y, g)}
                for y, g in ((1.0, 1.0), (2.0, 1.0), (2.0, 0.5))]
    for r in erf_rows:
        r["ok"] = r["integral"] <= r["bound"]
    violations = [s.to_dict() for s in sweeps if not s.passed]
    violations += [dict(r, check="tail_bound") for r in rows if not r["ok"]]
    violations += [dict(r, check="erf_tail") for r in erf_rows if not r["ok"]]
    summary = {"seed": args.seed, "samples": spec["samples"],
               "min_gaps": {s.name: s.min_gap for s in sweeps},
               "sweeps": [s.to_dict() for s in sweeps],
               "tail_checks": len(rows), "tail_bounds_ok": all(r["ok"] for r in rows),
               "erf_tail": erf_rows, "passed": not violations}
    if violations:
        dump_json(out / "counterexamples.json", violations)
        log.warning("%d property violation(s); see counterexamples.json", len(violations))
    dump_json(out / "lemmas_summary.json", summary)
    return EXIT_PROPERTY if violations else EXIT_OK


COMMANDS = {"period": cmd_period, "breather": cmd_breather, "evolve": cmd_evolve,
            "superpose": cmd_superpose, "lemmas": cmd_lemmas}


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def build_parser():
    p = argparse.ArgumentParser(prog="lognls-lab", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", default=_env("config"), help="JSON config file")
    p.add_argument("--out", default=_env("out", "out"), help="output directory")
    p.add_argument("--seed", type=int, default=int(_env("seed", "0")), help="seed for randomized sweeps")
    p.add_argument("--threads", type=int, default=int(_env("threads", "1")),
                   help="worker threads for scans and FFTs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except ValueError as exc:  # a malformed LOGNLS_* integer
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.config is None:
        log.error("--config is required (or set %sCONFIG)", ENV_PREFIX)
        return EXIT_VALIDATION
    if args.threads < 1:
        log.error("--threads must be >= 1")
        return EXIT_VALIDATION
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_VALIDATION
    if not os.access(out, os.W_OK):
        log.error("output directory %s is not writable", out)
        return EXIT_VALIDATION
    try:
        doc = cfg.load_json(args.config)
        return COMMANDS[args.command](doc, out, args)
    except cfg.ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_VALIDATION
    except (PeriodError, IntegrationError, SolverError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
