"""Command-line front end.

Four subcommands: ``allocate`` optimizes one scenario file and prints an
allocation JSON, ``bound`` prints the certificate only, ``montecarlo``
runs a batch experiment to CSV plus a plot script, and ``validate`` runs
an invariant suite against a scenario and reports PASS/FAIL per check.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bounds import certificate_from_relaxations, lower_bound, solve_all_relaxations
from .crlb import AllocationPair, all_components, trace_crlb, unified_cost
from .errors import RadallocError
from .harness import ExperimentConfig, emit_plot_script, run_experiment
from .localization import ToaObservation, blue_estimate, toa_noise_sigma
from .scenario import (
    Budgets, LayoutDistribution, Scenario, distances, random_scenario,
)
from .spca import (
    PROBLEM_EXPONENT, allocate, canonical_problem, evaluate_uniform,
)
from .subproblem import build_subproblem, split_psd_nsd

SCENARIO_SCHEMA_HELP = """\
Scenario JSON schema:
  {
    "consts": {"carrier_freq_hz": ..., "speed_of_light_m_per_s": ...,
               "noise_psd_w_per_hz": ..., "pulse_rep_freq_hz": ...,
               "integration_time_s": ...},
    "transmitters": [[x, y], ...],
    "receivers":    [[x, y], ...],
    "targets":      [[x, y], ...],
    "gains":        [[re, im], ...]   # m-major, then q, then n
  }
"""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radalloc",
        description="Minimax CRLB resource allocation for distributed radar.",
        epilog=SCENARIO_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_budgets(p):
        p.add_argument("--total-power", type=float, default=1.0,
                       help="total transmit power budget in W (default 1.0)")
        p.add_argument("--total-bandwidth", type=float, default=3.0e6,
                       help="total effective bandwidth budget in Hz (default 3e6)")

    p_alloc = sub.add_parser("allocate", help="optimize one scenario",
                             epilog=SCENARIO_SCHEMA_HELP,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    p_alloc.add_argument("scenario", help="scenario JSON file")
    p_alloc.add_argument("--k", dest="kind", required=True,
                         choices=sorted(PROBLEM_EXPONENT) + ["uniform"],
                         help="which resource to optimize")
    add_budgets(p_alloc)
    p_alloc.add_argument("--no-certificate", action="store_true",
                         help="skip the lower-bound certificate")
    p_alloc.add_argument("--out", help="write JSON here instead of stdout")

    p_bound = sub.add_parser("bound", help="lower-bound certificate only",
                             epilog=SCENARIO_SCHEMA_HELP,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    p_bound.add_argument("scenario", help="scenario JSON file")
    p_bound.add_argument("--k", dest="kind", required=True,
                         choices=sorted(PROBLEM_EXPONENT))
    add_budgets(p_bound)
    p_bound.add_argument("--out", help="write JSON here instead of stdout")

    p_mc = sub.add_parser("montecarlo", help="batch experiment to CSV")
    p_mc.add_argument("--config", help="ExperimentConfig JSON file")
    p_mc.add_argument("--trials", type=int, help="override trial count")
    p_mc.add_argument("--seed", type=int, help="override master seed")
    p_mc.add_argument("--policies",
                      help="comma list from uniform,power,bandwidth,joint")
    p_mc.add_argument("--loc-draws", type=int, dest="loc_draws",
                      help="localization noise draws per record")
    p_mc.add_argument("--timing", action="store_true",
                      help="record wall-clock times (breaks byte determinism)")
    p_mc.add_argument("--jobs", type=int, help="parallel worker processes")
    p_mc.add_argument("--out", default="results.csv", help="CSV output path")

    p_val = sub.add_parser("validate", help="invariant suite on a scenario")
    p_val.add_argument("scenario", nargs="?",
                       help="scenario JSON file (omit to generate one)")
    p_val.add_argument("--seed", type=int, default=0,
                       help="seed for the generated scenario")
    add_budgets(p_val)

    return parser


def _load_scenario(path: str) -> Scenario:
    if not os.path.exists(path):
        raise RadallocError(f"scenario file not found: {path}")
    return Scenario.from_json(path)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_allocate(args) -> int:
    scn = _load_scenario(args.scenario)
    budgets = Budgets.uniform(args.total_power, args.total_bandwidth, scn.n_tx)
    result = allocate(args.kind, scn, budgets)
    doc = result.to_dict()
    doc["sqrt_cost_m"] = float(np.sqrt(result.achieved_cost))
    if args.kind != "uniform" and not args.no_certificate:
        comps = all_components(scn)
        pairs = [(c.a + c.b, c.H) for c in comps]
        relaxed = solve_all_relaxations(pairs)
        cert = certificate_from_relaxations(
            relaxed, args.kind, PROBLEM_EXPONENT[args.kind], budgets)
        doc["certificate"] = cert.to_dict()
        doc["certificate_gap"] = result.achieved_cost / cert.problem_bound
    _emit(doc, args.out)
    return 0


def _cmd_bound(args) -> int:
    scn = _load_scenario(args.scenario)
    budgets = Budgets.uniform(args.total_power, args.total_bandwidth, scn.n_tx)
    comps = all_components(scn)
    cp = canonical_problem(comps, args.kind, budgets)
    cert = lower_bound(cp)
    _emit(cert.to_dict(), args.out)
    return 0


def _cmd_montecarlo(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.policies is not None:
        overrides["policies"] = tuple(
            s.strip() for s in args.policies.split(",") if s.strip())
    if args.loc_draws is not None:
        overrides["loc_draws"] = args.loc_draws
    if args.timing:
        overrides["timing"] = True
    if args.jobs is not None:
        overrides["n_jobs"] = args.jobs
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})

    run = run_experiment(cfg, csv_path=args.out)
    script = os.path.splitext(args.out)[0] + "_plot.py"
    emit_plot_script(args.out, script)
    print(f"wrote {len(run.records)} records to {args.out}")
    print(f"plot script: {script}")
    if run.failures:
        print(f"{len(run.failures)} trial failures logged:", file=sys.stderr)
        for f in run.failures:
            print(f"  {f}", file=sys.stderr)
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    if ok:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}" + (f": {detail}" if detail else ""))
    return ok


def _cmd_validate(args) -> int:
    if args.scenario:
        scn = _load_scenario(args.scenario)
    else:
        layout = LayoutDistribution(n_tx=4, n_rx=4, n_targets=3)
        scn = random_scenario(layout, args.seed)
    budgets = Budgets.uniform(args.total_power, args.total_bandwidth, scn.n_tx)
    rng = np.random.default_rng(args.seed)
    ok = True

    round_trip = Scenario.from_json(scn.to_json())
    ok &= _check("scenario json round-trip",
                 round_trip.to_dict() == scn.to_dict())

    comps = all_components(scn)
    good = True
    for q, comp in enumerate(comps):
        rebuilt = (0.5 * (np.outer(comp.a, comp.b) + np.outer(comp.b, comp.a))
                   - np.outer(comp.c, comp.c))
        scale = max(np.abs(comp.H).max(), 1e-300)
        good &= (comp.a >= 0).all() and (comp.b >= 0).all()
        good &= np.abs(comp.H - comp.H.T).max() <= 1e-12 * scale
        good &= np.abs(comp.H - rebuilt).max() <= 1e-10 * scale
        good &= (np.diag(comp.H) >= -1e-12 * scale).all()
        good &= np.linalg.matrix_rank(comp.H / scale, tol=1e-9) <= 3
    ok &= _check("component structure (sign, symmetry, rebuild, rank)", good)

    pair = AllocationPair(p=rng.uniform(0.5, 2.0, scn.n_tx),
                          w=rng.uniform(0.5e6, 2.0e6, scn.n_tx))
    t_base = trace_crlb(comps[0], pair)
    t_scaled = trace_crlb(comps[0], AllocationPair(p=2 * pair.p, w=3 * pair.w))
    ok &= _check("trace scaling T(2p,3w) = T(p,w)/18",
                 abs(t_scaled * 18.0 - t_base) <= 1e-9 * t_base)

    y = rng.uniform(0.5, 2.0, scn.n_tx)
    good = True
    for k in (0, 1, 2):
        g1 = unified_cost(comps[0], y, k)
        g2 = unified_cost(comps[0], 2.0 * y, k)
        good &= abs(g2 * 2.0 ** (k + 1) - g1) <= 1e-9 * abs(g1)
    ok &= _check("unified cost homogeneity", good)

    split = split_psd_nsd(comps[0].H)
    scale = max(np.abs(comps[0].H).max(), 1e-300)
    evp = np.linalg.eigvalsh(split.H_plus)
    evm = np.linalg.eigvalsh(split.H_minus)
    ok &= _check("eigensplit reconstruction and sign",
                 np.abs(split.H_plus + split.H_minus - comps[0].H).max()
                 <= 1e-10 * scale
                 and evp.min() >= -1e-12 * scale and evm.max() <= 1e-12 * scale)

    y0 = np.full(scn.n_tx, 1.0)
    z0 = y0.copy()
    sub = build_subproblem(comps, 0, (y0, z0))
    good = True
    for q, comp in enumerate(comps):
        lin_val = (z0 @ sub.quads[q].quad @ z0 + sub.quads[q].lin @ z0
                   + sub.quads[q].const)
        raw_val = (comp.a + comp.b) @ z0 - z0 @ comp.H @ z0
        tol = 1e-9 * max(abs(raw_val), 1e-300)
        good &= abs(lin_val - raw_val) <= tol
    ok &= _check("subproblem tangency at the linearization point", good)

    uni = evaluate_uniform(comps, budgets)
    for kind in ("power", "bandwidth", "joint"):
        result = allocate(kind, comps, budgets)
        pair = result.allocation
        active_ok = True
        if kind in ("power", "joint"):
            active_ok &= abs(pair.p.sum() - budgets.total_power) \
                <= 1e-9 * budgets.total_power
        if kind in ("bandwidth", "joint"):
            active_ok &= abs(pair.w.sum() - budgets.total_bandwidth) \
                <= 1e-9 * budgets.total_bandwidth
        mono = all(b <= a * (1 + 1e-12)
                   for a, b in zip(result.iterations, result.iterations[1:]))
        ok &= _check(f"{kind}: budget active, iterations monotone, beats uniform",
                     active_ok and mono
                     and result.achieved_cost
                     <= uni.achieved_cost * (1 + 1e-9))

        cp = canonical_problem(comps, kind, budgets)
        cert = lower_bound(cp)
        ok &= _check(f"{kind}: certificate below achieved cost",
                     cert.problem_bound
                     <= result.achieved_cost * (1 + 1e-9),
                     f"bound {cert.problem_bound:.6g} vs "
                     f"cost {result.achieved_cost:.6g}")

    pair = AllocationPair(p=np.full(scn.n_tx, budgets.per_tx_power),
                          w=np.full(scn.n_tx, budgets.per_tx_bandwidth))
    sigma = toa_noise_sigma(scn, pair)
    d_tx, d_rx = distances(scn)
    good = True
    for q in range(scn.n_targets):
        obs = [ToaObservation(tx=m, target=q, rx=n,
                              toa=(d_tx[m, q] + d_rx[q, n])
                              / scn.consts.speed_of_light,
                              variance=float(sigma[m, q, n]) ** 2)
               for m in range(scn.n_tx) for n in range(scn.n_rx)]
        est, _ = blue_estimate(scn, obs, scn.targets[q])
        err = float(np.hypot(est.x - scn.targets[q].x,
                             est.y - scn.targets[q].y))
        good &= err <= 1e-6
    ok &= _check("noiseless localization recovers the scene", good)

    return 0 if ok else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; remap usage to 1
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "allocate":
            return _cmd_allocate(args)
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "montecarlo":
            return _cmd_montecarlo(args)
        return _cmd_validate(args)
    except RadallocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
