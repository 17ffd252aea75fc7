"""Monte Carlo experiment engine comparing allocation policies.

Random scenes are drawn per trial; each policy (uniform, power, bandwidth,
joint) is evaluated across an SNR grid that scales the total transmit
power.  The canonical optimization is scale invariant, so each policy is
solved once per trial and only the budget mapping, costs and certificates
are recomputed per SNR point.  The same goes for the certificate
relaxations, which are shared by all three optimized policies.

Determinism: per-trial seeds come from a counter-based split of the master
seed (SeedSequence with (seed, trial) entropy, and (seed, trial, policy,
snr, draw) for noise draws), so reruns with the same config produce
byte-identical CSV output.  The wall_ms column is the one clock-dependent
field; it is written as 0.0 unless ExperimentConfig.timing is set, keeping
the default output reproducible.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import certificate_from_relaxations, solve_all_relaxations
from .crlb import all_components, max_trace_crlb
from .errors import RadallocError
from .localization import localize_all
from .scenario import Budgets, LayoutDistribution, PhysConst, random_scenario
from .spca import (
    PROBLEM_EXPONENT, AllocationResult, active_transmitters, canonical_problem,
    evaluate_uniform, recover_allocation, solve_canonical, uniform_pair,
)

CSV_HEADER = ("seed", "policy", "snr_db", "cost", "sqrt_cost", "lower_bound",
              "gap", "active_tx", "max_loc_err", "wall_ms")

ALL_POLICIES = ("uniform", "power", "bandwidth", "joint")


@dataclass(frozen=True)
class ExperimentConfig:
    area_side: float = 20000.0        # m
    n_tx: int = 5
    n_rx: int = 5
    n_targets: int = 4
    gain_variance: float = 10.0       # E|h|^2
    total_bandwidth: float = 3.0e6    # Hz
    carrier_freq: float = 1.0e9       # Hz
    noise_psd: float = 1.0e-20        # W/Hz
    pulse_rep_freq: float = 5.0e3     # Hz
    integration_time: float = 10.0e-3  # s
    snr_grid_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0)
    trials: int = 20
    seed: int = 0
    policies: tuple = ALL_POLICIES
    reference_power: float | None = None  # None: anchored via snr_anchor_db
    snr_anchor_db: float = 15.0       # per-path post-integration SNR at mid grid
    loc_draws: int = 0                # localization noise draws per record
    loc_top_snr_only: bool = True
    timing: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.snr_grid_db) == 0:
            raise ValueError("snr grid must be nonempty")
        bad = set(self.policies) - set(ALL_POLICIES)
        if bad:
            raise ValueError(f"unknown policies {sorted(bad)}")

    def consts(self) -> PhysConst:
        return PhysConst(carrier_freq=self.carrier_freq,
                         noise_psd=self.noise_psd,
                         pulse_rep_freq=self.pulse_rep_freq,
                         integration_time=self.integration_time)

    def layout(self) -> LayoutDistribution:
        return LayoutDistribution(area_side=self.area_side, n_tx=self.n_tx,
                                  n_rx=self.n_rx, n_targets=self.n_targets,
                                  gain_variance=self.gain_variance,
                                  consts=self.consts())

    def to_dict(self) -> dict:
        return {
            "area_side": self.area_side, "n_tx": self.n_tx, "n_rx": self.n_rx,
            "n_targets": self.n_targets, "gain_variance": self.gain_variance,
            "total_bandwidth": self.total_bandwidth,
            "carrier_freq": self.carrier_freq, "noise_psd": self.noise_psd,
            "pulse_rep_freq": self.pulse_rep_freq,
            "integration_time": self.integration_time,
            "snr_grid_db": list(self.snr_grid_db), "trials": self.trials,
            "seed": self.seed, "policies": list(self.policies),
            "reference_power": self.reference_power,
            "snr_anchor_db": self.snr_anchor_db, "loc_draws": self.loc_draws,
            "loc_top_snr_only": self.loc_top_snr_only, "timing": self.timing,
            "n_jobs": self.n_jobs,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        for key in ("snr_grid_db", "policies"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class TrialRecord:
    seed: int
    policy: str
    snr_db: float
    cost: float
    sqrt_cost: float
    lower_bound: float | None
    gap: float | None
    active_tx: int
    max_loc_err: float | None
    wall_ms: float

    def as_row(self) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(v)
        return [repr(self.seed), self.policy, repr(self.snr_db), repr(self.cost),
                repr(self.sqrt_cost), fmt(self.lower_bound), fmt(self.gap),
                repr(self.active_tx), fmt(self.max_loc_err), repr(self.wall_ms)]


@dataclass
class ExperimentRun:
    records: list[TrialRecord]
    summary: dict
    failures: list[dict]
    results: dict = field(default_factory=dict)  # (trial, policy) -> AllocationResult


def reference_power(cfg: ExperimentConfig) -> float:
    """Total power making the mid-grid SNR point hit the per-path anchor.

    The nominal geometry is both legs at half the area side; per-path
    post-integration SNR is p_m T_int alpha E|h|^2 / N_0 with p_m = P / M.
    """
    if cfg.reference_power is not None:
        return cfg.reference_power
    d0 = cfg.area_side / 2.0
    alpha_nom = 1.0 / ((4.0 * math.pi) ** 3 * d0 ** 4 * cfg.carrier_freq ** 2)
    snr_lin = 10.0 ** (cfg.snr_anchor_db / 10.0)
    return (snr_lin * cfg.noise_psd * cfg.n_tx
            / (cfg.integration_time * cfg.gain_variance * alpha_nom))


def trial_seed(master_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(entropy=(master_seed, trial)).generate_state(1)[0])


def _noise_seed(master_seed: int, trial: int, policy: str, snr_idx: int, draw: int):
    pol_idx = ALL_POLICIES.index(policy)
    return np.random.SeedSequence(entropy=(master_seed, trial, pol_idx, snr_idx, draw))


def _snr_factors(cfg: ExperimentConfig) -> list[float]:
    mid = sorted(cfg.snr_grid_db)[len(cfg.snr_grid_db) // 2]
    return [10.0 ** ((snr - mid) / 10.0) for snr in cfg.snr_grid_db]


def _run_trial(cfg: ExperimentConfig, trial: int, keep_results: bool):
    """All records for one trial. Returns (records, failures, results)."""
    t_seed = trial_seed(cfg.seed, trial)
    records: list[TrialRecord] = []
    failures: list[dict] = []
    results: dict = {}

    scn = random_scenario(cfg.layout(), t_seed)
    comps = all_components(scn)
    pairs = [(c.a + c.b, c.H) for c in comps]
    p_ref = reference_power(cfg)
    factors = _snr_factors(cfg)
    top_snr = max(cfg.snr_grid_db)

    relaxed = None
    if set(cfg.policies) - {"uniform"}:
        try:
            relaxed = solve_all_relaxations(pairs)
        except RadallocError as exc:
            failures.append({"trial": trial, "stage": "relaxation", "error": str(exc)})

    for policy in cfg.policies:
        try:
            canon = None
            if policy != "uniform":
                base_budgets = Budgets.uniform(p_ref, cfg.total_bandwidth, cfg.n_tx)
                cp = canonical_problem(comps, policy, base_budgets)
                canon = solve_canonical(cp)
        except RadallocError as exc:
            failures.append({"trial": trial, "policy": policy, "error": str(exc)})
            continue

        for snr_idx, snr_db in enumerate(cfg.snr_grid_db):
            t0 = time.perf_counter()
            try:
                p_tot = p_ref * factors[snr_idx]
                budgets = Budgets.uniform(p_tot, cfg.total_bandwidth, cfg.n_tx)
                if policy == "uniform":
                    pair = uniform_pair(budgets, cfg.n_tx)
                    cost, _ = max_trace_crlb(comps, pair)
                    bound = None
                    gap = None
                    active = cfg.n_tx
                else:
                    cp_s = replace(cp, budgets=budgets,
                                   D=budgets.total_bandwidth if policy == "bandwidth"
                                   else budgets.total_power)
                    pair = recover_allocation(canon.y, cp_s)
                    cost, _ = max_trace_crlb(comps, pair)
                    bound = None
                    gap = None
                    if relaxed is not None:
                        cert = certificate_from_relaxations(
                            relaxed, policy, PROBLEM_EXPONENT[policy], budgets)
                        bound = cert.problem_bound
                        gap = cost / bound
                    active = len(active_transmitters(pair, policy, budgets))

                loc_err = None
                want_loc = cfg.loc_draws > 0 and (
                    not cfg.loc_top_snr_only or snr_db == top_snr)
                if want_loc:
                    errs = []
                    for draw in range(cfg.loc_draws):
                        seed = _noise_seed(cfg.seed, trial, policy, snr_idx, draw)
                        errs.append(localize_all(scn, pair, seed))
                    # root mean square over draws, so the recorded value is
                    # comparable to the root of the predicted worst CRLB
                    loc_err = float(np.sqrt(np.mean(np.square(errs))))

                wall = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
                records.append(TrialRecord(
                    seed=t_seed, policy=policy, snr_db=float(snr_db),
                    cost=cost, sqrt_cost=math.sqrt(cost),
                    lower_bound=bound, gap=gap, active_tx=active,
                    max_loc_err=loc_err, wall_ms=wall))
            except RadallocError as exc:
                failures.append({"trial": trial, "policy": policy,
                                 "snr_db": snr_db, "error": str(exc)})

        if keep_results and policy != "uniform" and canon is not None:
            budgets = Budgets.uniform(p_ref, cfg.total_bandwidth, cfg.n_tx)
            cp_r = replace(cp, budgets=budgets)
            pr = recover_allocation(canon.y, cp_r)
            cost_r, _ = max_trace_crlb(comps, pr)
            results[(trial, policy)] = AllocationResult(
                kind=policy, allocation=pr, canonical_y=canon.y,
                achieved_cost=cost_r, iterations=list(canon.objective_trace),
                active_set=active_transmitters(pr, policy, budgets),
                converged=canon.converged)
        elif keep_results and policy == "uniform":
            budgets = Budgets.uniform(p_ref, cfg.total_bandwidth, cfg.n_tx)
            results[(trial, "uniform")] = evaluate_uniform(comps, budgets)

    return records, failures, results


def _run_trial_star(args):
    return _run_trial(*args)


def run_experiment(cfg: ExperimentConfig, csv_path=None,
                   keep_results: bool = False) -> ExperimentRun:
    """Execute the batch; stream records to csv_path as trials complete.

    Per-trial failures are logged into the run's failures list and never
    abort the batch.
    """
    all_records: list[TrialRecord] = []
    all_failures: list[dict] = []
    all_results: dict = {}

    writer = None
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)

    try:
        jobs = ((cfg, t, keep_results) for t in range(cfg.trials))
        if cfg.n_jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
                outputs = pool.map(_run_trial_star, jobs)
                for recs, fails, res in outputs:
                    all_records.extend(recs)
                    all_failures.extend(fails)
                    all_results.update(res)
                    if writer is not None:
                        for r in recs:
                            writer.writerow(r.as_row())
                        fh.flush()
        else:
            for args in jobs:
                recs, fails, res = _run_trial_star(args)
                all_records.extend(recs)
                all_failures.extend(fails)
                all_results.update(res)
                if writer is not None:
                    for r in recs:
                        writer.writerow(r.as_row())
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()

    return ExperimentRun(records=all_records, summary=summarize(all_records),
                         failures=all_failures, results=all_results)


def summarize(records: list[TrialRecord]) -> dict:
    """Mean cost/sqrt-cost/localization error per (policy, snr)."""
    out: dict = {}
    for rec in records:
        cell = out.setdefault(rec.policy, {}).setdefault(rec.snr_db, {
            "n": 0, "sum_cost": 0.0, "sum_sqrt_cost": 0.0,
            "n_loc": 0, "sum_loc_err": 0.0})
        cell["n"] += 1
        cell["sum_cost"] += rec.cost
        cell["sum_sqrt_cost"] += rec.sqrt_cost
        if rec.max_loc_err is not None:
            cell["n_loc"] += 1
            cell["sum_loc_err"] += rec.max_loc_err
    for policy in out:
        for snr, cell in out[policy].items():
            cell["mean_cost"] = cell["sum_cost"] / cell["n"]
            cell["mean_sqrt_cost"] = cell["sum_sqrt_cost"] / cell["n"]
            cell["mean_loc_err"] = (cell["sum_loc_err"] / cell["n_loc"]
                                    if cell["n_loc"] else None)
    return out


def active_histogram(records: list[TrialRecord]) -> dict:
    """Relative frequency of active-transmitter counts per policy."""
    counts: dict = {}
    for rec in records:
        pol = counts.setdefault(rec.policy, {})
        pol[rec.active_tx] = pol.get(rec.active_tx, 0) + 1
    out = {}
    for policy, pol in counts.items():
        total = sum(pol.values())
        out[policy] = {k: v / total for k, v in sorted(pol.items())}
    return out


def write_csv(records: list[TrialRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.as_row())


PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Plot Monte Carlo results produced by the radalloc harness.

Reads the records CSV next to this script (or the path given on the
command line) and renders: mean root worst-case CRLB vs SNR per policy,
the active-transmitter histogram, and, when present, localization error
vs SNR.  Requires matplotlib.
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
rows = []
with open(path) as fh:
    for row in csv.DictReader(fh):
        rows.append(row)

policies = []
for r in rows:
    if r["policy"] not in policies:
        policies.append(r["policy"])

fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

ax = axes[0]
for pol in policies:
    cells = defaultdict(list)
    for r in rows:
        if r["policy"] == pol:
            cells[float(r["snr_db"])].append(float(r["sqrt_cost"]))
    snrs = sorted(cells)
    ax.semilogy(snrs, [sum(cells[s]) / len(cells[s]) for s in snrs],
                marker="o", label=pol)
ax.set_xlabel("SNR offset (dB)")
ax.set_ylabel("mean sqrt worst-case CRLB (m)")
ax.legend()
ax.grid(True, which="both", alpha=0.3)

ax = axes[1]
width = 0.8 / max(len(policies), 1)
for i, pol in enumerate(policies):
    hist = defaultdict(int)
    tot = 0
    for r in rows:
        if r["policy"] == pol:
            hist[int(r["active_tx"])] += 1
            tot += 1
    ks = sorted(hist)
    ax.bar([k + i * width for k in ks], [hist[k] / tot for k in ks],
           width=width, label=pol)
ax.set_xlabel("active transmitters")
ax.set_ylabel("relative frequency")
ax.legend()

ax = axes[2]
any_loc = False
for pol in policies:
    cells = defaultdict(list)
    for r in rows:
        if r["policy"] == pol and r["max_loc_err"]:
            cells[float(r["snr_db"])].append(float(r["max_loc_err"]))
    if cells:
        any_loc = True
        snrs = sorted(cells)
        ax.semilogy(snrs, [sum(cells[s]) / len(cells[s]) for s in snrs],
                    marker="s", label=pol)
ax.set_xlabel("SNR offset (dB)")
ax.set_ylabel("mean max localization error (m)")
if any_loc:
    ax.legend()
else:
    ax.text(0.5, 0.5, "no localization columns", ha="center", va="center",
            transform=ax.transAxes)
ax.grid(True, which="both", alpha=0.3)

fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print("wrote", out)
'''


def emit_plot_script(csv_path, script_path) -> None:
    """Write a standalone plotting script that reads the given CSV."""
    import os
    name = os.path.basename(str(csv_path))
    with open(script_path, "w") as fh:
        fh.write(PLOT_SCRIPT.format(csv_name=name))
