"""Minimax resource allocation by sequential convex approximation.

The three allocation problems (transmit power, bandwidth, joint) are
instances of one canonical program over a single per-transmitter vector y:

    minimize    1' y
    subject to  g_q(y, k) <= 1  for every target q,   y >= 0

with k = 0 (power), 1 (bandwidth), 2 (joint).  Scaling the canonical
solution to the resource budget recovers the allocation, and for the joint
problem bandwidth rides along the same direction as power (w = (B/P) p).

solve_canonical runs the DC loop: convexify at the current point
(subproblem module), solve, map the slack vector back to canonical space
via y = z^(1/(k+1)) (feasible by the link inequality), and rescale so the
worst constraint is exactly active.  Both post-steps can only decrease the
objective, so the recorded objective trace is nonincreasing; a candidate
that fails to improve is the convergence signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .crlb import (
    DENOMINATOR_FLOOR, AllocationPair, CrlbComponents, max_trace_crlb,
)
from .errors import (
    DegenerateSolution, Infeasible, InfeasibleStart, NumericalStall,
)
from .scenario import Budgets, Scenario
from .subproblem import build_subproblem, solve_qclp

PROBLEM_EXPONENT = {"power": 0, "bandwidth": 1, "joint": 2}
ACTIVE_SHARE = 1e-4  # of total budget


@dataclass(frozen=True)
class SpcaOptions:
    max_iters: int = 200
    rel_tol: float = 1e-6
    gap_tol: float = 1e-8     # inner interior-point surrogate gap
    restarts: int = 0         # extra perturbed starts, best result kept


@dataclass
class CanonicalProblem:
    """Per-target pairs ((a+b)_q, H_q), exponent k and budgets for recovery."""

    pairs: list[tuple[np.ndarray, np.ndarray]]
    k: int
    D: float
    budgets: Budgets
    kind: str

    @property
    def n_tx(self) -> int:
        return self.pairs[0][0].shape[0]


@dataclass
class CanonicalSolution:
    y: np.ndarray
    objective_trace: list[float]
    converged: bool
    stall_reason: str | None = None

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


@dataclass
class AllocationResult:
    kind: str
    allocation: AllocationPair
    canonical_y: np.ndarray | None
    achieved_cost: float
    iterations: list[float]
    active_set: list[int]
    certificate_gap: float | None = None
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.allocation.p.tolist(),
            "w": self.allocation.w.tolist(),
            "canonical_y": None if self.canonical_y is None else self.canonical_y.tolist(),
            "achieved_cost": self.achieved_cost,
            "iterations": list(self.iterations),
            "active_set": list(self.active_set),
            "certificate_gap": self.certificate_gap,
            "converged": self.converged,
        }


def canonical_problem(comps: list[CrlbComponents], kind: str, budgets: Budgets) -> CanonicalProblem:
    if kind not in PROBLEM_EXPONENT:
        raise ValueError(f"kind must be one of {sorted(PROBLEM_EXPONENT)}, got {kind!r}")
    k = PROBLEM_EXPONENT[kind]
    pairs = [(comp.a + comp.b, comp.H) for comp in comps]
    D = budgets.total_bandwidth if kind == "bandwidth" else budgets.total_power
    return CanonicalProblem(pairs=pairs, k=k, D=D, budgets=budgets, kind=kind)


def _g_all(cp: CanonicalProblem, y: np.ndarray) -> np.ndarray:
    """g_q(y, k) for all targets; non-finite where the denominator collapses."""
    v = y ** (cp.k + 1)
    out = np.empty(len(cp.pairs))
    for qi, (ab, H) in enumerate(cp.pairs):
        den = float(v @ H @ v)
        out[qi] = (ab @ v) / den if den > DENOMINATOR_FLOOR else np.inf
    return out


def _solve_once(cp: CanonicalProblem, y0: np.ndarray, opts: SpcaOptions) -> CanonicalSolution:
    k = cp.k
    root = 1.0 / (k + 1)
    y = y0
    z = y ** (k + 1)
    trace = [float(y.sum())]
    converged = False
    stall = None

    for _ in range(opts.max_iters):
        sub = build_subproblem(cp.pairs, k, (y, z))
        # nudge off the active boundary for a strictly feasible warm start
        warm = (y * (1.0 + 1e-3), z * (1.0 + 0.5e-3 * (k + 1)))
        try:
            sol = solve_qclp(sub, warm_start=warm, gap_tol=opts.gap_tol)
        except (Infeasible, NumericalStall) as exc:
            stall = f"subproblem solver: {exc}"
            break

        y_raw = np.maximum(sol.z, 0.0) ** root
        gvals = _g_all(cp, y_raw)
        gmax = gvals.max()
        if not (math.isfinite(gmax) and gmax > 0.0):
            stall = f"constraint evaluation degenerate (max g = {gmax})"
            break
        y_cand = gmax ** root * y_raw
        j_cand = float(y_cand.sum())
        j_prev = trace[-1]

        if not math.isfinite(j_cand) or j_cand > j_prev * (1.0 + 1e-12):
            # no further descent available: converged, unless the candidate
            # is materially worse, which means the subproblem went wrong
            if math.isfinite(j_cand) and j_cand <= j_prev * (1.0 + 1e-6):
                converged = True
            else:
                stall = f"candidate objective {j_cand:.6e} above previous {j_prev:.6e}"
            break

        y = y_cand
        z = y ** (k + 1)
        trace.append(j_cand)
        if (j_prev - j_cand) <= opts.rel_tol * j_prev:
            converged = True
            break

    return CanonicalSolution(y=y, objective_trace=trace,
                             converged=converged, stall_reason=stall)


def solve_canonical(cp: CanonicalProblem, opts: SpcaOptions | None = None) -> CanonicalSolution:
    """Run the DC loop from the uniform starting point (plus optional restarts).

    The start is all-ones scaled so the worst constraint is exactly active;
    a non-finite worst constraint there means some target cannot be located
    even with every transmitter lit, and raises InfeasibleStart.
    """
    opts = opts or SpcaOptions()
    k = cp.k
    m = cp.n_tx
    g_ones = _g_all(cp, np.ones(m))
    gmax = g_ones.max()
    if not math.isfinite(gmax):
        qbad = int(np.argmax(~np.isfinite(g_ones)))
        raise InfeasibleStart(
            f"target {qbad} has a singular information form at the uniform point")
    if gmax <= 0.0:
        raise InfeasibleStart("no target constrains the allocation (max g <= 0)")

    y0 = gmax ** (1.0 / (k + 1)) * np.ones(m)
    best = _solve_once(cp, y0, opts)
    for ridx in range(opts.restarts):
        # vertex-heavy directions: the descent basins of sparse optima are
        # often unreachable from the uniform point, so spread the starts
        # across the simplex instead of jittering around all-ones
        rng = np.random.default_rng(ridx)
        d = rng.dirichlet(np.full(m, 0.4))
        d = np.maximum(d, 1e-4)
        g_r = _g_all(cp, d)
        if not math.isfinite(g_r.max()):
            continue
        y_r = g_r.max() ** (1.0 / (k + 1)) * d
        cand = _solve_once(cp, y_r, opts)
        if cand.objective < best.objective:
            best = cand
    return best


def recover_allocation(y: np.ndarray, cp: CanonicalProblem) -> AllocationPair:
    """Scale y to the budget: p and/or w = D * y / 1'y, fixed resource uniform."""
    y = np.asarray(y, dtype=float)
    tot = float(y.sum())
    if not (math.isfinite(tot) and tot > 0.0) or (y < 0).any():
        raise DegenerateSolution(f"canonical vector sums to {tot}")
    b = cp.budgets
    m = y.shape[0]
    if cp.k == 0:
        p = b.total_power * y / tot
        w = np.full(m, b.per_tx_bandwidth)
    elif cp.k == 1:
        p = np.full(m, b.per_tx_power)
        w = b.total_bandwidth * y / tot
    else:
        p = b.total_power * y / tot
        w = b.total_bandwidth * y / tot
    return AllocationPair(p=p, w=w)


def active_transmitters(pair: AllocationPair, kind: str, budgets: Budgets) -> list[int]:
    """Indices whose optimized resource share exceeds 1e-4 of its budget."""
    if kind in ("power", "joint"):
        share = pair.p / budgets.total_power
    elif kind == "bandwidth":
        share = pair.w / budgets.total_bandwidth
    else:  # uniform: everything is on
        share = np.full(pair.p.shape[0], 1.0)
    return [int(i) for i in np.flatnonzero(share > ACTIVE_SHARE)]


def uniform_pair(budgets: Budgets, n_tx: int) -> AllocationPair:
    return AllocationPair(p=np.full(n_tx, budgets.total_power / n_tx),
                          w=np.full(n_tx, budgets.total_bandwidth / n_tx))


def evaluate_uniform(comps: list[CrlbComponents], budgets: Budgets) -> AllocationResult:
    """Cost of spreading both resources evenly; the baseline policy."""
    pair = uniform_pair(budgets, comps[0].a.shape[0])
    cost, _ = max_trace_crlb(comps, pair)
    return AllocationResult(
        kind="uniform", allocation=pair, canonical_y=None,
        achieved_cost=cost, iterations=[],
        active_set=list(range(comps[0].a.shape[0])))


def allocate(kind: str, scenario_or_comps, budgets: Budgets,
             opts: SpcaOptions | None = None,
             coarse_targets=None) -> AllocationResult:
    """End-to-end allocation for one problem kind.

    scenario_or_comps is a Scenario or a prebuilt list of CrlbComponents.
    coarse_targets, when given with a Scenario, replaces the target
    positions the optimizer sees (the localization stage still uses the
    true scene), mimicking allocation driven by prior position estimates.
    """
    from .crlb import all_components  # local import keeps module deps one-way

    if kind == "uniform":
        if isinstance(scenario_or_comps, Scenario):
            comps = all_components(scenario_or_comps)
        else:
            comps = list(scenario_or_comps)
        return evaluate_uniform(comps, budgets)

    if isinstance(scenario_or_comps, Scenario):
        scn = scenario_or_comps
        if coarse_targets is not None:
            scn = Scenario(scn.transmitters, scn.receivers, coarse_targets,
                           scn.gains, scn.consts)
        comps = all_components(scn)
    else:
        if coarse_targets is not None:
            raise ValueError("coarse_targets requires a Scenario input")
        comps = list(scenario_or_comps)

    cp = canonical_problem(comps, kind, budgets)
    solution = solve_canonical(cp, opts)
    pair = recover_allocation(solution.y, cp)
    cost, _ = max_trace_crlb(comps, pair)
    return AllocationResult(
        kind=kind, allocation=pair, canonical_y=solution.y,
        achieved_cost=cost, iterations=list(solution.objective_trace),
        active_set=active_transmitters(pair, kind, budgets),
        converged=solution.converged)
