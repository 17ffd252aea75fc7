"""Global lower-bound certificates for the allocation problems.

Dropping all but one target's constraint from the canonical problem (in
slack coordinates z = y^(k+1), with the objective relaxed to 1'z through
the root-sum inequality) leaves, per target,

    minimize 1'z   subject to   (a+b)'z <= z' H z,   z >= 0,

a problem small enough to solve globally: every KKT point lives on some
support S of positive coordinates, where stationarity gives
z_S(lambda) = 0.5 * pinv(H_S) ((a+b)_S + 1_S / lambda) and lambda follows
from the activity of the constraint.  Enumerating all nonempty supports
(M <= 12) and keeping the best valid candidate yields the exact minimum of
the relaxation, hence a certified lower bound on the canonical optimum,
and after budget scaling on each allocation problem's optimal cost.
The spurious z = 0 point (which satisfies 0 <= 0 but corresponds to no
allocation) is excluded by construction.

The relaxed problems do not depend on the exponent k, so one enumeration
per target serves the power, bandwidth and joint bounds alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InfeasibleRelaxation
from .scenario import Budgets
from .spca import CanonicalProblem

MAX_ENUMERATION_TX = 12
_EPS = np.finfo(float).eps
_RANK_TOL = 1e-12
_DUAL_TOL = 1e-9
_KKT_TOL = 1e-7


@dataclass
class SingleConstraintSolution:
    z: np.ndarray
    objective: float
    support: tuple[int, ...]
    lam: float
    kkt_residual: float
    supports_tried: int


@dataclass
class Certificate:
    kind: str
    canonical_bound: float            # bound on the canonical objective 1'y
    problem_bound: float              # bound on the allocation problem's cost
    per_target_relaxed: list[float]   # relaxed objective 1'z per target
    method: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "canonical_bound": self.canonical_bound,
            "problem_bound": self.problem_bound,
            "per_target_relaxed": list(self.per_target_relaxed),
            "method": self.method,
        }


def _phi_factory(x_u, x_e, u, K):
    """Activity residual phi(lambda) = u'z - z'Kz evaluated through z(lambda)."""
    Kx_u = K @ x_u
    Kx_e = K @ x_e
    s_uu = float(x_u @ Kx_u)
    s_ue = float(x_u @ Kx_e)
    s_ee = float(x_e @ Kx_e)
    t_u = float(u @ x_u)
    t_e = float(u @ x_e)

    def phi(lam):
        uz = 0.5 * (t_u + t_e / lam)
        zkz = 0.25 * (s_uu + 2.0 * s_ue / lam + s_ee / lam ** 2)
        return uz - zkz

    return phi


def _support_candidates(u, K, idx, m_total, ab_full, H_full):
    """Valid KKT candidates on one support: (z_full, lam, residual) tuples."""
    size = len(idx)
    evals, vecs = np.linalg.eigh(K)
    emax = np.abs(evals).max()
    if emax == 0.0:
        return []
    keep = np.abs(evals) > _RANK_TOL * emax
    inv_evals = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)
    x_u = vecs @ (inv_evals * (vecs.T @ u))
    x_e = vecs @ (inv_evals * (vecs.T @ np.ones(size)))

    if (u <= 0.0).all():
        return []
    lam_max = m_total * np.max(1.0 / (u[u > 0.0] * _EPS))
    lam_lo = lam_max * 1e-80

    phi = _phi_factory(x_u, x_e, u, K)
    grid = np.geomspace(lam_lo, lam_max, 700)
    vals = np.array([phi(lam) for lam in grid])
    good = np.isfinite(vals)
    roots = []
    sign = np.sign(vals)
    for i in range(len(grid) - 1):
        if not (good[i] and good[i + 1]):
            continue
        if sign[i] == 0.0:
            roots.append(grid[i])
        elif sign[i] * sign[i + 1] < 0.0:
            lo, hi = grid[i], grid[i + 1]
            flo = vals[i]
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                fmid = phi(mid)
                if fmid == 0.0:
                    lo = hi = mid
                    break
                if (fmid > 0.0) == (flo > 0.0):
                    lo, flo = mid, fmid
                else:
                    hi = mid
                if hi / lo - 1.0 < 1e-15:
                    break
            roots.append(math.sqrt(lo * hi))
    if sign[-1] == 0.0 and good[-1]:
        roots.append(grid[-1])

    out = []
    scale_u = np.abs(u).max()
    for lam in roots:
        z_s = 0.5 * (x_u + x_e / lam)
        zmax = np.abs(z_s).max()
        if zmax <= 0.0 or not np.isfinite(zmax):
            continue
        if z_s.min() <= 1e-14 * zmax:
            continue  # boundary cases belong to smaller supports
        # stationarity residual on the support (catches range failures of pinv)
        res = np.linalg.norm(lam * (2.0 * K @ z_s - u) - 1.0) / math.sqrt(size)
        if res > _KKT_TOL:
            continue
        # dual feasibility for excluded coordinates
        ok = True
        if size < m_total:
            rest = np.setdiff1d(np.arange(m_total), idx)
            hz = H_full[np.ix_(rest, idx)] @ z_s
            nu = 1.0 + lam * (ab_full[rest] - 2.0 * hz)
            if (nu < -_DUAL_TOL * (1.0 + lam * scale_u)).any():
                ok = False
        if not ok:
            continue
        z_full = np.zeros(m_total)
        z_full[idx] = z_s
        out.append((z_full, lam, res))

        # singular supports: slide along nonnegative null rays orthogonal to u
        if not keep.all():
            null_vecs = vecs[:, ~keep]
            for col in range(null_vecs.shape[1]):
                for d in (null_vecs[:, col], -null_vecs[:, col]):
                    dmax = np.abs(d).max()
                    if dmax <= 0.0 or d.min() < -1e-12 * dmax:
                        continue
                    if abs(float(u @ d)) > 1e-10 * scale_u * dmax:
                        continue
                    pos = d > 1e-12 * dmax
                    if not pos.any():
                        continue
                    t_slide = np.min(z_s[pos] / d[pos])
                    z_slid = np.maximum(z_s - t_slide * d, 0.0)
                    zf = np.zeros(m_total)
                    zf[idx] = z_slid
                    out.append((zf, lam, res))
    return out


def solve_single_constraint_global(ab: np.ndarray, H: np.ndarray) -> SingleConstraintSolution:
    """Exact global minimum of min 1'z s.t. ab'z <= z'Hz, z >= 0, z != 0."""
    ab = np.asarray(ab, dtype=float)
    H = np.asarray(H, dtype=float)
    m = ab.shape[0]
    if m > MAX_ENUMERATION_TX:
        raise ValueError(
            f"support enumeration is exponential; M = {m} exceeds {MAX_ENUMERATION_TX}")

    best = None
    tried = 0
    for size in range(1, m + 1):
        for idx in combinations(range(m), size):
            tried += 1
            idx = np.array(idx, dtype=int)
            u = ab[idx]
            K = H[np.ix_(idx, idx)]
            for z_full, lam, res in _support_candidates(u, K, idx, m, ab, H):
                obj = float(z_full.sum())
                if best is None or obj < best.objective:
                    best = SingleConstraintSolution(
                        z=z_full, objective=obj,
                        support=tuple(int(i) for i in np.flatnonzero(z_full > 0.0)),
                        lam=float(lam), kkt_residual=float(res),
                        supports_tried=tried)
    if best is None:
        raise InfeasibleRelaxation(
            "no support produced a valid KKT candidate; relaxation is degenerate")
    best.supports_tried = tried
    return best


def solve_all_relaxations(pairs) -> list[SingleConstraintSolution]:
    return [solve_single_constraint_global(ab, H) for ab, H in pairs]


def certificate_from_relaxations(relaxed: list[SingleConstraintSolution],
                                 kind: str, k: int,
                                 budgets: Budgets) -> Certificate:
    per_target = [sol.objective for sol in relaxed]
    worst = max(per_target)
    canonical = worst ** (1.0 / (k + 1))
    b = budgets
    if kind == "power":
        problem = worst / (b.total_power * b.per_tx_bandwidth ** 2)
    elif kind == "bandwidth":
        problem = worst / (b.per_tx_power * b.total_bandwidth ** 2)
    elif kind == "joint":
        problem = worst / (b.total_power * b.total_bandwidth ** 2)
    else:
        raise ValueError(f"no lower bound defined for kind {kind!r}")
    method = {
        "relaxation": "single-constraint support enumeration",
        "supports_tried": [sol.supports_tried for sol in relaxed],
        "kkt_residuals": [sol.kkt_residual for sol in relaxed],
        "supports": [list(sol.support) for sol in relaxed],
    }
    return Certificate(kind=kind, canonical_bound=canonical,
                       problem_bound=problem, per_target_relaxed=per_target,
                       method=method)


def lower_bound(cp: CanonicalProblem, budgets: Budgets | None = None) -> Certificate:
    """Certified lower bound on cp's allocation problem optimum."""
    budgets = budgets or cp.budgets
    relaxed = solve_all_relaxations(cp.pairs)
    return certificate_from_relaxations(relaxed, cp.kind, cp.k, budgets)
