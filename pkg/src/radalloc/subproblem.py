"""Convex inner approximation of the DC allocation step and its solver.

The nonconvex minimax allocation problem, rewritten with slacks
z_m = y_m^(k+1), has constraints whose only nonconvexity is (i) the
indefinite quadratic z' H z and (ii) the concave term -y^(k+1) in the slack
link.  Splitting H into PSD and NSD eigenparts and linearizing the concave
pieces at a point (y_n, z_n) yields a convex program with a linear
objective, one PSD-quadratic constraint per target, one linear link per
transmitter and nonnegativity bounds:

    minimize    1' y
    subject to  (a+b)' z - z' Hm z - z_n' Hp (2 z - z_n) <= 0     per target
                z_m + k y_n_m^(k+1) - (k+1) y_n_m^k y_m <= 0      per tx
                y >= 0,  z >= 0

with H = Hp + Hm, Hp PSD, Hm NSD.  Both families upper-bound the original
constraints (tangent at the linearization point), so the feasible set is
nested inside the original one.

solve_qclp is a primal log-barrier interior-point method specialized to
linear objectives with convex quadratic constraints.  Variables are
normalized by the linearization point before solving, which keeps the
Newton systems O(1) regardless of the wildly scaled physical units.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .crlb import CrlbComponents
from .errors import Infeasible, InvalidPoint, NotSymmetric, NumericalStall, RadallocError

SPLIT_RECONSTRUCTION_TOL = 1e-10
SYMMETRY_TOL = 1e-10
GAP_TOL_DEFAULT = 1e-8
PHASE1_MARGIN = 1e-9
PHASE1_BOX = 1e6


@dataclass(frozen=True)
class EigenSplit:
    """H = H_plus + H_minus with H_plus PSD and H_minus NSD.

    Zero eigenvalues are assigned to H_plus.
    """

    H_plus: np.ndarray
    H_minus: np.ndarray


def split_psd_nsd(H: np.ndarray) -> EigenSplit:
    """Eigendecomposition split of a symmetric matrix into PSD + NSD parts."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = np.linalg.norm(H, "fro")
    asym = np.linalg.norm(H - H.T, "fro")
    if asym > SYMMETRY_TOL * max(1.0, scale):
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds tolerance at scale {scale:.3e}")
    Hs = 0.5 * (H + H.T)
    evals, vecs = np.linalg.eigh(Hs)
    pos = evals >= 0.0
    H_plus = (vecs[:, pos] * evals[pos]) @ vecs[:, pos].T
    H_minus = (vecs[:, ~pos] * evals[~pos]) @ vecs[:, ~pos].T
    recon = np.linalg.norm(H_plus + H_minus - Hs, "fro")
    if recon > SPLIT_RECONSTRUCTION_TOL * max(1.0, scale):
        raise RadallocError(f"eigensplit reconstruction error {recon:.3e} at scale {scale:.3e}")
    # exact symmetry of the parts
    return EigenSplit(0.5 * (H_plus + H_plus.T), 0.5 * (H_minus + H_minus.T))


@dataclass(frozen=True)
class QuadConstraint:
    """z' quad z + lin' z + const <= 0 over the slack block, quad PSD."""

    quad: np.ndarray
    lin: np.ndarray
    const: float

    def value(self, z: np.ndarray) -> float:
        return float(z @ self.quad @ z + self.lin @ z + self.const)


@dataclass(frozen=True)
class LinkConstraint:
    """coeff_z * z_m + coeff_y * y_m + const <= 0."""

    coeff_z: float
    coeff_y: float
    const: float

    def value(self, y_m: float, z_m: float) -> float:
        return self.coeff_z * z_m + self.coeff_y * y_m + self.const


@dataclass
class ConvexSubproblem:
    """One SPCA inner problem over stacked variables (y, z), both length M."""

    obj_y: np.ndarray
    obj_z: np.ndarray
    quads: list[QuadConstraint]
    links: list[LinkConstraint]
    y_point: np.ndarray  # linearization point, also the variable scaling
    z_point: np.ndarray
    k: int

    @property
    def n_tx(self) -> int:
        return self.y_point.shape[0]

    def dump(self) -> str:
        """Plain-text rendering for debugging."""
        out = io.StringIO()
        m = self.n_tx
        out.write(f"min  sum_m obj_y[m]*y[m] + obj_z[m]*z[m]   (M={m}, k={self.k})\n")
        out.write(f"obj_y = {self.obj_y.tolist()}\nobj_z = {self.obj_z.tolist()}\n")
        for qi, qc in enumerate(self.quads):
            out.write(f"[target {qi}] z'Qz + l'z + r <= 0 with\n")
            out.write(f"  Q = {qc.quad.tolist()}\n  l = {qc.lin.tolist()}\n  r = {qc.const!r}\n")
        for mi, lc in enumerate(self.links):
            out.write(f"[link {mi}] {lc.coeff_z!r}*z[{mi}] + {lc.coeff_y!r}*y[{mi}]"
                      f" + {lc.const!r} <= 0\n")
        out.write("y >= 0, z >= 0\n")
        return out.getvalue()


def _as_pairs(comps) -> list[tuple[np.ndarray, np.ndarray]]:
    """Accept CrlbComponents or bare ((a+b), H) tuples."""
    pairs = []
    for item in comps:
        if isinstance(item, CrlbComponents):
            pairs.append((item.a + item.b, item.H))
        else:
            ab, H = item
            pairs.append((np.asarray(ab, float), np.asarray(H, float)))
    return pairs


def build_subproblem(comps, k: int,
                     point: tuple[np.ndarray, np.ndarray]) -> ConvexSubproblem:
    """Convexify the DC problem at (y_n, z_n).

    comps is a list of CrlbComponents or of ((a+b), H) pairs.  Both
    constraint families are tangent to their originals at the linearization
    point, which is what makes successive solutions monotone.
    """
    y_n = np.asarray(point[0], dtype=float)
    z_n = np.asarray(point[1], dtype=float)
    m = y_n.shape[0]
    if y_n.shape != z_n.shape or y_n.ndim != 1:
        raise InvalidPoint(f"point shapes {y_n.shape}, {z_n.shape} invalid")
    if not (np.isfinite(y_n).all() and np.isfinite(z_n).all()):
        raise InvalidPoint("linearization point has non-finite entries")
    if (y_n <= 0.0).any() or (z_n <= 0.0).any():
        raise InvalidPoint("linearization point must be strictly positive componentwise")

    quads = []
    for ab, H in _as_pairs(comps):
        split = split_psd_nsd(H)
        hp_z = split.H_plus @ z_n
        quads.append(QuadConstraint(
            quad=-split.H_minus,                       # PSD
            lin=ab - 2.0 * hp_z,
            const=float(z_n @ hp_z),
        ))

    links = [LinkConstraint(coeff_z=1.0,
                            coeff_y=-(k + 1) * y_n[mi] ** k,
                            const=k * y_n[mi] ** (k + 1))
             for mi in range(m)]

    return ConvexSubproblem(
        obj_y=np.ones(m), obj_z=np.zeros(m),
        quads=quads, links=links,
        y_point=y_n.copy(), z_point=z_n.copy(), k=k)


# ---------------------------------------------------------------------------
# generic barrier engine over constraints f_i(x) = x'Ax + b'x + d <= 0
# ---------------------------------------------------------------------------

@dataclass
class _Cons:
    A: np.ndarray | None
    b: np.ndarray
    d: float
    is_bound: bool = False


def _eval_cons(cons: list[_Cons], x: np.ndarray):
    m, n = len(cons), x.shape[0]
    vals = np.empty(m)
    grads = np.empty((m, n))
    for i, cc in enumerate(cons):
        if cc.A is None:
            vals[i] = cc.b @ x + cc.d
            grads[i] = cc.b
        else:
            Ax = cc.A @ x
            vals[i] = x @ Ax + cc.b @ x + cc.d
            grads[i] = 2.0 * Ax + cc.b
    return vals, grads


def _barrier_minimize(c: np.ndarray, cons: list[_Cons], x0: np.ndarray, *,
                      gap_tol: float, early_exit=None,
                      max_rounds: int = 60, max_newton: int = 100):
    """Minimize c'x over {f_i(x) <= 0} from a strictly feasible x0.

    Returns (x, info).  Raises NumericalStall when line searches collapse
    while the surrogate gap is still far from tolerance.
    """
    n = x0.shape[0]
    m = len(cons)
    x = x0.copy()
    vals, _ = _eval_cons(cons, x)
    if (vals >= 0.0).any():
        raise RadallocError("barrier start is not strictly feasible")

    obj0 = float(c @ x)
    t = m / (0.1 * (1.0 + abs(obj0)))
    newton_total = 0
    rounds = 0
    info = {}
    while True:
        rounds += 1
        for _ in range(max_newton):
            vals, grads = _eval_cons(cons, x)
            inv = 1.0 / vals                     # strictly negative
            grad_psi = t * c - grads.T @ inv
            gw = grads * (-inv)[:, None]         # rows scaled by 1/(-f_i)
            hess = gw.T @ gw
            for i, cc in enumerate(cons):
                if cc.A is not None:
                    hess += (2.0 * (-inv[i])) * cc.A
            try:
                step = np.linalg.solve(hess, -grad_psi)
            except np.linalg.LinAlgError:
                reg = 1e-10 * (np.trace(hess) / n + 1.0)
                for _ in range(6):
                    try:
                        step = np.linalg.solve(hess + reg * np.eye(n), -grad_psi)
                        break
                    except np.linalg.LinAlgError:
                        reg *= 100.0
                else:
                    raise NumericalStall("Newton system unsolvable",
                                         {"round": rounds, "t": t})
            newton_total += 1
            decrement = float(-grad_psi @ step)
            if not np.isfinite(decrement) or decrement < 0.0:
                # fall back to a gradient step direction
                step = -grad_psi / max(1.0, np.linalg.norm(grad_psi))
                decrement = float(-grad_psi @ step)
            if decrement / 2.0 <= 1e-10:
                break

            psi = t * float(c @ x) - float(np.log(-vals).sum())
            alpha = 1.0
            while True:
                xn = x + alpha * step
                vn, _ = _eval_cons(cons, xn)
                if (vn < 0.0).all():
                    psin = t * float(c @ xn) - float(np.log(-vn).sum())
                    if psin <= psi - 0.25 * alpha * decrement:
                        break
                alpha *= 0.5
                if alpha < 1e-16:
                    break
            if alpha < 1e-16:
                gap_now = m / t
                if gap_now > 100.0 * gap_tol * max(1.0, abs(float(c @ x))):
                    raise NumericalStall(
                        "line search collapsed",
                        {"round": rounds, "t": t, "gap": gap_now,
                         "grad_norm": float(np.linalg.norm(grad_psi))})
                break
            x = xn
            if early_exit is not None and early_exit(x):
                # phase-I caller only wants strict feasibility; stopping right
                # away keeps coordinates the objective ignores from drifting
                return x, {"rounds": rounds, "newton_steps": newton_total,
                           "surrogate_gap": m / t, "objective": float(c @ x)}

        obj = float(c @ x)
        gap = m / t
        info = {"rounds": rounds, "newton_steps": newton_total,
                "surrogate_gap": gap, "objective": obj}
        if early_exit is not None and early_exit(x):
            return x, info
        if gap <= gap_tol * max(1.0, abs(obj)):
            return x, info
        if rounds >= max_rounds:
            raise NumericalStall("barrier rounds exhausted",
                                 {"round": rounds, "t": t, "gap": gap})
        t *= 10.0


# ---------------------------------------------------------------------------
# flattening of a ConvexSubproblem into scaled engine form
# ---------------------------------------------------------------------------

def _flatten_scaled(sub: ConvexSubproblem):
    """Stack x = [y; z], scale by the linearization point, normalize rows."""
    m = sub.n_tx
    n = 2 * m
    s = np.concatenate([sub.y_point, sub.z_point])
    sz = sub.z_point

    cons: list[_Cons] = []
    for qc in sub.quads:
        A = np.zeros((n, n))
        A[m:, m:] = sz[:, None] * qc.quad * sz[None, :]
        b = np.zeros(n)
        b[m:] = qc.lin * sz
        d = qc.const
        rho = max(np.abs(A).max(), np.abs(b).max(), abs(d), 1e-300)
        cons.append(_Cons(A / rho, b / rho, d / rho))
    for mi, lc in enumerate(sub.links):
        b = np.zeros(n)
        b[mi] = lc.coeff_y * sub.y_point[mi]
        b[m + mi] = lc.coeff_z * sz[mi]
        d = lc.const
        rho = max(np.abs(b).max(), abs(d), 1e-300)
        cons.append(_Cons(None, b / rho, d / rho))
    for j in range(n):
        b = np.zeros(n)
        b[j] = -1.0
        cons.append(_Cons(None, b, 0.0, is_bound=True))

    c_scaled = np.concatenate([sub.obj_y * sub.y_point, sub.obj_z * sz])
    return c_scaled, cons, s


@dataclass
class QclpResult:
    y: np.ndarray
    z: np.ndarray
    objective: float
    kkt: dict = field(default_factory=dict)


def phase1_feasible(sub: ConvexSubproblem, start=None) -> tuple[np.ndarray, np.ndarray]:
    """Find a strictly feasible (y, z) for the subproblem, or raise Infeasible.

    Minimizes an auxiliary slack over the relaxed constraints f_i <= s and
    stops as soon as every normalized constraint clears -1e-9.  A start that
    already does is returned unchanged.
    """
    c_scaled, cons, s = _flatten_scaled(sub)
    n = s.shape[0]
    m = sub.n_tx
    if start is not None:
        x0 = np.concatenate([np.asarray(start[0], float) / sub.y_point,
                             np.asarray(start[1], float) / sub.z_point])
    else:
        x0 = np.ones(n)
    x0 = np.maximum(x0, 1e-10)

    vals0, _ = _eval_cons(cons, x0)
    if (vals0 < -PHASE1_MARGIN).all():
        return x0[:m] * sub.y_point, x0[m:] * sub.z_point

    # augmented problem over (x, s_aux): min s_aux  s.t.  f_i(x) - s_aux <= 0,
    # x >= 0 kept as hard barrier constraints (always strictly satisfiable).
    n_aug = n + 1
    aug: list[_Cons] = []
    for cc in cons:
        if cc.is_bound:
            # variable bounds stay hard; they are strictly satisfiable anywhere > 0
            b = np.zeros(n_aug)
            b[:n] = cc.b
            aug.append(_Cons(None, b, cc.d, is_bound=True))
        else:
            A = None
            if cc.A is not None:
                A = np.zeros((n_aug, n_aug))
                A[:n, :n] = cc.A
            b = np.zeros(n_aug)
            b[:n] = cc.b
            b[n] = -1.0
            aug.append(_Cons(A, b, cc.d))
    # box the search: the slack objective leaves most coordinates free, and an
    # unbounded slab has no analytic center, so centering would drift forever.
    # In scaled units every useful point is O(1); 1e6 is nowhere near binding.
    for j in range(n):
        b = np.zeros(n_aug)
        b[j] = 1.0
        aug.append(_Cons(None, b, -PHASE1_BOX, is_bound=True))

    x0aug = np.empty(n_aug)
    x0aug[:n] = x0
    x0aug[n] = vals0.max() + 0.1 * max(1.0, abs(vals0.max()))
    c_aug = np.zeros(n_aug)
    c_aug[n] = 1.0

    base = cons

    def feasible_now(xa):
        v, _ = _eval_cons(base, xa[:n])
        return bool((v < -PHASE1_MARGIN).all() and (xa[:n] > 0.0).all())

    try:
        xa, info = _barrier_minimize(c_aug, aug, x0aug, gap_tol=1e-6,
                                     early_exit=feasible_now)
    except NumericalStall as exc:
        raise Infeasible(f"phase-I stalled: {exc}") from exc
    if not feasible_now(xa):
        raise Infeasible(
            f"phase-I optimum slack {xa[n]:.3e} >= -{PHASE1_MARGIN:.0e}; "
            "constraint set has no interior")
    x = xa[:n]
    return x[:m] * sub.y_point, x[m:] * sub.z_point


def solve_qclp(sub: ConvexSubproblem, warm_start=None, *,
               gap_tol: float = GAP_TOL_DEFAULT) -> QclpResult:
    """Solve the convex subproblem to a relative surrogate gap <= gap_tol.

    warm_start, when given, is (y, z) in original units; it is used directly
    when strictly feasible, otherwise phase-I runs first.
    """
    c_scaled, cons, s = _flatten_scaled(sub)
    n = s.shape[0]
    m = sub.n_tx

    c_norm = max(np.abs(c_scaled).max(), 1e-300)
    c_int = c_scaled / c_norm

    x0 = None
    if warm_start is not None:
        cand = np.concatenate([np.asarray(warm_start[0], float) / sub.y_point,
                               np.asarray(warm_start[1], float) / sub.z_point])
        vals, _ = _eval_cons(cons, cand)
        if (vals < 0.0).all():
            x0 = cand
    if x0 is None:
        y_f, z_f = phase1_feasible(sub, start=warm_start)
        x0 = np.concatenate([y_f / sub.y_point, z_f / sub.z_point])

    x, info = _barrier_minimize(c_int, cons, x0, gap_tol=gap_tol)

    vals, grads = _eval_cons(cons, x)
    # multiplier estimates from the final barrier round
    t_final = len(cons) / max(info["surrogate_gap"], 1e-300)
    lam = 1.0 / (t_final * (-vals))
    stationarity = c_int + grads.T @ lam
    kkt = {
        "surrogate_gap": info["surrogate_gap"],
        "stationarity_inf_norm": float(np.abs(stationarity).max()),
        "max_constraint_value": float(vals.max()),
        "barrier_rounds": info["rounds"],
        "newton_steps": info["newton_steps"],
    }
    xs = x * s
    y = xs[:m]
    z = xs[m:]
    objective = float(sub.obj_y @ y + sub.obj_z @ z)
    return QclpResult(y=y, z=z, objective=objective, kkt=kkt)
