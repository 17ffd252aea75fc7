"""Time-of-arrival simulation and weighted least-squares localization.

Checks the allocation stage end to end: TOAs for every active
transmitter-target-receiver path get Gaussian noise whose variance matches
the delay-estimation bound for the allocated power/bandwidth, and a
linearized best-unbiased estimator (iterated Gauss-Newton on the weighted
residuals) turns them into position estimates.  At high SNR the resulting
errors should track the predicted CRLB; the trace form in the crlb module
is per pulse, so the matched prediction divides by the number of
coherently processed pulses f_r * T_int (see pulse_count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .crlb import AllocationPair
from .errors import RankDeficient
from .scenario import PhysConst, Point2D, Scenario, distances, pathloss
from .spca import ACTIVE_SHARE

GN_POSITION_TOL = 1e-6  # m
GN_MAX_ITERS = 50


@dataclass(frozen=True)
class ToaObservation:
    tx: int          # transmitter index m
    target: int      # target index q
    rx: int          # receiver index n
    toa: float       # s
    variance: float  # s^2, noise variance of the measurement

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance > 0.0):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not (math.isfinite(self.toa) and self.toa >= 0.0):
            raise ValueError(f"toa must be nonnegative, got {self.toa}")


def pulse_count(consts: PhysConst) -> float:
    """Pulses integrated per estimate: f_r * T_int."""
    return consts.pulse_rep_freq * consts.integration_time


def toa_noise_sigma(s: Scenario, alloc: AllocationPair) -> np.ndarray:
    """Per-path TOA noise std (M, Q, N); inf where the path carries no signal.

    sigma^2 = N_0 f_r / (8 pi^2 w_m^2 p_m alpha |h|^2 f_r T_int); the pulse
    rate cancels, leaving the integrated-energy form.
    """
    alpha = pathloss(s)
    h2 = np.abs(s.gains) ** 2
    cst = s.consts
    wp = (alloc.w ** 2 * alloc.p)[:, None, None]   # (M, 1, 1)
    denom = 8.0 * math.pi ** 2 * wp * alpha * h2 * cst.integration_time
    with np.errstate(divide="ignore"):
        var = np.where(denom > 0.0, cst.noise_psd / np.where(denom > 0.0, denom, 1.0), np.inf)
    return np.sqrt(var)


def simulate_toas(s: Scenario, alloc: AllocationPair, seed) -> list[list[ToaObservation]]:
    """Noisy TOAs per target, active paths only.

    A transmitter counts as active when it holds more than a 1e-4 share of
    both allocated resources; the optimizer leaves numerical dust (1e-9
    scale shares) on switched-off transmitters, and those paths carry no
    usable signal.  Deterministic given (scenario, allocation, seed).
    """
    rng = np.random.default_rng(seed)
    d_tx, d_rx = distances(s)
    sigma = toa_noise_sigma(s, alloc)
    c = s.consts.speed_of_light
    noise = rng.standard_normal(sigma.shape)
    p_tot = alloc.p.sum()
    w_tot = alloc.w.sum()
    if p_tot <= 0.0 or w_tot <= 0.0:
        raise ValueError("allocation carries no signal on any transmitter")
    active = np.flatnonzero((alloc.w > ACTIVE_SHARE * w_tot)
                            & (alloc.p > ACTIVE_SHARE * p_tot))

    out = []
    for q in range(s.n_targets):
        obs_q = []
        for m in active:
            for n in range(s.n_rx):
                sg = sigma[m, q, n]
                if not np.isfinite(sg):
                    continue
                toa = (d_tx[m, q] + d_rx[q, n]) / c + sg * noise[m, q, n]
                obs_q.append(ToaObservation(tx=int(m), target=q, rx=int(n),
                                            toa=float(toa),
                                            variance=float(sg) ** 2))
        out.append(obs_q)
    return out


def blue_estimate(s: Scenario, observations: list[ToaObservation],
                  coarse: Point2D) -> tuple[Point2D, np.ndarray]:
    """Iterated weighted least squares from a coarse initial position.

    Returns (estimate, covariance) with covariance the linearized
    (J' W J)^-1 at the solution.  Raises RankDeficient when the path
    geometry cannot pin down both coordinates.
    """
    if len(observations) < 2:
        raise RankDeficient(f"{len(observations)} observation(s) cannot fix a 2-D position")
    tx = s.tx_xy
    rx = s.rx_xy
    c = s.consts.speed_of_light
    mi = np.array([o.tx for o in observations])
    ni = np.array([o.rx for o in observations])
    toas = np.array([o.toa for o in observations])
    sig = np.sqrt(np.array([o.variance for o in observations]))

    x = coarse.as_array().copy()
    jtj = None
    for _ in range(GN_MAX_ITERS):
        dtx_vec = x[None, :] - tx[mi]
        drx_vec = x[None, :] - rx[ni]
        dtx = np.maximum(np.linalg.norm(dtx_vec, axis=1), 1e-12)
        drx = np.maximum(np.linalg.norm(drx_vec, axis=1), 1e-12)
        pred = (dtx + drx) / c
        grad = (dtx_vec / dtx[:, None] + drx_vec / drx[:, None]) / c  # d pred / d x
        jw = grad / sig[:, None]
        rw = (toas - pred) / sig
        jtj = jw.T @ jw
        evals = np.linalg.eigvalsh(jtj)
        if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
            raise RankDeficient("observation geometry is degenerate (rank < 2)")
        step = np.linalg.solve(jtj, jw.T @ rw)
        x += step
        if np.linalg.norm(step) <= GN_POSITION_TOL:
            break
    cov = np.linalg.inv(jtj)
    return Point2D(float(x[0]), float(x[1])), cov


def max_position_error(estimates, truths) -> float:
    """Largest Euclidean position error over targets."""
    est = np.array([[p.x, p.y] if isinstance(p, Point2D) else list(p) for p in estimates])
    tru = np.array([[p.x, p.y] if isinstance(p, Point2D) else list(p) for p in truths])
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {tru.shape}")
    return float(np.linalg.norm(est - tru, axis=1).max())


def localize_all(s: Scenario, alloc: AllocationPair, seed) -> float:
    """One noise draw: simulate, estimate every target, return the max error.

    Coarse starts are the true positions, which is the benign high-SNR
    regime (association known, linearization near truth).
    """
    obs = simulate_toas(s, alloc, seed)
    estimates = []
    for q in range(s.n_targets):
        est, _ = blue_estimate(s, obs[q], s.targets[q])
        estimates.append(est)
    return max_position_error(estimates, s.targets)
