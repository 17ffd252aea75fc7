"""Per-target localization error bound algebra.

For each target q the non-coherent MIMO CRLB trace on 2-D position is a
ratio of forms in the per-transmitter resources.  With the effective vector
u_m = w_m^2 p_m (bandwidth squared times power),

    T_q(p, w) = (a_q + b_q)' u / (u' H_q u),
    H_q = 0.5 (a_q b_q' + b_q a_q') - c_q c_q',

where a_q, b_q, c_q accumulate, over receivers, path weights times products
of summed direction cosines along x and y.  The direction cosine convention:
for transmitter m and target q, cos_x = (x_tx - x_target) / distance, and
for receiver n, cos_x = (x_rx - x_target) / distance; the per-path factor is
(cos_x_tx + cos_x_rx), squared for a, the y analogue squared for b, and the
cross product for c.

The same module carries the unified single-vector cost

    g_q(y, k) = (a_q + b_q)' v / (v' H_q v),   v = y^(k+1) elementwise,

whose k = 0, 1, 2 instances are the power, bandwidth and joint allocation
costs up to known positive scale factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularGeometry
from .scenario import PhysConst, Scenario, distances, pathloss

# Below this, the Fisher determinant is treated as exactly singular.
DENOMINATOR_FLOOR = 1e-300

VALID_EXPONENTS = (0, 1, 2)


@dataclass(frozen=True)
class AllocationPair:
    """Per-transmitter power and bandwidth vectors (W, Hz)."""

    p: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "w", w)
        if p.shape != w.shape or p.ndim != 1:
            raise ValueError(f"p and w must be 1-D and equal length, got {p.shape}, {w.shape}")
        if not (np.isfinite(p).all() and np.isfinite(w).all()):
            raise ValueError("allocation contains non-finite entries")
        if (p < 0).any() or (w < 0).any():
            raise ValueError("allocation entries must be nonnegative")


@dataclass
class CrlbComponents:
    """Geometry/gain summaries for one target: a, b, c vectors and H matrix."""

    a: np.ndarray       # (M,)
    b: np.ndarray       # (M,)
    c: np.ndarray       # (M,)
    H: np.ndarray       # (M, M), symmetric, rank <= 3
    eta: float

    def to_dict(self) -> dict:
        return {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "H": self.H.tolist(),
            "eta": self.eta,
        }


def eta(consts: PhysConst) -> float:
    """Waveform/noise scale 8 pi^2 / (c^2 f_r N_0)."""
    return 8.0 * math.pi ** 2 / (
        consts.speed_of_light ** 2 * consts.pulse_rep_freq * consts.noise_psd)


def build_components(s: Scenario, q: int) -> CrlbComponents:
    """Components of target q's CRLB (q is a 0-based index)."""
    if not 0 <= q < s.n_targets:
        raise IndexError(f"target index {q} out of range [0, {s.n_targets})")
    d_tx, d_rx = distances(s)
    alpha = pathloss(s)
    et = eta(s.consts)

    tgt = s.target_xy[q]
    # (M,) and (N,) direction cosines toward target q
    cos_tx = (s.tx_xy - tgt) / d_tx[:, q][:, None]     # (M, 2)
    cos_rx = (s.rx_xy - tgt) / d_rx[q, :][:, None]     # (N, 2)

    X = cos_tx[:, 0][:, None] + cos_rx[:, 0][None, :]  # (M, N)
    Y = cos_tx[:, 1][:, None] + cos_rx[:, 1][None, :]
    weight = et * alpha[:, q, :] * np.abs(s.gains[:, q, :]) ** 2  # (M, N)

    a = (weight * X ** 2).sum(axis=1)
    b = (weight * Y ** 2).sum(axis=1)
    c = (weight * X * Y).sum(axis=1)
    H = 0.5 * (np.outer(a, b) + np.outer(b, a)) - np.outer(c, c)
    H = 0.5 * (H + H.T)  # exact symmetry despite rounding
    return CrlbComponents(a=a, b=b, c=c, H=H, eta=et)


def all_components(s: Scenario) -> list[CrlbComponents]:
    return [build_components(s, q) for q in range(s.n_targets)]


def _ratio(comp: CrlbComponents, v: np.ndarray) -> float:
    num = float((comp.a + comp.b) @ v)
    den = float(v @ comp.H @ v)
    if den <= DENOMINATOR_FLOOR:
        raise SingularGeometry(
            f"CRLB denominator {den:.3e} at or below floor {DENOMINATOR_FLOOR:.0e}")
    return num / den


def trace_crlb(comp: CrlbComponents, alloc: AllocationPair) -> float:
    """CRLB trace T_q for one target under a power/bandwidth allocation."""
    u = alloc.w ** 2 * alloc.p
    return _ratio(comp, u)


def unified_cost(comp: CrlbComponents, y: np.ndarray, k: int) -> float:
    """g_q(y, k) with v = y^(k+1); k in {0, 1, 2}."""
    if k not in VALID_EXPONENTS:
        raise ValueError(f"k must be one of {VALID_EXPONENTS}, got {k}")
    y = np.asarray(y, dtype=float)
    return _ratio(comp, y ** (k + 1))


def max_trace_crlb(comps: list[CrlbComponents], alloc: AllocationPair) -> tuple[float, int]:
    """Worst-target CRLB trace and its target index (ties: lowest index)."""
    vals = np.empty(len(comps))
    for qi, comp in enumerate(comps):
        try:
            vals[qi] = trace_crlb(comp, alloc)
        except SingularGeometry as exc:
            raise SingularGeometry(str(exc), target_index=qi) from exc
    q = int(np.argmax(vals))
    return float(vals[q]), q


def max_unified_cost(comps: list[CrlbComponents], y: np.ndarray, k: int) -> tuple[float, int]:
    """Worst-target unified cost and its target index (ties: lowest index)."""
    vals = np.empty(len(comps))
    for qi, comp in enumerate(comps):
        try:
            vals[qi] = unified_cost(comp, y, k)
        except SingularGeometry as exc:
            raise SingularGeometry(str(exc), target_index=qi) from exc
    q = int(np.argmax(vals))
    return float(vals[q]), q
