"""Scene geometry, physical constants and scenario generation.

A scenario is a widely separated (non-coherent) MIMO radar scene on a 2-D
plane: M transmitters, N receivers, Q point targets, plus the complex path
gains h[m, q, n] of every transmitter-target-receiver path and the waveform /
noise constants needed by the localization error bounds.

Units are SI throughout: meters, seconds, Hz, W, W/Hz.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RadallocError, ZeroDistance

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class Point2D:
    x: float  # m
    y: float  # m

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class PhysConst:
    """Waveform and noise constants shared by all paths."""

    carrier_freq: float = 1.0e9       # Hz
    speed_of_light: float = SPEED_OF_LIGHT  # m/s
    noise_psd: float = 1.0e-20        # W/Hz, one-sided
    pulse_rep_freq: float = 5.0e3     # Hz
    integration_time: float = 10.0e-3  # s

    def __post_init__(self):
        for name in ("carrier_freq", "speed_of_light", "noise_psd",
                     "pulse_rep_freq", "integration_time"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"PhysConst.{name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class Budgets:
    """Resource budgets for the allocation problems.

    total_power / total_bandwidth constrain the optimized vectors; the per-tx
    values are the fixed uniform settings of whichever resource is NOT being
    optimized (per-tx bandwidth for power allocation, per-tx power for
    bandwidth allocation).
    """

    total_power: float       # W
    total_bandwidth: float   # Hz
    per_tx_power: float      # W
    per_tx_bandwidth: float  # Hz

    def __post_init__(self):
        for name in ("total_power", "total_bandwidth", "per_tx_power", "per_tx_bandwidth"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"Budgets.{name} must be finite and > 0, got {v}")

    @classmethod
    def uniform(cls, total_power: float, total_bandwidth: float, n_tx: int) -> "Budgets":
        """Budgets with the fixed resources spread evenly over n_tx transmitters."""
        return cls(total_power, total_bandwidth,
                   total_power / n_tx, total_bandwidth / n_tx)


def _as_points(seq) -> tuple[Point2D, ...]:
    out = []
    for item in seq:
        if isinstance(item, Point2D):
            out.append(item)
        else:
            x, y = item
            out.append(Point2D(float(x), float(y)))
    return tuple(out)


@dataclass
class Scenario:
    transmitters: Sequence[Point2D]
    receivers: Sequence[Point2D]
    targets: Sequence[Point2D]
    gains: np.ndarray  # complex, shape (M, Q, N)
    consts: PhysConst = field(default_factory=PhysConst)

    def __post_init__(self):
        self.transmitters = _as_points(self.transmitters)
        self.receivers = _as_points(self.receivers)
        self.targets = _as_points(self.targets)
        if min(len(self.transmitters), len(self.receivers), len(self.targets)) < 1:
            raise ValueError("need at least one transmitter, receiver and target")
        self.gains = np.asarray(self.gains, dtype=complex)
        expected = (self.n_tx, self.n_targets, self.n_rx)
        if self.gains.shape != expected:
            raise ValueError(f"gains shape {self.gains.shape}, expected {expected}")
        # no coincident sensor/target placements
        d_tx, d_rx = distances(self)
        del d_tx, d_rx

    @property
    def n_tx(self) -> int:
        return len(self.transmitters)

    @property
    def n_rx(self) -> int:
        return len(self.receivers)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def tx_xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.transmitters])

    @property
    def rx_xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.receivers])

    @property
    def target_xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.targets])

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        m, q, n = self.gains.shape
        flat = self.gains.reshape(m * q * n)
        return {
            "consts": {
                "carrier_freq_hz": self.consts.carrier_freq,
                "speed_of_light_m_per_s": self.consts.speed_of_light,
                "noise_psd_w_per_hz": self.consts.noise_psd,
                "pulse_rep_freq_hz": self.consts.pulse_rep_freq,
                "integration_time_s": self.consts.integration_time,
            },
            "transmitters": [[p.x, p.y] for p in self.transmitters],
            "receivers": [[p.x, p.y] for p in self.receivers],
            "targets": [[p.x, p.y] for p in self.targets],
            # m-major, then q, then n
            "gains": [[float(g.real), float(g.imag)] for g in flat],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        c = doc["consts"]
        consts = PhysConst(
            carrier_freq=c["carrier_freq_hz"],
            speed_of_light=c["speed_of_light_m_per_s"],
            noise_psd=c["noise_psd_w_per_hz"],
            pulse_rep_freq=c["pulse_rep_freq_hz"],
            integration_time=c["integration_time_s"],
        )
        tx = doc["transmitters"]
        rx = doc["receivers"]
        tar = doc["targets"]
        m, q, n = len(tx), len(tar), len(rx)
        pairs = np.array(doc["gains"], dtype=float)
        if pairs.shape != (m * q * n, 2):
            raise ValueError(f"gains list has shape {pairs.shape}, expected ({m * q * n}, 2)")
        gains = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(m, q, n)
        return cls(tx, rx, tar, gains, consts)

    @classmethod
    def from_json(cls, text_or_path) -> "Scenario":
        """Parse from a JSON string, or from a file path if given one."""
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def distances(s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Transmitter-target and target-receiver distances.

    Returns (d_tx, d_rx) with shapes (M, Q) and (Q, N).  Raises ZeroDistance
    on any coincident pair.
    """
    tx = s.tx_xy[:, None, :] - s.target_xy[None, :, :]   # (M, Q, 2)
    rx = s.target_xy[:, None, :] - s.rx_xy[None, :, :]   # (Q, N, 2)
    d_tx = np.sqrt((tx ** 2).sum(axis=-1))
    d_rx = np.sqrt((rx ** 2).sum(axis=-1))
    if not d_tx.all():
        m, q = np.argwhere(d_tx == 0.0)[0]
        raise ZeroDistance(f"transmitter {m} coincides with target {q}")
    if not d_rx.all():
        q, n = np.argwhere(d_rx == 0.0)[0]
        raise ZeroDistance(f"receiver {n} coincides with target {q}")
    return d_tx, d_rx


def pathloss(s: Scenario) -> np.ndarray:
    """Two-leg propagation attenuation, shape (M, Q, N).

    alpha[m, q, n] = 1/(4 pi d_tx^2) * 1/(4 pi d_rx^2) * 1/(4 pi fc^2):
    inverse-square spreading on each leg and a carrier-frequency aperture
    factor.  Independent of the absolute position and orientation of the
    scene (depends on distances only).
    """
    d_tx, d_rx = distances(s)
    four_pi = 4.0 * math.pi
    leg_tx = 1.0 / (four_pi * d_tx ** 2)                # (M, Q)
    leg_rx = 1.0 / (four_pi * d_rx ** 2)                # (Q, N)
    ap = 1.0 / (four_pi * s.consts.carrier_freq ** 2)
    return leg_tx[:, :, None] * leg_rx[None, :, :] * ap


@dataclass(frozen=True)
class LayoutDistribution:
    """Sampling law for random scenes: uniform placements in a square area."""

    area_side: float = 20000.0   # m
    n_tx: int = 5
    n_rx: int = 5
    n_targets: int = 4
    gain_variance: float = 10.0  # E|h|^2
    min_separation: float = 1.0  # m, sensor-to-target
    consts: PhysConst = field(default_factory=PhysConst)

    def __post_init__(self):
        if self.area_side <= 0 or self.gain_variance <= 0 or self.min_separation <= 0:
            raise ValueError("area_side, gain_variance and min_separation must be > 0")
        if min(self.n_tx, self.n_rx, self.n_targets) < 1:
            raise ValueError("need at least one transmitter, receiver and target")


_MAX_REJECTIONS = 10_000


def random_scenario(cfg: LayoutDistribution, seed) -> Scenario:
    """Draw a scenario: uniform sensor/target placements, complex normal gains.

    Targets closer than cfg.min_separation to any sensor are redrawn; after
    10^4 rejections total the draw is abandoned with an error.  Deterministic
    given (cfg, seed); seed is anything np.random.default_rng accepts.
    """
    rng = np.random.default_rng(seed)
    side = cfg.area_side
    tx = rng.uniform(0.0, side, size=(cfg.n_tx, 2))
    rx = rng.uniform(0.0, side, size=(cfg.n_rx, 2))
    sensors = np.vstack([tx, rx])

    targets = np.empty((cfg.n_targets, 2))
    rejections = 0
    for qi in range(cfg.n_targets):
        while True:
            cand = rng.uniform(0.0, side, size=2)
            d = np.sqrt(((sensors - cand) ** 2).sum(axis=1))
            if d.min() >= cfg.min_separation:
                targets[qi] = cand
                break
            rejections += 1
            if rejections > _MAX_REJECTIONS:
                raise RadallocError(
                    f"target placement rejected {rejections} times; "
                    f"min_separation={cfg.min_separation} m is too large for "
                    f"area_side={side} m")

    scale = math.sqrt(cfg.gain_variance / 2.0)
    shape = (cfg.n_tx, cfg.n_targets, cfg.n_rx)
    gains = rng.normal(0.0, scale, size=shape) + 1j * rng.normal(0.0, scale, size=shape)
    return Scenario(tx, rx, targets, gains, cfg.consts)
