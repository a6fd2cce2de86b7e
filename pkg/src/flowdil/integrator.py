"""Batched forward-Euler integration of the probability-flow ODE.

The drift is evaluated at the left endpoint of each step (t_k = k / K), so
the fields are never queried at t = 1 where alpha = 0 makes them singular;
the final state is the output of the last step.  Randomness enters only
through the initial noise, drawn from one counter-based stream per
trajectory keyed by (master seed, trajectory index), which makes a batch a
pure function of its config no matter how the rows are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError
from .models import CurieWeissModel, GaussianMixtureModel, TargetModel
from .schedules import InterpolantSpec, TimeDilation, eval_dilation
from .velocity import VelocityField

_MASK64 = (1 << 64) - 1


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trajectory: Philox keyed by (seed, index)."""
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def init_noise(d: int, c: float, rng: np.random.Generator) -> np.ndarray:
    """Initial state: d i.i.d. Gaussian entries with standard deviation c."""
    if d < 1:
        raise ValueError("d must be positive")
    if c <= 0.0:
        raise ValueError("noise scale c must be positive")
    return c * rng.standard_normal(d)


def euler_step(field: VelocityField, x: np.ndarray, t: float, delta_t: float) -> np.ndarray:
    """One explicit Euler step x + delta_t * b_t(x)."""
    v = field.drift(x, t)
    if not np.all(np.isfinite(v)):
        tau, _ = eval_dilation(field.dilation, t)
        raise IntegrationError(f"non-finite drift at t={t} (tau={tau})", t=t)
    return x + delta_t * v


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a batch run depends on; same config + seed => same batch."""

    model: TargetModel
    interpolant: InterpolantSpec
    dilation: TimeDilation
    delta_t: float
    n_traj: int
    seed: int
    record_coords: int = 0
    record_stride: int = 1
    keep_final_state: bool = True

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.model.d < 1:
            raise ValueError("d must be >= 1")
        if not 0.0 < self.delta_t <= 1.0:
            raise ValueError("delta_t must lie in (0, 1]")
        k = round(1.0 / self.delta_t)
        if abs(k * self.delta_t - 1.0) > 1e-9:
            raise ValueError(f"delta_t={self.delta_t} does not divide [0, 1] into an integer number of steps")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not 0 <= self.record_coords <= self.model.d:
            raise ValueError("record_coords must lie in [0, d]")

    @property
    def n_steps(self) -> int:
        return round(1.0 / self.delta_t)


@dataclass(frozen=True)
class ObservableRecord:
    """State summary of one trajectory at one recorded time."""

    t: float
    M: float            # r.x / d
    mu: float           # r.x / sqrt(d)
    sigma_perp2: float  # |x - M r|^2 / (d - 1)
    coords: np.ndarray  # leading record_coords entries of x


@dataclass
class TrajectoryBatch:
    """Recorded observables of n_traj trajectories on a shared time grid.

    Arrays are indexed [trajectory, record]; ``failed`` lists trajectories
    that produced a non-finite state (their rows are NaN from the failing
    step onward).
    """

    config: SimulationConfig
    times: np.ndarray          # (n_rec,)
    M: np.ndarray              # (n_traj, n_rec)
    mu: np.ndarray             # (n_traj, n_rec)
    sigma_perp2: np.ndarray    # (n_traj, n_rec)
    coords: np.ndarray         # (n_traj, n_rec, record_coords)
    sub_keys: np.ndarray       # (n_traj, 2) Philox keys
    final_state: np.ndarray | None = None
    failures: list = field(default_factory=list)  # (trajectory, step) pairs

    @property
    def failed(self) -> np.ndarray:
        return np.array(sorted({i for i, _ in self.failures}), dtype=int)

    @property
    def ok(self) -> np.ndarray:
        mask = np.ones(self.config.n_traj, dtype=bool)
        mask[self.failed] = False
        return mask

    def record(self, traj: int, rec: int) -> ObservableRecord:
        return ObservableRecord(
            t=float(self.times[rec]),
            M=float(self.M[traj, rec]),
            mu=float(self.mu[traj, rec]),
            sigma_perp2=float(self.sigma_perp2[traj, rec]),
            coords=self.coords[traj, rec].copy(),
        )

    def time_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.times - t) <= 1e-9)[0]
        if hits.size == 0:
            raise ValueError(f"t={t} is not a recorded time; available: {self.times.tolist()}")
        return int(hits[0])


def _observe(x: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    s = x.sum(axis=1)
    m = s / d
    sq = np.square(x).sum(axis=1)
    # |x - M r|^2 = |x|^2 - d M^2 since r.x = d M and |r|^2 = d
    perp2 = np.maximum(sq - d * m * m, 0.0) / max(d - 1, 1)
    return m, perp2


def simulate_batch(config: SimulationConfig) -> TrajectoryBatch:
    """Integrate all trajectories on the uniform grid and record observables.

    Records the state at every record_stride-th grid time (starting at t = 0)
    and always at t = 1.  A trajectory whose state turns non-finite is frozen
    at NaN and reported in ``failures`` with its step index; the rest of the
    batch continues.
    """
    model = config.model
    d, n, K = model.d, config.n_traj, config.n_steps
    dt = 1.0 / K
    field_ = VelocityField(model, config.interpolant, config.dilation)
    c0 = 1.0 if config.interpolant.noise_scale == "vp" else math.sqrt(d)

    sub_keys = np.empty((n, 2), dtype=np.uint64)
    x = np.empty((n, d), dtype=np.float64)
    for i in range(n):
        rng = trajectory_rng(config.seed, i)
        sub_keys[i] = (config.seed & _MASK64, i)
        x[i] = init_noise(d, c0, rng)

    rec_steps = list(range(0, K, config.record_stride)) + [K]
    times = np.array([k / K for k in rec_steps])
    n_rec = len(rec_steps)
    M = np.empty((n, n_rec))
    mu = np.empty((n, n_rec))
    perp2 = np.empty((n, n_rec))
    coords = np.empty((n, n_rec, config.record_coords))

    failures: list[tuple[int, int]] = []
    alive = np.ones(n, dtype=bool)
    rec = 0
    for k in range(K):
        if rec_steps[rec] == k:
            M[:, rec], perp2[:, rec] = _observe(x, d)
            mu[:, rec] = M[:, rec] * math.sqrt(d)
            if config.record_coords:
                coords[:, rec, :] = x[:, : config.record_coords]
            rec += 1
        v = field_.drift(x, k / K)
        x += dt * v
        if not np.all(np.isfinite(x)):
            bad = ~np.isfinite(x).all(axis=1)
            for i in np.nonzero(bad & alive)[0]:
                failures.append((int(i), k))
            alive &= ~bad
            x[bad] = np.nan

    M[:, -1], perp2[:, -1] = _observe(x, d)
    mu[:, -1] = M[:, -1] * math.sqrt(d)
    if config.record_coords:
        coords[:, -1, :] = x[:, : config.record_coords]

    return TrajectoryBatch(
        config=config,
        times=times,
        M=M,
        mu=mu,
        sigma_perp2=perp2,
        coords=coords,
        sub_keys=sub_keys,
        final_state=x if config.keep_final_state else None,
        failures=failures,
    )
