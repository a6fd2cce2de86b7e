"""Statistical estimators over trajectory batches.

Turns recorded observables into the quantities the theory predicts: the
recovered mode weight (sign of the final magnetization), the orthogonal
variance per recorded time, an operational speciation time (when the mode
sign stabilizes), per-mode spin marginals for the Curie-Weiss target, and
discrepancies against reduced-ODE references.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .integrator import TrajectoryBatch
from .limits import LimitTrajectory
from .models import CurieWeissModel
from .schedules import eval_dilation

AMBIGUOUS_M = 1e-6


def _final_m(batch: TrajectoryBatch) -> np.ndarray:
    return batch.M[batch.ok, -1]


def mode_weight(batch: TrajectoryBatch) -> tuple[float, float]:
    """Fraction of trajectories whose final magnetization is positive.

    Finals within 1e-6 of zero are ambiguous: excluded from the estimate and
    counted through a warning.  Returns (p_hat, standard error).
    """
    finals = _final_m(batch)
    if finals.size == 0:
        raise ValueError("batch has no completed trajectories")
    ambiguous = np.abs(finals) <= AMBIGUOUS_M
    if ambiguous.any():
        warnings.warn(f"{int(ambiguous.sum())} trajectories have |final M| <= {AMBIGUOUS_M}; excluded")
        finals = finals[~ambiguous]
    n = finals.size
    p_hat = float((finals > 0).mean())
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / n)


def orth_variance(batch: TrajectoryBatch, t: float) -> float:
    """Mean over trajectories of |x - M r|^2 / (d - 1) at recorded time t."""
    idx = batch.time_index(t)
    return float(batch.sigma_perp2[batch.ok, idx].mean())


def default_speciation_threshold(d: int) -> float:
    # two standard deviations of the initial N(0, 1/d) magnetization
    return 2.0 / math.sqrt(d)


def speciation_times(batch: TrajectoryBatch, threshold: float | None = None) -> np.ndarray:
    """Per-trajectory stabilization time of the mode sign, NaN if unstable.

    A recorded time is "undecided" when the sign differs from the final sign
    or |M| is below the threshold; the speciation estimate is the first
    recorded time after the last undecided one (first grid time if none).
    """
    if threshold is None:
        threshold = default_speciation_threshold(batch.config.model.d)
    times = batch.times
    out = np.full(batch.config.n_traj, np.nan)
    for i in np.nonzero(batch.ok)[0]:
        m = batch.M[i]
        final_sign = np.sign(m[-1])
        undecided = (np.sign(m) != final_sign) | (np.abs(m) < threshold)
        if undecided[-1]:
            continue  # never stabilizes (final record itself undecided)
        if not undecided.any():
            out[i] = times[0]
        else:
            last_bad = np.nonzero(undecided)[0][-1]
            out[i] = times[last_bad + 1]
    return out


def speciation_time(batch: TrajectoryBatch, threshold: float | None = None) -> tuple[float, float, int]:
    """Batch speciation estimate: median stabilization time.

    Returns (t_time, tau_time, n_unstable); tau_time maps the median through
    the batch's dilation.  Unstable trajectories are excluded with a warning.
    """
    per_traj = speciation_times(batch, threshold)
    good = per_traj[~np.isnan(per_traj)]
    n_unstable = int(np.isnan(per_traj[batch.ok]).sum())
    if n_unstable:
        warnings.warn(f"{n_unstable} trajectories never stabilized their mode sign; excluded")
    if good.size == 0:
        raise ValueError("no trajectory stabilized its mode sign")
    t_med = float(np.median(good))
    tau_med, _ = eval_dilation(batch.config.dilation, t_med)
    return t_med, tau_med, n_unstable


def spin_stats(batch: TrajectoryBatch, roundable_margin: float = 0.5) -> dict[str, float]:
    """Per-mode fraction of +1 spins after rounding final coordinates.

    Coordinates with |x| <= roundable_margin cannot be attributed to a spin;
    more than 1% of them is a quality failure.  Trajectories are grouped by
    the sign of their final magnetization.
    """
    if not isinstance(batch.config.model, CurieWeissModel):
        raise TypeError("spin_stats applies to Curie-Weiss batches")
    if batch.final_state is not None:
        finals = batch.final_state[batch.ok]
    elif batch.config.record_coords:
        finals = batch.coords[batch.ok, -1, :]
    else:
        raise ValueError("no final coordinates recorded (need keep_final_state or record_coords)")
    unroundable = np.abs(finals) <= roundable_margin
    frac_bad = float(unroundable.mean())
    if frac_bad > 0.01:
        raise ValueError(f"{100 * frac_bad:.2f}% of final coordinates are not roundable to +-1")
    m_final = batch.M[batch.ok, -1]
    out: dict[str, float] = {"unroundable_fraction": frac_bad}
    for label, mask in (("+", m_final > 0), ("-", m_final < 0)):
        if mask.any():
            rows = finals[mask]
            out[label] = float((rows > 0).mean())
    return out


def compare_to_limit(batch: TrajectoryBatch, limit_traj: LimitTrajectory, observable: str = "M"):
    """Per-time |batch-mean observable - reduced-ODE mean| and its supremum.

    The grids must agree (same recorded times, within 1e-9).  Returns
    (sup_difference, times, per_time_differences).
    """
    if observable not in ("M", "mu", "sigma_perp2"):
        raise ValueError(f"unknown observable {observable!r}")
    bt = batch.times
    lt = limit_traj.times
    if bt.size != lt.size or np.max(np.abs(bt - lt)) > 1e-9:
        raise ValueError(
            f"time grids differ: batch has {bt.size} records on [{bt[0]}, {bt[-1]}], "
            f"reference has {lt.size} on [{lt[0]}, {lt[-1]}]"
        )
    values = getattr(batch, observable)[batch.ok]
    diffs = np.abs(values.mean(axis=0) - limit_traj.values.mean(axis=0))
    return float(diffs.max()), bt.copy(), diffs


def phase2_flatness(batch: TrajectoryBatch, t_start: float = 0.5) -> float:
    """Sup over recorded t >= t_start of |mean M_t - mean M_{t_start}|."""
    idx = batch.time_index(t_start)
    means = batch.M[batch.ok, idx:].mean(axis=0)
    return float(np.abs(means - means[0]).max())


@dataclass
class FeatureReport:
    """Estimated data features of one batch, JSON-friendly."""

    p_hat: float
    p_se: float
    n_ambiguous: int
    times: list = field(default_factory=list)
    sigma_perp2: list = field(default_factory=list)
    tau_s_t: float | None = None
    tau_s_tau: float | None = None
    n_unstable: int = 0
    spin_plus_fraction: dict | None = None
    n_traj: int = 0
    n_failed: int = 0
    d: int = 0
    delta_t: float = 0.0

    def as_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "p_se": self.p_se,
            "n_ambiguous": self.n_ambiguous,
            "times": list(self.times),
            "sigma_perp2": list(self.sigma_perp2),
            "tau_s_t": self.tau_s_t,
            "tau_s_tau": self.tau_s_tau,
            "n_unstable": self.n_unstable,
            "spin_plus_fraction": self.spin_plus_fraction,
            "n_traj": self.n_traj,
            "n_failed": self.n_failed,
            "d": self.d,
            "delta_t": self.delta_t,
        }


def feature_report(batch: TrajectoryBatch, speciation_threshold: float | None = None) -> FeatureReport:
    """Assemble the full estimator set for one batch."""
    finals = _final_m(batch)
    n_ambiguous = int((np.abs(finals) <= AMBIGUOUS_M).sum())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p_hat, p_se = mode_weight(batch)
        try:
            tau_s_t, tau_s_tau, n_unstable = speciation_time(batch, speciation_threshold)
        except ValueError:
            tau_s_t = tau_s_tau = None
            n_unstable = int(batch.ok.sum())
    report = FeatureReport(
        p_hat=p_hat,
        p_se=p_se,
        n_ambiguous=n_ambiguous,
        times=[float(t) for t in batch.times],
        sigma_perp2=[float(v) for v in batch.sigma_perp2[batch.ok].mean(axis=0)],
        tau_s_t=tau_s_t,
        tau_s_tau=tau_s_tau,
        n_unstable=n_unstable,
        n_traj=batch.config.n_traj,
        n_failed=int(batch.failed.size),
        d=batch.config.model.d,
        delta_t=batch.config.delta_t,
    )
    if isinstance(batch.config.model, CurieWeissModel):
        try:
            report.spin_plus_fraction = spin_stats(batch)
        except (ValueError, TypeError) as exc:
            report.spin_plus_fraction = {"error": str(exc)}
    return report
