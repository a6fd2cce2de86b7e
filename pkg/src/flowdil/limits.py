"""Reduced scalar ODEs and closed-form variance curves in the wide limit.

As d grows, the magnetization (and, for the spin model in its second phase,
each coordinate) of the full probability-flow ODE closes onto scalar ODEs
that no longer involve d.  These reduced dynamics and the matching
closed-form orthogonal-standard-deviation curves serve as independent
references for the full simulations, plus a potential-landscape view of the
magnetization drift whose balance point yields the 1/sqrt(d) speciation
scaling of the undilated linear-alpha VP schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import IntegrationError
from .models import CurieWeissModel, GaussianMixtureModel, TargetModel
from .schedules import InterpolantCoeffs


class LimitKind(str, Enum):
    VE_MAGNETIZATION = "ve-magnetization"
    VP_DILATED_PHASE1_MU = "vp-dilated-phase1-mu"
    VP_DILATED_PHASE2_M = "vp-dilated-phase2-M"
    VE_DILATED_PHASE1_M = "ve-dilated-phase1-M"
    CW_VE_PHASE1_M = "cw-ve-phase1-M"
    CW_VE_PHASE2_COORD = "cw-ve-phase2-coord"
    CW_VP_PHASE1_MU = "cw-vp-phase1-mu"
    CW_VP_PHASE2_COORD = "cw-vp-phase2-coord"
    VP_CIRCULAR_PHASE2_M = "vp-circular-phase2-M"


# valid interval per kind; open_right means the RHS is singular at the right end
_INTERVALS: dict[LimitKind, tuple[float, float, bool]] = {
    LimitKind.VE_MAGNETIZATION: (0.0, 1.0, True),
    LimitKind.VP_DILATED_PHASE1_MU: (0.0, 0.5, False),
    LimitKind.VP_DILATED_PHASE2_M: (0.5, 1.0, True),
    LimitKind.VE_DILATED_PHASE1_M: (0.0, 0.5, True),
    LimitKind.CW_VE_PHASE1_M: (0.0, 0.5, True),
    LimitKind.CW_VE_PHASE2_COORD: (0.5, 1.0, True),
    LimitKind.CW_VP_PHASE1_MU: (0.0, 0.5, False),
    LimitKind.CW_VP_PHASE2_COORD: (0.5, 1.0, True),
    LimitKind.VP_CIRCULAR_PHASE2_M: (0.5, 1.0, True),
}


@dataclass(frozen=True)
class LimitParams:
    """Scalar parameters feeding the reduced ODEs."""

    h: float = 0.0
    sigma2: float = 1.0
    kappa: float = 3.0
    m: float = 1.0
    beta_temp: float = 2.0
    mode_sign: float = 1.0

    @classmethod
    def from_model(cls, model: TargetModel, kappa: float = 3.0, mode_sign: float = 1.0) -> "LimitParams":
        if isinstance(model, GaussianMixtureModel):
            return cls(h=model.h, sigma2=model.sigma2, kappa=kappa, m=1.0, mode_sign=mode_sign)
        if isinstance(model, CurieWeissModel):
            return cls(h=model.h, kappa=kappa, m=model.m, beta_temp=model.beta_temp, mode_sign=mode_sign)
        raise TypeError(f"unsupported model type {type(model)!r}")


def limit_interval(kind: LimitKind) -> tuple[float, float]:
    lo, hi, _ = _INTERVALS[LimitKind(kind)]
    return lo, hi


def limit_rhs(kind: LimitKind, t: float, y, params: LimitParams):
    """Right-hand side of the reduced ODE; y may be a scalar or an array."""
    kind = LimitKind(kind)
    lo, hi, open_right = _INTERVALS[kind]
    if t < lo or t > hi or (open_right and t == hi):
        end = f"[{lo}, {hi}{')' if open_right else ']'}"
        raise ValueError(f"t={t} outside the valid interval {end} of {kind.value}")
    y = np.asarray(y, dtype=np.float64)
    h, s2, k, m = params.h, params.sigma2, params.kappa, params.m

    if kind is LimitKind.VE_MAGNETIZATION:
        one = 1.0 - t
        return (-y + np.tanh(h + t * y / one**2)) / one
    if kind is LimitKind.VP_DILATED_PHASE1_MU:
        return 2.0 * k * np.tanh(h + 2.0 * k * t * y)
    if kind is LimitKind.VP_DILATED_PHASE2_M:
        denom = (1.0 - t) ** 2 + s2 * (t - 0.5) ** 2
        return ((-(1.0 - t) + s2 * (t - 0.5)) * y + (1.0 - t) * np.sign(y)) / denom
    if kind is LimitKind.VE_DILATED_PHASE1_M:
        return (-y + np.tanh(h + 2.0 * t * y / (1.0 - 2.0 * t) ** 2)) / (0.5 - t)
    if kind is LimitKind.CW_VE_PHASE1_M:
        return (-y + m * np.tanh(m * h + 2.0 * t * m * y / (1.0 - 2.0 * t) ** 2)) / (0.5 - t)
    if kind is LimitKind.CW_VE_PHASE2_COORD:
        bm = params.beta_temp * m * params.mode_sign
        return (-y + np.tanh(bm + y / (k**2 * (2.0 - 2.0 * t) ** 2))) / (1.0 - t)
    if kind is LimitKind.CW_VP_PHASE1_MU:
        return 2.0 * k * m * np.tanh(m * h + 2.0 * k * m * t * y)
    if kind is LimitKind.CW_VP_PHASE2_COORD:
        bm = params.beta_temp * m * params.mode_sign
        return (-y + np.tanh(bm + (2.0 * t - 1.0) * y / (2.0 - 2.0 * t) ** 2)) / (1.0 - t)
    # VP_CIRCULAR_PHASE2_M
    denom = 1.0 + (s2 - 1.0) * (2.0 * t - 1.0) ** 2
    return ((s2 - 1.0) * (2.0 * t - 1.0) * 2.0 * y + 2.0 * np.sign(y)) / denom


@dataclass
class LimitTrajectory:
    """Euler solution of a reduced ODE; values indexed [member, time]."""

    kind: LimitKind
    params: LimitParams
    times: np.ndarray   # (n_times,)
    values: np.ndarray  # (n_members, n_times)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]


def integrate_limit(kind: LimitKind, initial, t0: float, t1: float, delta_t: float,
                    params: LimitParams) -> LimitTrajectory:
    """Left-endpoint Euler on the uniform grid, same convention as the full
    integrator: the RHS is evaluated at t_k < t1 only, so t1 may sit on a
    singular interval end."""
    kind = LimitKind(kind)
    lo, hi, _ = _INTERVALS[kind]
    if not (lo <= t0 < t1 <= hi):
        raise ValueError(f"[{t0}, {t1}] is not inside the valid interval [{lo}, {hi}] of {kind.value}")
    n_steps = round((t1 - t0) / delta_t)
    if n_steps < 1 or abs(n_steps * delta_t - (t1 - t0)) > 1e-9:
        raise ValueError(f"delta_t={delta_t} does not divide [{t0}, {t1}] into an integer number of steps")
    y = np.atleast_1d(np.asarray(initial, dtype=np.float64)).copy()
    times = t0 + (t1 - t0) * np.arange(n_steps + 1) / n_steps
    values = np.empty((y.size, n_steps + 1))
    values[:, 0] = y
    dt = (t1 - t0) / n_steps
    for idx in range(n_steps):
        y = y + dt * limit_rhs(kind, float(times[idx]), y, params)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(
                f"reduced ODE {kind.value} blew up at t={times[idx + 1]}", t=float(times[idx + 1])
            )
        values[:, idx + 1] = y
    return LimitTrajectory(kind=kind, params=params, times=times, values=values)


ORTH_STD_VARIANTS = ("vp-dilated", "ve-dilated", "vp-circular")


def predicted_orth_std(variant: str, t: float, params: LimitParams) -> float:
    """Closed-form orthogonal standard deviation at time t.

    The ``ve-dilated`` first-phase value is in units of sqrt(d); all other
    values are order one.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    s2, k = params.sigma2, params.kappa
    if variant == "vp-dilated":
        if t <= 0.5:
            return 1.0
        return math.sqrt((2.0 - 2.0 * t) ** 2 + (2.0 * t - 1.0) ** 2 * s2)
    if variant == "ve-dilated":
        if t < 0.5:
            return 1.0 - 2.0 * t
        return k * math.sqrt((k**2 * (2.0 - 2.0 * t) ** 2 + s2) / (k**2 + s2))
    if variant == "vp-circular":
        if t <= 0.5:
            return 1.0
        return math.sqrt(1.0 + (s2 - 1.0) * (2.0 * t - 1.0) ** 2)
    raise ValueError(f"unknown variant {variant!r}; expected one of {ORTH_STD_VARIANTS}")


def _log_cosh(z):
    z = np.abs(z)
    return z + np.log1p(np.exp(-2.0 * z)) - math.log(2.0)


def potential_landscape(model: GaussianMixtureModel, coeffs: InterpolantCoeffs, mu, d: int):
    """Potential V(mu) whose negative gradient is the mu drift (c = 1 fields).

    Defined up to a mu-independent constant; needs beta > 0 (the constant
    diverges as beta -> 0, so the landscape is meaningful only after the
    interpolation has started).
    """
    if coeffs.c != 1.0:
        raise ValueError("the potential is defined for unit noise scale (c = 1)")
    if coeffs.beta <= 0.0:
        raise ValueError("potential requires beta > 0")
    a, ad, b, bd = coeffs.alpha, coeffs.alpha_dot, coeffs.beta, coeffs.beta_dot
    s2 = model.sigma2
    denom = a * a + s2 * b * b
    mu = np.asarray(mu, dtype=np.float64)
    quad = -(a * ad + s2 * b * bd) / (2.0 * denom) * mu**2
    well = -(a * coeffs.cross / b) * _log_cosh(model.h + b * math.sqrt(d) * mu / denom)
    return quad + well


def potential_drift(model: GaussianMixtureModel, coeffs: InterpolantCoeffs, mu, d: int):
    """The mu drift matching -dV/dmu of ``potential_landscape``."""
    a, ad, b, bd = coeffs.alpha, coeffs.alpha_dot, coeffs.beta, coeffs.beta_dot
    s2 = model.sigma2
    denom = a * a + s2 * b * b
    mu = np.asarray(mu, dtype=np.float64)
    root_d = math.sqrt(d)
    return (a * ad + s2 * b * bd) / denom * mu + (a * coeffs.cross / denom) * root_d * np.tanh(
        model.h + b * root_d * mu / denom
    )


@dataclass(frozen=True)
class SpeciationScaling:
    """Log-log fit of the noise/signal balance time against dimension."""

    dims: tuple
    tau0: tuple
    slope: float


def speciation_scaling(dims, alpha_form: str = "linear") -> SpeciationScaling:
    """Balance time tau0 solving alpha(tau) = sqrt(d) * beta(tau) per dimension,
    and the slope of log tau0 against log d.

    The balance point is where the data term sqrt(d) beta m overtakes the
    noise term alpha Z in the magnetization, i.e. the speciation time of the
    undilated VP schedule; it decays like d^(-1/2) for both alpha forms.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 3 or max(dims) / min(dims) < 100:
        raise ValueError("need at least 3 dimensions spanning at least two decades")
    tau0 = []
    for d in dims:
        root_d = math.sqrt(d)
        if alpha_form == "linear":
            tau0.append(1.0 / (1.0 + root_d))
            continue
        if alpha_form != "circular":
            raise ValueError(f"unknown alpha_form {alpha_form!r}")
        lo, hi = 0.0, 1.0  # f(tau) = sqrt(1 - tau^2) - sqrt(d) tau is decreasing
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if math.sqrt(1.0 - mid * mid) - root_d * mid > 0.0:
                lo = mid
            else:
                hi = mid
        tau0.append(0.5 * (lo + hi))
    slope = float(np.polyfit(np.log(dims), np.log(tau0), 1)[0])
    return SpeciationScaling(dims=dims, tau0=tuple(tau0), slope=slope)


def cw_conservation_mc(m: float, beta_temp: float, lam: float, n_samples: int,
                       rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo check of E[tanh(beta m + lam Z + lam^2 a)] = m.

    Z is standard normal and a = +-1 with probabilities (1 +- m)/2; the
    identity holds exactly at the fixed point m = tanh(beta m) and underpins
    the constancy of the spin-model magnetization in its second phase.
    Returns (estimate, standard error).
    """
    z = rng.standard_normal(n_samples)
    a = np.where(rng.random(n_samples) < 0.5 * (1.0 + m), 1.0, -1.0)
    vals = np.tanh(beta_temp * m + lam * z + lam * lam * a)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))
