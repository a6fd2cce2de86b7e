"""Interpolant coefficient families and time-dilation schedules.

A schedule is a monotone map t -> tau(t) on [0, 1] that reparameterizes the
interpolation clock.  Running a uniform-grid integrator in t through a
dilation is equivalent to using a non-uniform noise schedule in tau.  The
instantaneous interpolant coefficients are

    alpha(tau) = 1 - tau            (linear)   or   sqrt(1 - tau^2)  (circular)
    beta(tau)  = tau
    c          = 1 (VP)  or  sqrt(d) (VE)

with time derivatives taken in t through the chain rule, alpha_dot =
(d alpha / d tau) * tau_dot and beta_dot = tau_dot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SingularityError

DILATION_KINDS = ("uniform", "dilated-vp", "dilated-ve", "ddpm-gamma")
ALPHA_FORMS = ("linear", "circular")
NOISE_SCALES = ("vp", "ve")


@dataclass(frozen=True)
class TimeDilation:
    """Monotone clock map t -> (tau, tau_dot) on [0, 1].

    kind:
      uniform      tau = t
      dilated-vp   piecewise linear, tau(1/2) = kappa/sqrt(dim); spends the
                   first half of the t-clock inside tau in [0, kappa/sqrt(d)]
      dilated-ve   piecewise linear, tau(1/2) = 1 - kappa/sqrt(dim); spends
                   the second half inside tau in [1 - kappa/sqrt(d), 1]
      ddpm-gamma   tau = exp(gamma_min ln t - (gamma_max - gamma_min) (ln t)^2 / 2),
                   the schedule induced by a linear-in-time damping coefficient;
                   reaches tau = 0 only asymptotically as t -> 0+ (plotting /
                   comparison use)
    """

    kind: str = "uniform"
    kappa: float = 3.0
    dim: int = 1
    gamma_min: float = 0.1
    gamma_max: float = 20.0

    def __post_init__(self):
        if self.kind not in DILATION_KINDS:
            raise ValueError(f"unknown dilation kind {self.kind!r}; expected one of {DILATION_KINDS}")
        if self.kind in ("dilated-vp", "dilated-ve"):
            if self.kappa <= 0.0:
                raise ValueError("kappa must be positive")
            if self.dim < 1:
                raise ValueError("dim must be a positive integer")
            if self.kappa / math.sqrt(self.dim) >= 1.0:
                raise ValueError("kappa/sqrt(dim) must be < 1 for a monotone dilation")
        if self.kind == "ddpm-gamma" and not 0.0 <= self.gamma_min <= self.gamma_max:
            raise ValueError("need 0 <= gamma_min <= gamma_max")


def eval_dilation(dilation: TimeDilation, t: float) -> tuple[float, float]:
    """Evaluate (tau, tau_dot) at time t in [0, 1].

    At the t = 1/2 kink of the piecewise-linear kinds the right derivative is
    returned, matching a left-endpoint Euler integrator whose phases are
    half-open on the right.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    kind = dilation.kind
    if kind == "uniform":
        return float(t), 1.0
    if kind == "dilated-vp":
        eps = dilation.kappa / math.sqrt(dilation.dim)
        if t < 0.5:
            return 2.0 * eps * t, 2.0 * eps
        return eps + (1.0 - eps) * (2.0 * t - 1.0), 2.0 * (1.0 - eps)
    if kind == "dilated-ve":
        eps = dilation.kappa / math.sqrt(dilation.dim)
        if t < 0.5:
            return (1.0 - eps) * 2.0 * t, 2.0 * (1.0 - eps)
        return (1.0 - eps) + eps * (2.0 * t - 1.0), 2.0 * eps
    # ddpm-gamma: logarithmic singularity at t = 0
    if t == 0.0:
        raise ValueError("ddpm-gamma dilation is undefined at t = 0 (log singularity)")
    lt = math.log(t)
    tau = math.exp(dilation.gamma_min * lt - 0.5 * (dilation.gamma_max - dilation.gamma_min) * lt * lt)
    tau_dot = tau * (dilation.gamma_min - (dilation.gamma_max - dilation.gamma_min) * lt) / t
    return tau, tau_dot


@dataclass(frozen=True)
class InterpolantSpec:
    """Coefficient family: alpha form plus the initial noise scale c."""

    alpha_form: str = "linear"
    noise_scale: str = "vp"

    def __post_init__(self):
        if self.alpha_form not in ALPHA_FORMS:
            raise ValueError(f"unknown alpha_form {self.alpha_form!r}; expected one of {ALPHA_FORMS}")
        if self.noise_scale not in NOISE_SCALES:
            raise ValueError(f"unknown noise_scale {self.noise_scale!r}; expected one of {NOISE_SCALES}")


@dataclass(frozen=True)
class InterpolantCoeffs:
    """Instantaneous (alpha, alpha_dot, beta, beta_dot, c) at one time."""

    alpha: float
    alpha_dot: float
    beta: float
    beta_dot: float
    c: float

    @property
    def cross(self) -> float:
        """alpha * beta_dot - alpha_dot * beta (the Wronskian of the pair)."""
        return self.alpha * self.beta_dot - self.alpha_dot * self.beta


def eval_coeffs(spec: InterpolantSpec, dilation: TimeDilation, t: float, d: int) -> InterpolantCoeffs:
    """Instantaneous coefficients at t, with derivatives in t via tau_dot."""
    tau, tau_dot = eval_dilation(dilation, t)
    if spec.alpha_form == "linear":
        alpha = 1.0 - tau
        dalpha_dtau = -1.0
    else:
        if tau >= 1.0:
            raise SingularityError("circular alpha has a singular derivative at tau = 1")
        alpha = math.sqrt(1.0 - tau * tau)
        dalpha_dtau = -tau / alpha
    c = 1.0 if spec.noise_scale == "vp" else math.sqrt(d)
    coeffs = InterpolantCoeffs(
        alpha=alpha,
        alpha_dot=dalpha_dtau * tau_dot,
        beta=tau,
        beta_dot=tau_dot,
        c=c,
    )
    assert coeffs.alpha_dot <= 0.0 <= coeffs.beta_dot
    return coeffs


def ve_sde_noise_magnitude(t: float, sigma_min: float = 0.01, sigma_max: float = 100.0) -> float:
    """Noise magnitude sqrt(sigma_{1-t}^2 - sigma_0^2) of the exploding-variance
    SDE with sigma_s = sigma_min (sigma_max/sigma_min)^s.

    Plotting formula only (schedule comparison figures); not a runnable
    interpolant coefficient.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    if not 0.0 < sigma_min <= sigma_max:
        raise ValueError("need 0 < sigma_min <= sigma_max")
    ratio = sigma_max / sigma_min
    s2 = (sigma_min * ratio ** (1.0 - t)) ** 2
    return math.sqrt(max(s2 - sigma_min**2, 0.0))
