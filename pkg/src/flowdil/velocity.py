"""Exact closed-form probability-flow velocity fields.

For the Gaussian mixture target the drift is linear in x plus a rank-one
pull along r whose strength is a tanh of the magnetization:

    v = (c^2 a a' + s2 b b') / D * x
      + c^2 a (a b' - a' b) / D * tanh(h + b (r.x) / D) * r,
    D = c^2 a^2 + s2 b^2,

with (a, a', b, b', c) the instantaneous interpolant coefficients and s2 the
per-mode variance.  One implementation covers VP, VE and every dilated
variant; the schedule alone decides which regime runs.

For the Curie-Weiss target the drift routes through the posterior mean of
the spins ("denoiser") eta(x) = E[a | I_t = x]:

    v = (a'/a) x + ((a b' - a' b)/a) eta(x),

where eta mixes the two per-mode conditional means tanh(+-beta m + s_i) with
posterior mode weights computed in log space (see _kernels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularityError
from .models import CurieWeissModel, GaussianMixtureModel, TargetModel
from .schedules import InterpolantCoeffs, InterpolantSpec, TimeDilation, eval_coeffs


@dataclass(frozen=True)
class FieldContext:
    """A target model paired with instantaneous interpolant coefficients."""

    model: TargetModel
    coeffs: InterpolantCoeffs


def gm_scalar_coefficients(ctx: FieldContext) -> tuple[float, float, float]:
    """(acoef, bcoef, gain) of the mixture drift; raises off the valid domain."""
    c = ctx.coeffs
    denom = c.c**2 * c.alpha**2 + ctx.model.sigma2 * c.beta**2
    if denom <= 0.0:
        raise SingularityError(f"c^2 alpha^2 + sigma^2 beta^2 = {denom} is not positive")
    acoef = (c.c**2 * c.alpha * c.alpha_dot + ctx.model.sigma2 * c.beta * c.beta_dot) / denom
    bcoef = c.c**2 * c.alpha * c.cross / denom
    gain = c.beta / denom
    return acoef, bcoef, gain


def cw_scalar_coefficients(ctx: FieldContext) -> tuple[float, float, float]:
    """(s_scale, coef_x, coef_eta) of the Curie-Weiss drift."""
    c = ctx.coeffs
    if c.alpha <= 0.0:
        raise SingularityError(f"alpha = {c.alpha} is not positive")
    s_scale = c.beta / (c.c**2 * c.alpha**2)
    coef_x = c.alpha_dot / c.alpha
    coef_eta = c.cross / c.alpha
    return s_scale, coef_x, coef_eta


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim != 2:
        raise ValueError(f"state must be 1-D or 2-D, got shape {x.shape}")
    return x, False


def gm_velocity(ctx: FieldContext, x: np.ndarray) -> np.ndarray:
    """Mixture drift at state x; x is one state (d,) or a batch (n, d)."""
    if not isinstance(ctx.model, GaussianMixtureModel):
        raise TypeError("gm_velocity needs a GaussianMixtureModel context")
    acoef, bcoef, gain = gm_scalar_coefficients(ctx)
    xb, squeeze = _as_batch(x)
    v = _kernels.gm_drift(xb, acoef, bcoef, ctx.model.h, gain)
    return v[0] if squeeze else v


def cw_denoiser(ctx: FieldContext, x: np.ndarray) -> np.ndarray:
    """Posterior spin mean E[a | I_t = x]; entries lie in [-1, 1]."""
    if not isinstance(ctx.model, CurieWeissModel):
        raise TypeError("cw_denoiser needs a CurieWeissModel context")
    model = ctx.model
    s_scale, _, _ = cw_scalar_coefficients(ctx)
    logit_p = np.log(model.p) - np.log1p(-model.p)
    xb, squeeze = _as_batch(x)
    eta = _kernels.cw_denoiser(xb, s_scale, model.beta_temp * model.m, model.m, logit_p)
    return eta[0] if squeeze else eta


def cw_velocity(ctx: FieldContext, x: np.ndarray) -> np.ndarray:
    """Curie-Weiss drift at state x via the denoiser route."""
    if not isinstance(ctx.model, CurieWeissModel):
        raise TypeError("cw_velocity needs a CurieWeissModel context")
    model = ctx.model
    s_scale, coef_x, coef_eta = cw_scalar_coefficients(ctx)
    logit_p = np.log(model.p) - np.log1p(-model.p)
    xb, squeeze = _as_batch(x)
    v = _kernels.cw_drift(xb, s_scale, model.beta_temp * model.m, model.m, logit_p, coef_x, coef_eta)
    return v[0] if squeeze else v


class VelocityField:
    """Drift b_t(x) of a model under an interpolant spec and time dilation."""

    def __init__(self, model: TargetModel, spec: InterpolantSpec, dilation: TimeDilation):
        self.model = model
        self.spec = spec
        self.dilation = dilation
        self._is_gm = isinstance(model, GaussianMixtureModel)

    def context(self, t: float) -> FieldContext:
        return FieldContext(self.model, eval_coeffs(self.spec, self.dilation, t, self.model.d))

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        ctx = self.context(t)
        return gm_velocity(ctx, x) if self._is_gm else cw_velocity(ctx, x)
