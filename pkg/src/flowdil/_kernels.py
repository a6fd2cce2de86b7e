"""Hot drift kernels, batched over trajectories.

Two implementations of each kernel: a numba ``@njit(parallel=True)`` version
that fuses the per-row reductions and elementwise work, and a pure-numpy
fallback.  Selection happens once at import from the ``FLOWDIL_BACKEND``
environment variable: ``auto`` (default; numba if importable), ``numba`` or
``numpy``.

Rows are independent: each trajectory is processed entirely by one thread
with sequential in-row reductions, so results do not depend on the thread
count.  ``benchmarks/bench_backends.py`` compares the two paths.

Parameters are the scalar per-step coefficients of the closed-form fields:

gm drift      v = acoef * x + bcoef * tanh(h + gain * sum(x)) * r
cw drift      v = coef_x * x + coef_eta * eta(x)
cw denoiser   eta_i = w+ tanh(bm + s_i) + w- tanh(-bm + s_i),  s_i = s_scale * x_i,
              logit(w+) = logit_p + sum_i [log1p(m tanh(s_i)) - log1p(-m tanh(s_i))]

The posterior weights w+- span exp(+-Theta(d)) and are only representable in
log space; the two-way log-sum-exp reduces to a stable sigmoid of the logit
difference.  tanh arguments are clamped at |s| = 40 (tanh is +-1 to double
precision beyond that), which keeps fastmath code clear of inf * 0 patterns.
"""

from __future__ import annotations

import math
import os

import numpy as np

TANH_CLAMP = 40.0

_ENV_VAR = "FLOWDIL_BACKEND"


def _select_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice in ("numpy", "np"):
        return "numpy"
    if choice in ("auto", "", "numba"):
        try:
            import numba  # noqa: F401

            return "numba"
        except ImportError:
            if choice == "numba":
                raise
            return "numpy"
    raise ValueError(f"{_ENV_VAR}={choice!r} not understood; use auto, numba or numpy")


BACKEND = _select_backend()


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def gm_drift_numpy(x, acoef, bcoef, h, gain):
    s = x.sum(axis=1)
    pull = bcoef * np.tanh(h + gain * s)
    return acoef * x + pull[:, None]


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cw_denoiser_numpy(x, s_scale, bm, m, logit_p):
    s = np.clip(s_scale * x, -TANH_CLAMP, TANH_CLAMP)
    th = np.tanh(s)
    dlogq = np.log1p(m * th).sum(axis=1) - np.log1p(-m * th).sum(axis=1)
    wp = _sigmoid(logit_p + dlogq)[:, None]
    return wp * np.tanh(bm + s) + (1.0 - wp) * np.tanh(s - bm)


def cw_drift_numpy(x, s_scale, bm, m, logit_p, coef_x, coef_eta):
    return coef_x * x + coef_eta * cw_denoiser_numpy(x, s_scale, bm, m, logit_p)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit, prange

    @njit(parallel=True, fastmath=True, cache=True)
    def gm_drift_numba(x, acoef, bcoef, h, gain):
        n, d = x.shape
        out = np.empty_like(x)
        for i in prange(n):
            s = 0.0
            for j in range(d):
                s += x[i, j]
            pull = bcoef * math.tanh(h + gain * s)
            for j in range(d):
                out[i, j] = acoef * x[i, j] + pull
        return out

    @njit(parallel=True, fastmath=True, cache=True)
    def cw_denoiser_numba(x, s_scale, bm, m, logit_p):
        n, d = x.shape
        out = np.empty_like(x)
        for i in prange(n):
            dlogq = 0.0
            for j in range(d):
                s = s_scale * x[i, j]
                if s > TANH_CLAMP:
                    s = TANH_CLAMP
                elif s < -TANH_CLAMP:
                    s = -TANH_CLAMP
                th = math.tanh(s)
                dlogq += math.log1p(m * th) - math.log1p(-m * th)
            z = logit_p + dlogq
            if z >= 0.0:
                wp = 1.0 / (1.0 + math.exp(-z))
            else:
                ez = math.exp(z)
                wp = ez / (1.0 + ez)
            wm = 1.0 - wp
            for j in range(d):
                s = s_scale * x[i, j]
                if s > TANH_CLAMP:
                    s = TANH_CLAMP
                elif s < -TANH_CLAMP:
                    s = -TANH_CLAMP
                out[i, j] = wp * math.tanh(bm + s) + wm * math.tanh(s - bm)
        return out

    @njit(parallel=True, fastmath=True, cache=True)
    def cw_drift_numba(x, s_scale, bm, m, logit_p, coef_x, coef_eta):
        n, d = x.shape
        out = np.empty_like(x)
        for i in prange(n):
            dlogq = 0.0
            for j in range(d):
                s = s_scale * x[i, j]
                if s > TANH_CLAMP:
                    s = TANH_CLAMP
                elif s < -TANH_CLAMP:
                    s = -TANH_CLAMP
                th = math.tanh(s)
                dlogq += math.log1p(m * th) - math.log1p(-m * th)
            z = logit_p + dlogq
            if z >= 0.0:
                wp = 1.0 / (1.0 + math.exp(-z))
            else:
                ez = math.exp(z)
                wp = ez / (1.0 + ez)
            wm = 1.0 - wp
            for j in range(d):
                s = s_scale * x[i, j]
                if s > TANH_CLAMP:
                    s = TANH_CLAMP
                elif s < -TANH_CLAMP:
                    s = -TANH_CLAMP
                eta = wp * math.tanh(bm + s) + wm * math.tanh(s - bm)
                out[i, j] = coef_x * x[i, j] + coef_eta * eta
        return out

    gm_drift = gm_drift_numba
    cw_denoiser = cw_denoiser_numba
    cw_drift = cw_drift_numba
else:
    gm_drift = gm_drift_numpy
    cw_denoiser = cw_denoiser_numpy
    cw_drift = cw_drift_numpy


def set_threads(n: int) -> None:
    """Cap numba's thread pool (no-op on the numpy backend); n = 0 leaves the default."""
    if n < 0:
        raise ValueError("thread count must be >= 0")
    if n and BACKEND == "numba":
        import numba

        numba.set_num_threads(n)
