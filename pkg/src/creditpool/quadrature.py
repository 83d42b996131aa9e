"""Quadrature kernels for convolution integrals on a uniform grid.

The limit solver repeatedly needs prefix convolutions

    C_k = integral_0^{t_k} h(t_k - r) g(r) dr,   k = 0..n,

for sampled h and g.  The workhorse is the trapezoid rule, which for a
uniform grid reduces to one discrete convolution plus endpoint
corrections and is therefore O(n log n) via FFT.  A Simpson-weighted
variant (one order more accurate) is provided for diagnostics that need
an evaluation *not* sharing the trapezoid's discretization error.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

_FFT_THRESHOLD = 2048


def prefix_trapezoid(h: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid integral of h: out[k] = integral_0^{t_k} h."""
    out = np.empty_like(h)
    out[0] = 0.0
    np.cumsum(0.5 * dt * (h[1:] + h[:-1]), out=out[1:])
    return out


def conv_trapezoid(h: np.ndarray, g: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid prefix convolution: out[k] ~ integral_0^{t_k} h(t_k-r) g(r) dr.

    Uses the identity
        trapz_k = dt * (sum_{j=0..k} h[k-j] g[j] - h[k] g[0]/2 - h[0] g[k]/2)
    so the whole family of prefixes costs a single full convolution.
    """
    n = h.shape[0]
    if n != g.shape[0]:
        raise ValueError("kernel and integrand must share the grid")
    if n > _FFT_THRESHOLD:
        s = fftconvolve(h, g)[:n]
    else:
        s = np.convolve(h, g)[:n]
    out = dt * (s - 0.5 * h * g[0] - 0.5 * h[0] * g)
    out[0] = 0.0  # integral over an empty interval, exactly
    return out


def simpson_prefix_weights(k: int) -> np.ndarray:
    """Quadrature weights w[0..k] with sum(w_j f_j)*dt ~ integral over k steps.

    Composite Simpson for even k; Simpson plus a 3/8 tail for odd k >= 3;
    plain trapezoid for k = 1.
    """
    if k < 1:
        return np.zeros(max(k + 1, 1))
    if k == 1:
        return np.array([0.5, 0.5])
    w = np.zeros(k + 1)
    m = k if k % 2 == 0 else k - 3
    if m > 0:
        w[0] = 1.0 / 3.0
        w[1:m:2] = 4.0 / 3.0
        w[2:m:2] = 2.0 / 3.0
        w[m] = 1.0 / 3.0
    if m != k:  # odd k: 3/8 rule on the last three intervals
        w[m : k + 1] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


def conv_simpson(h: np.ndarray, g: np.ndarray, dt: float, chunk: int = 256) -> np.ndarray:
    """Simpson-weighted prefix convolution (O(n^2), chunked to bound memory).

    Same estimand as :func:`conv_trapezoid` but fourth-order away from the
    short-prefix edge, so the difference between the two isolates the
    trapezoid discretization error.
    """
    n = h.shape[0] - 1
    out = np.zeros(n + 1)
    j = np.arange(n + 1)
    weights = [simpson_prefix_weights(k) for k in range(n + 1)]
    for lo in range(1, n + 1, chunk):
        hi = min(lo + chunk, n + 1)
        ks = np.arange(lo, hi)
        idx = ks[:, None] - j[None, :]          # h index per (k, j)
        mask = idx >= 0
        hk = np.where(mask, h[np.abs(idx)], 0.0)
        wk = np.zeros((hi - lo, n + 1))
        for row, k in enumerate(ks):
            wk[row, : k + 1] = weights[k]
        out[lo:hi] = dt * np.einsum("kj,kj,j->k", hk, wk, g)
    return out
