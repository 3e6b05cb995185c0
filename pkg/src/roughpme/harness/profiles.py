"""Closed-form reference profiles and the initial-condition registry."""

from __future__ import annotations

import numpy as np
from scipy.special import beta as beta_fn

__all__ = ["zkb_profile", "zkb_constants", "zkb_support", "make_ic", "IC_REGISTRY"]


def zkb_constants(m, mass):
    """``(alpha, beta, kappa, C)`` of the 1-D source-type profile with the given mass."""
    if not m > 1:
        raise ValueError(f"the source-type profile needs m > 1, got {m}")
    alpha = 1.0 / (m + 1.0)
    beta = alpha
    kappa = alpha * (m - 1.0) / (2.0 * m)
    p = 1.0 / (m - 1.0)
    # mass = C^(p + 1/2) B(1/2, p + 1) / sqrt(kappa), independent of t since alpha = beta
    C = (mass * np.sqrt(kappa) / beta_fn(0.5, p + 1.0)) ** (1.0 / (p + 0.5))
    return alpha, beta, kappa, C


def zkb_profile(t, x, m, mass=1.0):
    """``t^-alpha (C - kappa x^2 t^(-2 beta))_+^(1/(m-1))``."""
    if not np.all(np.asarray(t) > 0):
        raise ValueError("time must be positive")
    alpha, beta, kappa, C = zkb_constants(m, mass)
    x = np.asarray(x, dtype=float)
    core = np.maximum(C - kappa * x**2 * np.asarray(t, float) ** (-2.0 * beta), 0.0)
    return np.asarray(t, float) ** (-alpha) * core ** (1.0 / (m - 1.0))


def zkb_support(t, m, mass=1.0):
    """Radius of the support at time ``t``."""
    _, beta, kappa, C = zkb_constants(m, mass)
    return float(t**beta * np.sqrt(C / kappa))


# initial conditions --------------------------------------------------------

def _center(grid, c):
    c = np.atleast_1d(np.asarray(c, float))
    out = np.zeros(grid.dim)
    out[: min(c.size, grid.dim)] = c[: grid.dim]
    return out


def _bump(grid, amp=1.0, center=0.0, width=1.0, **_):
    r2 = np.sum((grid.coords - _center(grid, center)) ** 2, axis=1) / width**2
    return amp * np.maximum(1.0 - r2, 0.0)


def _step(grid, amp=1.0, center=0.0, width=1.0, **_):
    inside = np.all(np.abs(grid.coords - _center(grid, center)) < width, axis=1)
    return amp * inside.astype(float)


def _two_bump(grid, amp=1.0, amp2=None, center=-1.0, center2=1.0, width=1.0, **_):
    amp2 = amp if amp2 is None else amp2
    return _bump(grid, amp, center, width) - _bump(grid, amp2, center2, width)


def _zkb(grid, m=2.0, mass=1.0, t=0.1, **_):
    if grid.dim != 1:
        raise ValueError("the zkb initial condition is one-dimensional")
    return zkb_profile(t, grid.x, m, mass)


def _fourier(grid, amp=1.0, modes=6, rng=None, positive=0, **_):
    """Random sine series, rescaled to sup-norm ``amp``; vanishes on the boundary."""
    rng = np.random.default_rng() if rng is None else rng
    modes = int(modes)
    ks = np.arange(1, modes + 1)
    prod = np.ones((grid.size, modes))
    for ax, (a, b) in enumerate(grid.extent):
        s = (grid.coords[:, ax] - a) / (b - a)
        prod = prod * np.sin(np.pi * np.outer(s, ks))
    u = prod @ (rng.uniform(-1.0, 1.0, modes) / ks)
    if positive:
        u = np.abs(u)
    top = np.abs(u).max()
    return amp * u / top if top > 0 else u


def _spike(grid, amp=1.0, center=0.0, **_):
    u = np.zeros(grid.size)
    d = np.sum((grid.coords - _center(grid, center)) ** 2, axis=1)
    u[np.argmin(d)] = amp
    return u


IC_REGISTRY = {
    "bump": _bump,
    "step": _step,
    "two_bump": _two_bump,
    "zkb": _zkb,
    "fourier": _fourier,
    "spike": _spike,
}


def make_ic(kind, grid, rng=None, **params):
    """Initial field on the interior nodes of ``grid``."""
    try:
        f = IC_REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown initial condition {kind!r}; choose from {sorted(IC_REGISTRY)}") from None
    return f(grid, rng=rng, **params)
