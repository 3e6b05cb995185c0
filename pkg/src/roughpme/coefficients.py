"""Noise coefficients ``f_k`` with closed-form gradients and Laplacians, and the
exponent field ``mu = -sum_k f_k z^(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Constant", "SineProduct", "Gaussian", "CoefficientSet", "mu_field", "make_coefficient"]


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def evaluate(self, pts):
        """Value, gradient ``(n, dim)`` and Laplacian at points ``(n, dim)``."""
        n, d = pts.shape
        return np.full(n, float(self.value)), np.zeros((n, d)), np.zeros(n)


@dataclass(frozen=True)
class SineProduct:
    """``amp * prod_j sin(freq_j * x_j + phase_j)``; missing axes contribute a factor 1."""

    amp: float
    freq: tuple
    phase: tuple = ()

    def evaluate(self, pts):
        n, d = pts.shape
        freq = np.asarray(self.freq, float)
        phase = np.zeros_like(freq) if not self.phase else np.asarray(self.phase, float)
        s = np.ones((n, d))
        c = np.zeros((n, d))
        w = np.zeros(d)
        k = min(d, freq.size)
        s[:, :k] = np.sin(pts[:, :k] * freq[:k] + phase[:k])
        c[:, :k] = np.cos(pts[:, :k] * freq[:k] + phase[:k])
        w[:k] = freq[:k]
        val = self.amp * np.prod(s, axis=1)
        grad = np.empty((n, d))
        for j in range(d):
            others = np.prod(np.delete(s, j, axis=1), axis=1)
            grad[:, j] = self.amp * w[j] * c[:, j] * others
        lap = -np.sum(w**2) * val
        return val, grad, lap


@dataclass(frozen=True)
class Gaussian:
    """``amp * exp(-|x - center|^2 / (2 width^2))``."""

    amp: float
    center: tuple = (0.0,)
    width: float = 1.0

    def evaluate(self, pts):
        n, d = pts.shape
        c = np.zeros(d)
        cc = np.asarray(self.center, float)
        c[: min(d, cc.size)] = cc[:d]
        diff = pts - c
        r2 = np.sum(diff**2, axis=1)
        w2 = self.width**2
        val = self.amp * np.exp(-0.5 * r2 / w2)
        grad = -diff / w2 * val[:, None]
        lap = (r2 / w2**2 - d / w2) * val
        return val, grad, lap


_REGISTRY = {"constant": Constant, "sine": SineProduct, "gaussian": Gaussian}


def make_coefficient(kind, **params):
    """Build a registry coefficient by name (``constant``, ``sine``, ``gaussian``)."""
    try:
        cls = _REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown coefficient {kind!r}; choose from {sorted(_REGISTRY)}") from None
    return cls(**params)


class CoefficientSet:
    """Coefficients ``f_1..f_N`` sampled on a grid's interior and closure nodes."""

    def __init__(self, grid, funcs):
        self.grid = grid
        self.funcs = tuple(funcs)
        if not self.funcs:
            raise ValueError("at least one coefficient is required")
        self.F, self.G, self.L = self._sample(grid.coords)

    def _sample(self, pts):
        vals = [f.evaluate(pts) for f in self.funcs]
        F = np.stack([v[0] for v in vals])
        G = np.stack([v[1] for v in vals])
        L = np.stack([v[2] for v in vals])
        return F, G, L

    @cached_property
    def closure(self):
        """``(F, G, L)`` sampled on all closure nodes."""
        return self._sample(self.grid.closure_coords)

    @property
    def N(self):
        return len(self.funcs)

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.N:
            raise ValueError(f"signal dimension {z.shape[-1]} does not match {self.N} coefficients")
        return z

    def mu(self, z):
        """``mu`` on interior nodes; ``z`` may carry leading axes."""
        return -self._check(z) @ self.F

    def mu_closure(self, z):
        return -self._check(z) @ self.closure[0]

    def grad_mu(self, z, closure=False):
        G = self.closure[1] if closure else self.G
        return -np.einsum("...k,knd->...nd", self._check(z), G)

    def lap_mu(self, z, closure=False):
        L = self.closure[2] if closure else self.L
        return -self._check(z) @ L

    @cached_property
    def is_constant(self):
        return all(isinstance(f, Constant) for f in self.funcs)

    def describe(self):
        return [dict(kind=type(f).__name__, **{k: v for k, v in f.__dict__.items()}) for f in self.funcs]


def mu_field(coeffs, z):
    """``(mu, grad mu, Laplacian mu)`` on interior nodes for the signal value ``z``."""
    return coeffs.mu(z), coeffs.grad_mu(z), coeffs.lap_mu(z)
