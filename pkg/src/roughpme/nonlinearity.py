"""The porous-medium nonlinearity and its non-degenerate regularisation.

``Phi(r) = |r|^m sgn(r)``.  For ``0 < delta < 1`` the regularisation
``Phi_delta`` is odd, coincides with ``Phi`` on ``delta <= |r| <= 1/delta`` and
is affine near zero and for large ``|r|``.  The transitions on
``[delta/2, delta]`` and ``[1/delta, 2/delta]`` blend ``Phi`` with a line via a
quintic smoothstep, which keeps ``Phi_delta`` twice continuously
differentiable.  The line lies below ``Phi`` on the inner transition and above
it on the outer one, so every blend term has the right sign and the slope
stays positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["phi", "PhiSpec", "phi_delta", "psi_delta", "default_delta"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def phi(r, m):
    """``|r|^m sgn(r)``."""
    r = np.asarray(r, dtype=float)
    return np.sign(r) * np.abs(r) ** m


def _smoothstep(s):
    w = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    w1 = 30.0 * s**2 * (1.0 - s) ** 2
    w2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return w, w1, w2


def default_delta(h, m):
    """Regularisation level balancing spatial and regularisation error, ``h^(2/(m+1))``."""
    return float(min(h, 1.0) ** (2.0 / (m + 1.0)))


@dataclass(frozen=True)
class PhiSpec:
    m: float
    delta: float

    def __post_init__(self):
        if not self.m > 0 or self.m == 1:
            raise ValueError(f"exponent must be positive and != 1, got {self.m}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def degenerate(self):
        return self.m > 1

    @cached_property
    def inner_slope(self):
        d, m = self.delta, self.m
        return min(d ** (m - 1), (0.5 * d) ** (m - 1))

    @cached_property
    def outer_slope(self):
        d, m = self.delta, self.m
        if m > 1:
            return (2.0**m - 1.0) * d ** (1.0 - m)
        return m * d ** (1.0 - m)

    def _eval(self, a, order=2):
        """Value and derivatives up to ``order`` of ``Phi_delta`` at ``a >= 0``."""
        m, d = self.m, self.delta
        a = np.asarray(a, dtype=float)
        c, s = self.inner_slope, self.outer_slope
        lo, hi = d, 1.0 / d
        out = [np.empty_like(a) for _ in range(order + 1)]

        def put(mask, *vals):
            for o in range(order + 1):
                out[o][mask] = vals[o]

        def power(x):
            p = x**m
            return p, m * p / x, m * (m - 1) * p / x**2

        r0 = a <= 0.5 * lo
        put(r0, c * a[r0], c, 0.0)
        r2 = (a >= lo) & (a <= hi)
        put(r2, *power(a[r2]))
        r4 = a >= 2.0 * hi
        if r4.any():
            put(r4, hi**m + s * (a[r4] - hi), s, 0.0)

        r1 = (a > 0.5 * lo) & (a < lo)
        if r1.any():
            x = a[r1]
            w, w1, w2 = _smoothstep((x - 0.5 * lo) / (0.5 * lo))
            w1, w2 = w1 / (0.5 * lo), w2 / (0.5 * lo) ** 2
            p, p1, p2 = power(x)
            g = p - c * x
            put(r1, c * x + w * g, c + w1 * g + w * (p1 - c),
                w2 * g + 2.0 * w1 * (p1 - c) + w * p2)

        r3 = (a > hi) & (a < 2.0 * hi)
        if r3.any():
            x = a[r3]
            w, w1, w2 = _smoothstep((x - hi) / hi)
            w1, w2 = w1 / hi, w2 / hi**2
            p, p1, p2 = power(x)
            g = hi**m + s * (x - hi) - p
            put(r3, p + w * g, p1 + w1 * g + w * (s - p1),
                p2 + w2 * g + 2.0 * w1 * (s - p1) - w * p2)
        return out

    def evaluate(self, r, order=2):
        """``(Phi_delta(r), Phi_delta'(r), Phi_delta''(r))`` up to ``order``, vectorised."""
        r = np.asarray(r, dtype=float)
        vals = self._eval(np.abs(r), order)
        sg = np.where(r < 0, -1.0, 1.0)
        vals[0] = sg * vals[0]
        if order >= 2:
            vals[2] = sg * vals[2]
        return tuple(vals)

    @cached_property
    def _probe(self):
        d = self.delta
        a = np.unique(np.concatenate([
            np.linspace(0.0, 2.5 / d, 4001),
            np.linspace(0.5 * d, d, 4001),
            np.geomspace(0.25 * d, 2.5 / d, 8001),
        ]))
        return self._eval(a)

    @cached_property
    def C1(self):
        """Lower bound on the slope (minimum over a dense probe)."""
        return float(min(self._probe[1].min(), self.inner_slope, self.outer_slope))

    @cached_property
    def C2(self):
        """Upper bound on slope and curvature (maximum over a dense probe)."""
        _, f1, f2 = self._probe
        return float(max(f1.max(), np.abs(f2).max()))

    @cached_property
    def _knot_primitives(self):
        d = self.delta
        lo, hi = d, 1.0 / d
        p_half = 0.5 * self.inner_slope * (0.5 * lo) ** 2
        p_lo = p_half + self._gl(0.5 * lo, lo)
        p_hi = p_lo + (hi ** (self.m + 1) - lo ** (self.m + 1)) / (self.m + 1)
        p_2hi = p_hi + self._gl(hi, 2.0 * hi)
        return p_lo, p_hi, p_2hi

    def _gl(self, a, b):
        """Gauss-Legendre integral of ``Phi_delta`` over ``[a, b]`` (vectorised in ``b``)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        nodes = mid[..., None] + half[..., None] * _GL_X
        return half * (self._eval(nodes, 0)[0] @ _GL_W)

    def primitive(self, r):
        """``Psi_delta(r) = int_0^r Phi_delta``: even and nonnegative."""
        a = np.abs(np.asarray(r, dtype=float))
        d, m = self.delta, self.m
        lo, hi = d, 1.0 / d
        c, s = self.inner_slope, self.outer_slope
        p_lo, p_hi, p_2hi = self._knot_primitives
        out = np.empty_like(a)
        r0 = a <= 0.5 * lo
        out[r0] = 0.5 * c * a[r0] ** 2
        r1 = (a > 0.5 * lo) & (a < lo)
        out[r1] = 0.5 * c * (0.5 * lo) ** 2 + self._gl(0.5 * lo, a[r1])
        r2 = (a >= lo) & (a <= hi)
        out[r2] = p_lo + (a[r2] ** (m + 1) - lo ** (m + 1)) / (m + 1)
        r3 = (a > hi) & (a < 2.0 * hi)
        out[r3] = p_hi + self._gl(hi, a[r3])
        r4 = a >= 2.0 * hi
        x = a[r4]
        out[r4] = p_2hi + hi**m * (x - 2.0 * hi) + 0.5 * s * ((x - hi) ** 2 - hi**2)
        return out


def phi_delta(r, spec):
    """``(Phi_delta(r), Phi_delta'(r))``."""
    return spec.evaluate(r, 1)


def psi_delta(r, spec):
    return spec.primitive(r)
