"""Driving signals: Brownian motion, fractional Brownian motion, and their
finite-variation approximations.

A :class:`SignalPath` is an ``R^N``-valued path sampled on a uniform grid.
Shifts (the metric dynamical system ``theta_s``) are computed from the
unshifted ancestor so that composing shifts reproduces the original samples
bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .exceptions import WindowError

__all__ = [
    "NoiseModel",
    "SignalPath",
    "sample_path",
    "zero_path",
    "path_from_function",
    "shift_path",
    "piecewise_linear",
    "mollify",
    "modulus_of_continuity",
    "fgn_autocovariance",
    "fbm_covariance",
]

BV_KINDS = ("piecewise_linear", "mollified", "constant_zero", "custom")
_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    """Law of the driving process.

    ``kind="brownian"`` is the same law as ``kind="fbm"`` with ``hurst=0.5``.
    """

    kind: str = "brownian"
    hurst: float = 0.5
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("brownian", "fbm"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.hurst}")
        if self.kind == "brownian" and self.hurst != 0.5:
            raise ValueError("Brownian motion has hurst=0.5")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @classmethod
    def fbm(cls, hurst, dim=1):
        return cls("fbm", float(hurst), int(dim))

    @classmethod
    def brownian(cls, dim=1):
        return cls("brownian", 0.5, int(dim))


def _n_steps(t0, t1, dt):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    n = int(round((t1 - t0) / dt))
    if n < 1 or abs(n * dt - (t1 - t0)) > _ALIGN_TOL * max(1.0, abs(t1 - t0)):
        raise ValueError(f"window [{t0}, {t1}] is not a multiple of dt={dt}")
    return n


@dataclass(frozen=True, eq=False)
class SignalPath:
    """A sampled continuous path ``z: [t0, t1] -> R^N``.

    ``values`` has shape ``(n_samples, N)`` with ``n_samples = round((t1-t0)/dt) + 1``.
    ``kind`` is one of ``brownian``, ``fbm``, ``piecewise_linear``,
    ``mollified``, ``constant_zero``, ``custom``; approximations keep a
    reference to their ``parent``.
    """

    t0: float
    dt: float
    values: np.ndarray
    kind: str = "custom"
    seed: Optional[int] = None
    hurst: Optional[float] = None
    level: Optional[int] = None
    eps: Optional[float] = None
    parent: Optional["SignalPath"] = None
    sup_distance: Optional[float] = None
    # (root values, root t0, index offset into root, anchor index into root)
    _root: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("values must have shape (n_samples >= 2, N)")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def t1(self):
        return self.t0 + (self.n_samples - 1) * self.dt

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def is_bounded_variation(self):
        return self.kind in BV_KINDS

    def index_of(self, t):
        """Sample index of time ``t``; ``t`` must lie on the grid."""
        x = (t - self.t0) / self.dt
        k = int(round(x))
        if abs(x - k) > 1e-6 or not 0 <= k < self.n_samples:
            raise WindowError(f"time {t} is not a sample of [{self.t0}, {self.t1}] (dt={self.dt})")
        return k

    def __call__(self, t):
        """Linear interpolation of the samples; returns shape ``(..., N)``."""
        t = np.asarray(t, dtype=float)
        tol = 1e-9 * max(1.0, abs(self.t0), abs(self.t1))
        if np.any(t < self.t0 - tol) or np.any(t > self.t1 + tol):
            raise WindowError(f"time outside the sampled window [{self.t0}, {self.t1}]")
        x = np.clip((t - self.t0) / self.dt, 0.0, self.n_samples - 1)
        k = np.minimum(np.floor(x).astype(int), self.n_samples - 2)
        w = (x - k)[..., None]
        out = (1.0 - w) * self.values[k] + w * self.values[k + 1]
        # exact sample values where t sits on the grid
        on_grid = np.isclose(x, np.round(x), rtol=0.0, atol=1e-9)
        if np.any(on_grid):
            out = np.where(on_grid[..., None], self.values[np.round(x).astype(int)], out)
        return out

    def window(self, t0, t1):
        """Restriction to ``[t0, t1]`` (both on the sample grid)."""
        i0, i1 = self.index_of(t0), self.index_of(t1)
        if i1 <= i0:
            raise WindowError("empty window")
        root = None
        if self._root is not None:
            rv, rt0, off, anchor = self._root
            root = (rv, rt0, off + i0, anchor)
        return SignalPath(
            t0=self.t0 + i0 * self.dt, dt=self.dt, values=self.values[i0:i1 + 1],
            kind=self.kind, seed=self.seed, hurst=self.hurst, level=self.level,
            eps=self.eps, parent=self.parent, sup_distance=self.sup_distance, _root=root,
        )

    def total_variation(self):
        return float(np.abs(np.diff(self.values, axis=0)).sum())

    def sup_distance_to(self, other):
        if other.n_samples != self.n_samples or abs(other.t0 - self.t0) > 1e-9:
            raise ValueError("paths are sampled on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def to_csv(self, path_or_buf=None):
        """Write ``t,z1,...,zN`` rows with 17 significant digits."""
        header = ",".join(["t"] + [f"z{k + 1}" for k in range(self.dim)])
        data = np.column_stack([self.times, self.values])
        buf = io.StringIO()
        np.savetxt(buf, data, delimiter=",", header=header, comments="", fmt="%.17g")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_buf, kind="custom"):
        if isinstance(path_or_buf, str) and "\n" in path_or_buf:
            path_or_buf = io.StringIO(path_or_buf)
        data = np.loadtxt(path_or_buf, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        steps = np.diff(t)
        dt = float(steps.mean())
        if not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
            raise ValueError("CSV times are not uniformly spaced")
        return cls(t0=float(t[0]), dt=dt, values=data[:, 1:], kind=kind)


def fgn_autocovariance(hurst, n, dt=1.0):
    """Autocovariance of fBm increments over steps of length ``dt`` at lags 0..n-1."""
    k = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * dt**h2 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def fbm_covariance(s, t, hurst):
    """``E[z_s z_t]`` for fBm with ``z_0 = 0``."""
    s, t = np.asarray(s, float), np.asarray(t, float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)


def _fgn(rng, hurst, n, dt, dim):
    """``n`` fractional Gaussian noise increments per component, exact in law."""
    gamma = fgn_autocovariance(hurst, n, dt)
    if n <= 8:
        cov = gamma[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
        chol = np.linalg.cholesky(cov)
        return chol @ rng.standard_normal((n, dim))
    row = np.concatenate([gamma, [0.0], gamma[:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        cov = gamma[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
        chol = np.linalg.cholesky(cov)
        return chol @ rng.standard_normal((n, dim))
    lam = np.clip(lam, 0.0, None)
    m = row.size
    w = np.sqrt(lam / m)[:, None] * (rng.standard_normal((m, dim)) + 1j * rng.standard_normal((m, dim)))
    return np.fft.fft(w, axis=0).real[:n]


def sample_path(model, t0, t1, dt, seed=None):
    """Sample the noise ``model`` on ``[t0, t1]`` with spacing ``dt``.

    The path is pinned so that ``z(0) = 0`` when ``0`` lies in the window,
    otherwise ``z(t0) = 0``.  Increments are drawn with their exact joint law
    (circulant embedding for fBm).
    """
    n = _n_steps(t0, t1, dt)
    rng = np.random.default_rng(seed)
    if model.kind == "brownian":
        inc = np.sqrt(dt) * rng.standard_normal((n, model.dim))
        kind = "brownian"
    else:
        inc = _fgn(rng, model.hurst, n, dt, model.dim)
        kind = "fbm"
    values = np.vstack([np.zeros((1, model.dim)), np.cumsum(inc, axis=0)])
    if t0 <= 0.0 <= t1:
        x = -t0 / dt
        k = int(round(x))
        if abs(x - k) < 1e-6:
            values = values - values[k]
            values[k] = 0.0
        else:
            k = min(int(np.floor(x)), n - 1)
            w = x - k
            values = values - ((1 - w) * values[k] + w * values[k + 1])
    return SignalPath(t0=float(t0), dt=float(dt), values=values, kind=kind, seed=seed,
                      hurst=model.hurst)


def zero_path(t0, t1, dt, dim=1):
    n = _n_steps(t0, t1, dt)
    return SignalPath(t0=float(t0), dt=float(dt), values=np.zeros((n + 1, dim)),
                      kind="constant_zero")


def path_from_function(func, t0, t1, dt, kind="custom"):
    """Sample a deterministic path ``func(t) -> R^N`` (vectorised over ``t``)."""
    n = _n_steps(t0, t1, dt)
    t = t0 + dt * np.arange(n + 1)
    v = np.asarray(func(t), dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return SignalPath(t0=float(t0), dt=float(dt), values=v, kind=kind)


def _root_of(path):
    if path._root is not None:
        return path._root
    return (path.values, path.t0, 0, None)


def shift_path(path, s, t0=None, t1=None):
    """The path ``t -> z(t + s) - z(s)``, i.e. ``z`` under ``theta_s``.

    The result lives on ``[path.t0 - s, path.t1 - s]`` unless a sub-window
    ``[t0, t1]`` is requested.
    """
    k_s = path.index_of(s)
    rv, rt0, off, _ = _root_of(path)
    anchor = off + k_s
    values = rv[off:off + path.n_samples] - rv[anchor]
    if path.kind == "constant_zero":
        values = np.zeros_like(values)
    new_t0 = path.t0 - s
    out = SignalPath(
        t0=new_t0, dt=path.dt, values=values, kind=path.kind, seed=path.seed,
        hurst=path.hurst, level=path.level, eps=path.eps, parent=path.parent,
        _root=(rv, rt0, off, anchor),
    )
    if t0 is not None or t1 is not None:
        out = out.window(new_t0 if t0 is None else t0, out.t1 if t1 is None else t1)
    return out


def piecewise_linear(path, level):
    """Dyadic piecewise-linear interpolant with ``2**level`` pieces.

    The interpolant is resampled on the parent's grid and records its sup
    distance to the parent.
    """
    level = int(level)
    pieces = 2**level
    mesh = (path.t1 - path.t0) / pieces
    if mesh < path.dt * (1 - 1e-9):
        raise ValueError(f"level {level} is finer than the sample spacing")
    knots = path.t0 + mesh * np.arange(pieces + 1)
    knots[-1] = path.t1
    kv = path(knots)
    t = path.times
    values = np.column_stack([np.interp(t, knots, kv[:, j]) for j in range(path.dim)])
    if path.kind == "constant_zero":
        values = np.zeros_like(values)
        kind = "constant_zero"
    else:
        kind = "piecewise_linear"
    return SignalPath(t0=path.t0, dt=path.dt, values=values, kind=kind, seed=path.seed,
                      hurst=path.hurst, level=level, parent=path,
                      sup_distance=float(np.max(np.abs(values - path.values))))


def _bump(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def mollify(path, eps):
    """Convolve with a smooth bump supported on ``[-eps/2, eps/2]``.

    The path is extended past both endpoints by point reflection, so affine
    paths and endpoint values are preserved.
    """
    if eps < 2 * path.dt * (1 - 1e-9):
        raise ValueError(f"eps={eps} is too small for dt={path.dt} (need eps >= 2 dt)")
    half = int(np.floor(0.5 * eps / path.dt + 1e-9))
    offsets = np.arange(-half, half + 1) * path.dt
    kernel = _bump(offsets / (0.5 * eps))
    if kernel.sum() == 0.0:
        kernel[half] = 1.0
    kernel = kernel / kernel.sum()
    v = path.values
    n = path.n_samples
    if half >= n:
        raise ValueError("eps exceeds the path length")
    left = 2.0 * v[0] - v[half:0:-1]
    right = 2.0 * v[-1] - v[-2:-half - 2:-1]
    ext = np.vstack([left, v, right])
    values = np.column_stack([np.convolve(ext[:, j], kernel[::-1], mode="valid")
                              for j in range(path.dim)])
    if path.kind == "constant_zero":
        values = np.zeros_like(values)
        kind = "constant_zero"
    else:
        kind = "mollified"
    return SignalPath(t0=path.t0, dt=path.dt, values=values, kind=kind, seed=path.seed,
                      hurst=path.hurst, eps=float(eps), parent=path,
                      sup_distance=float(np.max(np.abs(values - v))))


def modulus_of_continuity(path, h):
    """``sup |z_t - z_s|`` over sample pairs with ``|t - s| <= h`` (max-norm over components)."""
    if not 0 < h <= (path.t1 - path.t0) * (1 + 1e-12):
        raise ValueError(f"lag h={h} outside (0, t1 - t0]")
    lag = int(np.floor(h / path.dt + 1e-9))
    if lag == 0:
        return 0.0
    size = lag + 1
    best = 0.0
    for j in range(path.dim):
        col = path.values[:, j]
        if size >= col.size:
            best = max(best, float(col.max() - col.min()))
            continue
        # windows [i, i+lag]: filters are centred, so shift the origin to the window start
        origin = -(size // 2)
        hi = maximum_filter1d(col, size, origin=origin, mode="nearest")[: col.size - lag]
        lo = minimum_filter1d(col, size, origin=origin, mode="nearest")[: col.size - lag]
        best = max(best, float(np.max(hi - lo)))
    return best
