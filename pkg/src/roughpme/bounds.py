"""Explicit piecewise supersolutions and the L1 contraction constant.

On each piece ``[tau_i, tau_{i+1}]`` of an admissible partition the bound is

    degenerate (m > 1):  K_i = A^(1/m) (t - tau_i + sigma_i)^(-1/(m-1)) (R^2 - |xi|^2)^(1/m) e^{mu_{tau_i}}
    fast (0 < m < 1):    K_i = A^(1/m) (sigma_i - t)^(1/(1-m))        (R^2 - |xi|^2)^(1/m) e^{mu_{tau_i}}

with ``A^((m-1)/m) = R^(2/m) / (|m-1| d)``.  ``U = K`` with ``sigma_0 = 0`` is
independent of the initial condition.  All bounds refer to ``Y = e^mu X``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .exceptions import PartitionTooFine

__all__ = [
    "choose_partition",
    "PiecewiseBound",
    "build_supersolution",
    "sigma0_for",
    "sigma0_from",
    "uniform_bound_U",
    "delta0_for",
    "fast_diffusion_bound",
    "fast_sigma0_for",
    "supersolution_defect",
    "contraction_weight",
    "estimate_contraction_constant",
    "A_constant",
]


def A_constant(m, R, d):
    """``A`` from ``A^((m-1)/m) = R^(2/m) / (|m-1| d)``."""
    return (R ** (2.0 / m) / (abs(m - 1.0) * d)) ** (m / (m - 1.0))


# partition -----------------------------------------------------------------

def _increment_stats(coeffs, dz):
    """Per-sample sup |grad dmu|, sup |Lap dmu|, inf dmu, sup dmu over closure nodes,
    for ``dmu = mu_t - mu_tau = -dz . f``."""
    F, G, L = coeffs.closure
    dmu = -dz @ F
    grad = -np.einsum("tk,knd->tnd", dz, G)
    g = np.sqrt(np.sum(grad**2, axis=2)).max(axis=1)
    lap = np.abs(dz @ L).max(axis=1)
    return g, lap, dmu.min(axis=1), dmu.max(axis=1)


def _supersolution_ok(m, R, d):
    def ok(g, lap, lo, hi):
        e = (1.0 - m) * np.where(m > 1, hi, lo)
        inf_e = np.exp(e)  # inf of e^{(1-m) dmu}
        factor = 1.0 - (2.0 * m * R / d) * g - (R**2 / (2.0 * d)) * (m**2 * g**2 + m * lap)
        join = np.exp((m - 1.0) * np.where(m > 1, lo, hi))  # inf of e^{(m-1) dmu}
        return (inf_e * factor >= 0.5) & (join >= 0.5)
    return ok


def _contraction_ok(phi_c1):
    def ok(g, lap, lo, hi):
        return np.exp(lo) * (1.0 - 2.0 * phi_c1 * (g + g**2 + lap)) >= 0.5
    return ok


def _greedy(z_path, coeffs, ok, t0, T, max_gap=1.0):
    i0 = z_path.index_of(z_path.t0 if t0 is None else t0)
    iT = z_path.index_of(z_path.t1 if T is None else T)
    vals = z_path.values
    dt = z_path.dt
    reach = int(np.floor(max_gap / dt * (1.0 - 1e-12)))
    if reach * dt >= max_gap:
        reach -= 1
    cuts = [i0]
    cur = i0
    while cur < iT:
        jmax = min(iT, cur + max(reach, 1))
        best = cur
        run = None
        chunk = 64
        j = cur + 1
        while j <= jmax:
            jj = min(jmax, j + chunk - 1)
            g, lap, lo, hi = _increment_stats(coeffs, vals[j:jj + 1] - vals[cur])
            if run is not None:
                g = np.concatenate([[run[0]], g])
                lap = np.concatenate([[run[1]], lap])
                lo = np.concatenate([[run[2]], lo])
                hi = np.concatenate([[run[3]], hi])
            g, lap, hi = (np.maximum.accumulate(v) for v in (g, lap, hi))
            lo = np.minimum.accumulate(lo)
            good = ok(g, lap, lo, hi)
            if run is not None:
                g, lap, lo, hi, good = g[1:], lap[1:], lo[1:], hi[1:], good[1:]
            if good.all():
                best = jj
                run = (g[-1], lap[-1], lo[-1], hi[-1])
                j = jj + 1
                chunk *= 2
            else:
                best = j + int(np.argmin(good)) - 1
                break
        if best == cur:
            best = cur + 1
        cuts.append(best)
        cur = best
    taus = z_path.t0 + dt * np.array(cuts, dtype=float)
    gaps = np.diff(cuts)
    if gaps.size > 1 and gaps[:-1].min() < 4:
        k = int(np.argmin(gaps[:-1]))
        raise PartitionTooFine(
            f"partition gap {gaps[k] * dt:.3g} at t={taus[k]:.6g} is below 4 sample steps; "
            "the signal is too rough for this domain and coefficients")
    return taus


def choose_partition(z_path, coeffs, m, R=None, grid=None, t0=None, T=None, max_gap=1.0):
    """Greedy admissible partition for the supersolution construction.

    A piece ``[tau_i, t]`` is extended while, with sup/inf over closure nodes and
    sampled times in the piece,

        inf e^{(1-m)(mu_t - mu_tau)} (1 - (2mR/d) g - (R^2/(2d)) (m^2 g^2 + m l)) >= 1/2
        inf e^{(m-1)(mu_t - mu_tau)} >= 1/2

    where ``g = sup |grad(mu_t - mu_tau)|`` and ``l = sup |Lap(mu_t - mu_tau)|``.
    Gaps stay strictly below ``max_gap``.
    """
    grid = coeffs.grid if grid is None else grid
    R = grid.radius if R is None else float(R)
    return _greedy(z_path, coeffs, _supersolution_ok(float(m), R, grid.dim), t0, T, max_gap)


# bounds --------------------------------------------------------------------

def _gamma(taus):
    gaps = np.diff(taus)
    return float(gaps[:-1].min()) if gaps.size > 1 else float(gaps[0])


@dataclass
class PiecewiseBound:
    """A piecewise explicit bound ``K(t, xi)`` on ``[taus[0], taus[-1]]``."""

    taus: np.ndarray
    sigmas: np.ndarray
    gamma: float
    A: float
    R: float
    C4: float
    m: float
    mode: str
    grid: object
    exp_mu_tau: np.ndarray          # (L, interior nodes)
    exp_mu_tau_closure: np.ndarray  # (L, closure nodes)

    @property
    def n_pieces(self):
        return self.sigmas.size

    def _space(self, closure):
        pts = self.grid.closure_coords if closure else self.grid.coords
        return (self.R**2 - np.sum(pts**2, axis=1)) ** (1.0 / self.m)

    def piece_index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.taus[0] - 1e-12) or np.any(t > self.taus[-1] + 1e-9):
            raise ValueError(f"time outside [{self.taus[0]}, {self.taus[-1]}]")
        return np.clip(np.searchsorted(self.taus, t, side="right") - 1, 0, self.n_pieces - 1)

    def _time_factor(self, t, i):
        s = t - self.taus[0]
        tau = self.taus[i] - self.taus[0]
        sig = self.sigmas[i]
        if self.mode == "degenerate":
            base = s - tau + sig
            with np.errstate(divide="ignore"):
                return np.where(base > 0, np.abs(base) ** (-1.0 / (self.m - 1.0)), np.inf), base
        base = sig - s
        return np.abs(base) ** (1.0 / (1.0 - self.m)), base

    def evaluate(self, t, closure=False):
        """``K(t, .)`` on interior (or closure) nodes; ``t`` scalar or 1-D array.

        With ``sigma_0 = 0`` the value at the initial time is ``+inf``.
        """
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = self.piece_index(t)
        tf, _ = self._time_factor(t, i)
        emu = self.exp_mu_tau_closure if closure else self.exp_mu_tau
        out = self.A ** (1.0 / self.m) * tf[:, None] * self._space(closure)[None, :] * emu[i]
        return out[0] if scalar else out

    def time_derivative(self, t, closure=False):
        """Closed-form ``d K / d t`` inside a piece."""
        K = self.evaluate(t, closure)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = self.piece_index(t)
        _, base = self._time_factor(t, i)
        c = -1.0 / (self.m - 1.0) if self.mode == "degenerate" else -1.0 / (1.0 - self.m)
        out = c * K / np.reshape(base, (-1,) + (1,) * (np.ndim(K) - 1))
        return out

    def piece_extremes(self, closure=True):
        """Per-piece ``(min K, max K)`` (monotone in time within each piece)."""
        space = self._space(closure)
        emu = self.exp_mu_tau_closure if closure else self.exp_mu_tau
        lo, hi = [], []
        for i in range(self.n_pieces):
            f_start, _ = self._time_factor(self.taus[i], i)
            f_end, _ = self._time_factor(self.taus[i + 1], i)
            v = self.A ** (1.0 / self.m) * space * emu[i]
            lo.append(float(min(f_start, f_end) * v.min()))
            hi.append(float(max(f_start, f_end) * v.max()))
        return np.array(lo), np.array(hi)

    @property
    def M(self):
        """Global maximum over the closure and the time window."""
        return float(self.piece_extremes()[1].max())

    @property
    def minimum(self):
        return float(self.piece_extremes()[0].min())

    def join_gaps(self):
        """``K_{i+1}(tau_{i+1}) - K_i(tau_{i+1})`` at every join, shape ``(L-1, closure nodes)``."""
        out = []
        for i in range(self.n_pieces - 1):
            t = self.taus[i + 1]
            f_left, _ = self._time_factor(t, i)
            f_right, _ = self._time_factor(t, i + 1)
            left = f_left * self.exp_mu_tau_closure[i]
            right = f_right * self.exp_mu_tau_closure[i + 1]
            out.append(self.A ** (1.0 / self.m) * self._space(True) * (right - left))
        return np.array(out).reshape(-1, self.grid.closure_coords.shape[0])

    def to_csv(self, times, path_or_buf=None):
        """Evaluation lattice ``t,x[,y],value`` over interior nodes."""
        times = np.asarray(times, dtype=float)
        K = self.evaluate(times)
        g = self.grid
        data = np.column_stack([np.repeat(times, g.size), np.tile(g.coords, (times.size, 1)),
                                K.reshape(-1)])
        header = ",".join(["t"] + ["x", "y"][: g.dim] + ["value"])
        buf = io.StringIO()
        np.savetxt(buf, data, delimiter=",", header=header, comments="", fmt="%.17g")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def _exp_mu_at(coeffs, z_path, taus):
    z = z_path(taus[:-1])
    return np.exp(coeffs.mu(z)), np.exp(coeffs.mu_closure(z))


def _check_window(partition, z_path):
    taus = np.asarray(partition, dtype=float)
    if taus.ndim != 1 or taus.size < 2 or np.any(np.diff(taus) <= 0):
        raise ValueError("partition must be strictly increasing with at least two points")
    return taus


def build_supersolution(sigma0, partition, coeffs, z_path, m, R=None):
    """Degenerate-mode bound with ``sigma_{i+1} = (sigma_i + gamma) / 2``.

    ``gamma`` is the smallest non-final gap, which makes ``K_i(tau_{i+1}) <=
    K_{i+1}(tau_{i+1})`` hold at every join.
    """
    if not m > 1:
        raise ValueError("build_supersolution requires m > 1; use fast_diffusion_bound")
    if not sigma0 >= 0:
        raise ValueError("sigma0 must be nonnegative")
    grid = coeffs.grid
    R = grid.radius if R is None else float(R)
    taus = _check_window(partition, z_path)
    gamma = _gamma(taus)
    sig = [float(sigma0)]
    for _ in range(taus.size - 2):
        sig.append(0.5 * (sig[-1] + gamma))
    emu, emu_c = _exp_mu_at(coeffs, z_path, taus)
    return PiecewiseBound(taus, np.array(sig), gamma, A_constant(m, R, grid.dim), R,
                          float(R**2 - np.max(np.sum(grid.closure_coords**2, axis=1))),
                          float(m), "degenerate", grid, emu, emu_c)


def uniform_bound_U(partition, coeffs, z_path, m, R=None):
    """``U = K`` with ``sigma_0 = 0``: infinite at the initial time, independent of data."""
    return build_supersolution(0.0, partition, coeffs, z_path, m, R)


def sigma0_from(Y0_sup, A, C4, inf_exp_mu0, m):
    """Largest ``sigma_0`` with ``A^(1/m) sigma_0^(-1/(m-1)) C4^(1/m) inf e^{mu_0} >= Y0_sup``."""
    if Y0_sup <= 0:
        return np.inf
    return float((A ** (1.0 / m) * C4 ** (1.0 / m) * inf_exp_mu0 / Y0_sup) ** (m - 1.0))


def sigma0_for(Y0_sup, partition, coeffs, z_path, m, R=None):
    grid = coeffs.grid
    R = grid.radius if R is None else float(R)
    taus = _check_window(partition, z_path)
    C4 = float(R**2 - np.max(np.sum(grid.closure_coords**2, axis=1)))
    inf_e = float(np.exp(coeffs.mu_closure(z_path(taus[0]))).min())
    return sigma0_from(Y0_sup, A_constant(m, R, grid.dim), C4, inf_e, m)


def delta0_for(bound):
    """Largest ``delta`` with ``K`` inside ``[delta, 1/delta]`` everywhere."""
    lo, hi = bound.minimum, bound.M
    if not np.isfinite(hi):
        raise ValueError("bound is infinite somewhere (sigma_0 = 0); delta_0 is undefined")
    assert lo > 0, "bound must be positive on the closure"
    return float(min(lo, 1.0 / hi))


def fast_sigma0_for(Y0_sup, partition, coeffs, z_path, m, R=None):
    """Smallest ``sigma_0 > tau_1`` with ``K_0(0) >= Y0_sup`` in fast mode."""
    grid = coeffs.grid
    R = grid.radius if R is None else float(R)
    taus = _check_window(partition, z_path)
    C4 = float(R**2 - np.max(np.sum(grid.closure_coords**2, axis=1)))
    inf_e = float(np.exp(coeffs.mu_closure(z_path(taus[0]))).min())
    A = A_constant(m, R, grid.dim)
    need = (max(Y0_sup, 0.0) / (A ** (1.0 / m) * C4 ** (1.0 / m) * inf_e)) ** (1.0 - m)
    floor = (taus[1] - taus[0]) * (1.0 + 1e-9)
    return float(max(need, floor))


def fast_diffusion_bound(sigma_list, partition, coeffs, z_path, m, R=None):
    """Fast-mode bound.  ``sigma_list`` is either the full offsets or just
    ``[sigma_0]``, extended by ``sigma_{i+1} = 2 sigma_i + tau_{i+1}``."""
    if not 0 < m < 1:
        raise ValueError("fast_diffusion_bound requires 0 < m < 1")
    grid = coeffs.grid
    R = grid.radius if R is None else float(R)
    taus = _check_window(partition, z_path)
    rel = taus - taus[0]
    sig = [float(s) for s in np.atleast_1d(sigma_list)]
    while len(sig) < taus.size - 1:
        sig.append(2.0 * sig[-1] + rel[len(sig)])
    sig = np.array(sig[: taus.size - 1])
    if np.any(sig <= rel[1:]):
        raise ValueError("need sigma_i > tau_{i+1} on every piece")
    if np.any(sig[1:] < 2.0 * sig[:-1] + rel[1:-1] - 1e-12 * sig[1:]):
        raise ValueError("offsets violate sigma_{i+1} >= 2 sigma_i + tau_{i+1}")
    emu, emu_c = _exp_mu_at(coeffs, z_path, taus)
    return PiecewiseBound(taus, sig, _gamma(taus), A_constant(m, R, grid.dim), R,
                          float(R**2 - np.max(np.sum(grid.closure_coords**2, axis=1))),
                          float(m), "fast", grid, emu, emu_c)


def supersolution_defect(bound, t, coeffs, z_path):
    """``d_t K - e^mu Lap_h(e^{-m mu} K^m)`` at interior nodes, boundary values of
    ``K`` included in the discrete Laplacian."""
    grid = bound.grid
    Kc = bound.evaluate(t, closure=True)
    z = z_path(t)
    mu_c = coeffs.mu_closure(z)
    w = np.exp(-bound.m * mu_c) * Kc**bound.m
    w = w.reshape(tuple(k + 2 for k in grid.n))
    if grid.dim == 1:
        lap = (w[:-2] - 2.0 * w[1:-1] + w[2:]) / grid.h[0] ** 2
    else:
        lap = ((w[:-2, 1:-1] - 2.0 * w[1:-1, 1:-1] + w[2:, 1:-1]) / grid.h[0] ** 2
               + (w[1:-1, :-2] - 2.0 * w[1:-1, 1:-1] + w[1:-1, 2:]) / grid.h[1] ** 2)
    return bound.time_derivative(t) - np.exp(coeffs.mu(z)) * lap.reshape(-1)


# L1 contraction ------------------------------------------------------------

def contraction_weight(grid):
    """``phi`` with ``-Lap_h phi = 1`` and ``phi = 1`` on the boundary, on closure
    nodes, and its ``C^1`` norm (sup plus sup of one-sided difference quotients)."""
    inner = 1.0 + grid.inverse_laplacian(np.ones(grid.size))
    full = np.ones(tuple(k + 2 for k in grid.n))
    full[tuple(slice(1, -1) for _ in grid.n)] = inner.reshape(grid.n)
    grads = [np.abs(np.diff(full, axis=ax)).max() / h for ax, h in enumerate(grid.h)]
    c1 = float(full.max() + np.sqrt(np.sum(np.square(grads))))
    return full.reshape(-1), c1


def estimate_contraction_constant(grid, coeffs, z_path, m, t0=None, T=None, compound=False,
                                  return_partition=False):
    """Upper bound ``C`` for ``sup_t ||X1_t - X2_t||_1 / ||X1_0 - X2_0||_1``.

    The default is ``sup eta / inf eta`` over pieces and closure nodes, with the
    weight ``eta = phi e^{-mu_{tau_i}}`` on the partition where
    ``inf e^{mu_t - mu_tau} (1 - 2 ||phi||_C1 (g + g^2 + l)) >= 1/2``.
    ``compound=True`` instead chains the weighted estimate across the joins:
    ``(sup phi / inf phi) sup_t [sup e^{-(mu_t - mu_tau_i)} prod_{j<i} sup e^{mu_tau_j - mu_tau_{j+1}}]``.
    """
    if coeffs.grid is not grid:
        raise ValueError("coefficients are sampled on a different grid")
    phi, c1 = contraction_weight(grid)
    taus = _greedy(z_path, coeffs, _contraction_ok(c1), t0, T)
    z_tau = z_path(taus[:-1])
    mu_tau = coeffs.mu_closure(z_tau)
    ratio = phi.max() / phi.min()
    if not compound:
        eta = phi[None, :] * np.exp(-mu_tau)
        C = float(eta.max() / eta.min())
    else:
        C = 0.0
        chain = 1.0
        for i in range(taus.size - 1):
            if i > 0:
                chain *= float(np.exp(mu_tau[i - 1] - mu_tau[i]).max())
            a, b = z_path.index_of(taus[i]), z_path.index_of(taus[i + 1])
            dz = z_path.values[a:b + 1] - z_path.values[a]
            drift = float(np.exp(dz @ coeffs.closure[0]).max())  # e^{-(mu_t - mu_tau)}
            C = max(C, ratio * drift * chain)
    return (C, taus) if return_partition else C
