"""Implicit time stepping for the transformed equation

    dY/dt = e^mu Lap( Phi(e^-mu) Phi_delta(Y) ),   mu_t = -sum_k f_k z_t^(k),

its untransformation ``X = e^-mu Y``, a direct scheme for finite-variation
signals, limit solutions for rough initial data and a very-weak residual.

Two anchorings of the exponent are available.  ``anchor="origin"`` applies
backward Euler literally to the equation above.  ``anchor="step"`` (default)
re-anchors the exponent at the end of every step, which in ``X`` reads

    X' - dt Lap_h Phi_delta(X') = exp(mu_n - mu_{n+1}) X.

Only increments of the signal enter, so the scheme commutes exactly with
time shifts of the signal, and for a constant signal it reduces to backward
Euler for the deterministic equation.  Both anchorings agree with ``Phi`` in
place of ``Phi_delta``.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .coefficients import CoefficientSet, mu_field
from .exceptions import NewtonDiverged, NonFiniteError, NotBoundedVariation
from .nonlinearity import PhiSpec, default_delta, phi

__all__ = [
    "SolverConfig",
    "Trajectory",
    "CoefficientSet",
    "mu_field",
    "step_transformed",
    "solve_transformed",
    "solve_rough",
    "solve_direct_bv",
    "limit_solution",
    "SineTestFunction",
    "test_function",
    "test_function_registry",
    "very_weak_residual",
]


@dataclass(frozen=True)
class SolverConfig:
    m: float
    dt: float
    delta: Union[float, str] = "auto"
    newton_tol: float = 1e-10
    newton_max: int = 50
    theta: float = 1.0
    anchor: str = "step"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.m > 0 or self.m == 1:
            raise ValueError(f"invalid exponent m={self.m}")
        if self.delta != "auto" and not 0 < float(self.delta) < 1:
            raise ValueError(f"delta must be 'auto' or lie in (0, 1), got {self.delta}")
        if self.theta != 1.0:
            raise ValueError("only the fully implicit scheme (theta=1) is implemented")
        if self.anchor not in ("step", "origin"):
            raise ValueError(f"anchor must be 'step' or 'origin', got {self.anchor!r}")
        if not self.newton_tol > 0 or self.newton_max < 1:
            raise ValueError("invalid Newton settings")

    def phi_spec(self, grid, sup=0.0):
        """Resolve ``delta``.

        ``"auto"`` uses ``h^(2/(m+1))`` capped so that ``1/delta`` stays at least
        four times above ``max(1, sup)``, keeping the data inside the region
        where ``Phi_delta = Phi`` from above.
        """
        if self.delta == "auto":
            d = default_delta(min(grid.h), self.m)
            d = min(d, 0.25 / max(1.0, float(sup)), 0.5)
        else:
            d = float(self.delta)
        return PhiSpec(self.m, d)


class Trajectory:
    """Stored times, fields ``(n_t, *batch, size)`` and per-time diagnostics."""

    def __init__(self, times, values, label, grid, diagnostics=None, config=None, seed=None):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.label = label
        self.grid = grid
        self.diagnostics = {} if diagnostics is None else diagnostics
        self.config = {} if config is None else config
        self.seed = seed
        if self.values.shape[0] != self.times.size:
            raise ValueError("values and times are not aligned")

    def __len__(self):
        return self.times.size

    def __repr__(self):
        return (f"Trajectory(label={self.label!r}, n_times={len(self)}, "
                f"t=[{self.times[0]:g}, {self.times[-1]:g}], shape={self.values.shape[1:]})")

    @property
    def final(self):
        return self.values[-1]

    @property
    def batch_shape(self):
        return self.values.shape[1:-1]

    def at(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} is not stored")
        return self.values[k]

    def with_values(self, values, label):
        return Trajectory(self.times, values, label, self.grid, dict(self.diagnostics),
                          dict(self.config), self.seed)

    def to_csv(self, path_or_buf=None):
        """Long format ``t,x[,y],value`` (plus ``member`` for batched trajectories)."""
        g = self.grid
        n_t = len(self)
        vals = self.values.reshape(n_t, -1, g.size)
        n_b = vals.shape[1]
        t = np.repeat(self.times, n_b * g.size)
        xy = np.tile(g.coords, (n_t * n_b, 1))
        cols = [t[:, None], xy]
        header = ["t"] + ["x", "y"][: g.dim]
        if n_b > 1:
            member = np.tile(np.repeat(np.arange(n_b), g.size), n_t)
            cols.insert(1, member[:, None])
            header.insert(1, "member")
        cols.append(vals.reshape(-1)[:, None])
        header.append("value")
        buf = io.StringIO()
        np.savetxt(buf, np.hstack(cols), delimiter=",", header=",".join(header),
                   comments="", fmt="%.17g")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)

    def diagnostics_json(self, path_or_buf=None):
        payload = {
            "label": self.label,
            "times": self.times.tolist(),
            "grid": self.grid.describe(),
            "config": self.config,
            "seed": self.seed,
            "diagnostics": {k: np.asarray(v).tolist() for k, v in self.diagnostics.items()},
        }
        text = json.dumps(payload, indent=1, sort_keys=True)
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)


# implicit solve -------------------------------------------------------------

def _lap(grid, U):
    if grid.dim == 1:
        out = -2.0 * U
        out[..., 1:] += U[..., :-1]
        out[..., :-1] += U[..., 1:]
        return out / grid.h[0] ** 2
    return grid.laplacian(U)


def _linear_solve(grid, diag_p, g, dt, rhs):
    """Solve ``diag(diag_p) W - dt Lap_h (g W) = rhs`` row-wise for a batch."""
    B, n = rhs.shape
    if grid.dim == 1:
        k = dt / grid.h[0] ** 2
        ab = np.zeros((3, B * n))
        off = (-k * g).copy()
        upper = off.copy()
        upper[:, 0] = 0.0
        lower = off.copy()
        lower[:, -1] = 0.0
        ab[0] = upper.ravel()
        ab[1] = (diag_p + 2.0 * k * g).ravel()
        ab[2] = lower.ravel()
        return solve_banded((1, 1), ab, rhs.ravel(), check_finite=False).reshape(B, n)
    L = grid.laplacian_matrix
    out = np.empty_like(rhs)
    for b in range(B):
        J = sp.diags(diag_p[b]) - dt * (L @ sp.diags(g[b]))
        out[b] = spsolve(sp.csc_matrix(J), rhs[b])
    return out


def _implicit_solve(grid, spec, b, dt, a, c, p, tol, max_iter):
    """Solve ``p W - b - dt a Lap_h(c Phi_delta(W)) = 0`` for a batch ``(B, n)``.

    Damped Newton per member, with a fixed-slope Picard iteration for members
    whose line search fails twice.  Returns ``(W, iterations, residual)``.
    """
    B, n = b.shape
    a = np.broadcast_to(a, (B, n))
    c = np.broadcast_to(c, (B, n))
    p = np.broadcast_to(p, (B, n))
    tol_b = tol * np.maximum(1.0, np.abs(b).max(axis=1))
    upd_b = tol_b * np.maximum(1.0, a.max(axis=1))

    def residual(W, idx):
        return p[idx] * W - b[idx] - dt * a[idx] * _lap(grid, c[idx] * spec.evaluate(W, 0)[0])

    W = b / p
    R = residual(W, slice(None))
    rn = np.abs(R).max(axis=1)
    done = rn <= tol_b
    stalls = np.zeros(B, dtype=int)
    iters = np.zeros(B, dtype=int)
    for _ in range(max_iter):
        act = np.flatnonzero(~done & (stalls < 2))
        if act.size == 0:
            break
        Wa, Ra = W[act], R[act]
        d1 = spec.evaluate(Wa, 1)[1]
        step = _linear_solve(grid, p[act] / a[act], c[act] * d1, dt, -Ra / a[act])
        r2 = np.sum((Ra / a[act]) ** 2, axis=1)
        lam = np.ones(act.size)
        accepted = np.zeros(act.size, dtype=bool)
        Wn, Rn = Wa.copy(), Ra.copy()
        for _ in range(16):
            todo = np.flatnonzero(~accepted)
            if todo.size == 0:
                break
            trial = Wa[todo] + lam[todo, None] * step[todo]
            Rt = residual(trial, act[todo])
            ok = np.sum((Rt / a[act[todo]]) ** 2, axis=1) <= (1.0 - 1e-4 * lam[todo]) ** 2 * r2[todo]
            ok |= np.abs(Rt).max(axis=1) <= tol_b[act[todo]]
            good = todo[ok]
            Wn[good], Rn[good] = trial[ok], Rt[ok]
            accepted[good] = True
            lam[todo[~ok]] *= 0.5
        iters[act] += 1
        stalls[act[~accepted]] += 1
        if not np.all(np.isfinite(Wn)):
            raise NonFiniteError("non-finite Newton iterate")
        W[act], R[act] = Wn, Rn
        upd = np.abs(lam[:, None] * step).max(axis=1)
        rn[act] = np.abs(Rn).max(axis=1)
        done[act] = accepted & (rn[act] <= tol_b[act]) & (upd <= upd_b[act])
    left = np.flatnonzero(~done)
    if left.size:
        for i in left:
            W[i], k, rn[i], ok = _picard(grid, spec, b[i], dt, a[i], c[i], p[i], W[i],
                                        tol_b[i], upd_b[i], 20 * max_iter)
            iters[i] += k
            if not ok:
                raise NewtonDiverged(f"nonlinear solve stalled with residual {rn[i]:.3e}",
                                     residual=float(rn[i]))
    return W, iters, rn


def _picard(grid, spec, b, dt, a, c, p, W, tol, upd_tol, max_iter):
    """Fixed-slope (L-scheme) iteration; globally convergent for increasing ``Phi_delta``."""
    M = 2.0 * max(np.abs(W).max(), np.abs(b / p).max(), 1.0)
    s = float(spec.evaluate(np.linspace(0.0, M, 4001), 1)[1].max())
    b, a, c, p, W = (np.asarray(v)[None, :] for v in (b, a, c, p, W))
    for k in range(1, max_iter + 1):
        f = spec.evaluate(W, 0)[0]
        rhs = b / a + dt * _lap(grid, c * (f - s * W))
        Wn = _linear_solve(grid, p / a, c * s, dt, rhs)
        upd = np.abs(Wn - W).max()
        W = Wn
        R = p * W - b - dt * a * _lap(grid, c * spec.evaluate(W, 0)[0])
        rn = np.abs(R).max()
        if rn <= tol and upd <= upd_tol:
            return W[0], k, rn, True
    return W[0], max_iter, rn, False


def _as_batch(u, grid):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != grid.size:
        raise ValueError(f"field has {u.shape[-1]} nodes, grid has {grid.size}")
    if not np.all(np.isfinite(u)):
        raise ValueError("initial condition contains non-finite values")
    return u.reshape(-1, grid.size), u.shape[:-1]


def step_transformed(Y, t, z_path, cfg, coeffs, spec=None):
    """One backward-Euler step of the transformed equation from ``t`` to ``t + dt``.

    Literal form: ``(Y' - Y)/dt = e^mu Lap_h(Phi(e^-mu) Phi_delta(Y'))`` with the
    exponent evaluated at ``t + dt``.
    """
    grid = coeffs.grid
    Yb, shape = _as_batch(Y, grid)
    if spec is None:
        spec = cfg.phi_spec(grid, np.abs(Yb).max(initial=0.0))
    mu = coeffs.mu(z_path(t + cfg.dt))
    W, _, _ = _implicit_solve(grid, spec, Yb, cfg.dt, np.exp(mu), np.exp(-cfg.m * mu), 1.0,
                              cfg.newton_tol, cfg.newton_max)
    return W.reshape(shape + (grid.size,))


def _time_grid(z_path, dt, t0, T):
    t0 = z_path.t0 if t0 is None else float(t0)
    T = z_path.t1 if T is None else float(T)
    n = int(round((T - t0) / dt))
    if n < 0 or abs(n * dt - (T - t0)) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"[{t0}, {T}] is not a multiple of dt={dt}")
    return t0 + dt * np.arange(n + 1)


def _norm_diagnostics(grid, U, m):
    return {
        "L1": grid.norm(U, "L1"),
        "Lm1": np.abs(U) ** (m + 1) @ grid.weights,
        "Linf": grid.norm(U, "Linf"),
        "Hdual": grid.norm(U, "Hdual"),
    }


def _march(U0, z_path, cfg, coeffs, t0, T, save_every, diagnostics, spec, mode):
    """Shared time loop.  ``mode`` is ``step``, ``origin`` or ``direct``; the state is
    ``X`` for ``step``/``direct`` and ``Y`` for ``origin``."""
    grid = coeffs.grid
    times = _time_grid(z_path, cfg.dt, t0, T)
    z = z_path(times)
    mu = coeffs.mu(z)
    U = U0.copy()
    keep = [0]
    saved = [U.copy()]
    B = U.shape[0]
    iters_acc = np.zeros(B, dtype=int)
    res_acc = np.zeros(B)
    diag = {"newton_iterations": [iters_acc.copy()], "residual": [res_acc.copy()]}
    track_energy = diagnostics and mode == "step"
    if diagnostics:
        E0 = spec.primitive(U).sum(axis=-1) * grid.cell
        diag["energy"] = [E0]
        if track_energy:
            src = np.zeros(B)
            dis = np.zeros(B)
            diag["energy_source"] = [src.copy()]
            diag["dissipation"] = [dis.copy()]
    n_steps = times.size - 1
    for n in range(n_steps):
        try:
            if mode == "step":
                b = np.exp(mu[n] - mu[n + 1]) * U
                Un, it, res = _safeguarded_step(grid, spec, b, cfg, z_path, coeffs,
                                                times[n], times[n + 1], mu[n], mu[n + 1], U, 0)
                if track_energy:
                    src += (spec.primitive(b) - spec.primitive(U)).sum(axis=-1) * grid.cell
                    f = spec.evaluate(Un, 0)[0]
                    dis += cfg.dt * np.sum(-f * _lap(grid, f), axis=1) * grid.cell
            elif mode == "origin":
                Un, it, res = _implicit_solve(grid, spec, U, cfg.dt, np.exp(mu[n + 1]),
                                              np.exp(-cfg.m * mu[n + 1]), 1.0,
                                              cfg.newton_tol, cfg.newton_max)
            else:
                p = 1.0 - (z[n + 1] - z[n]) @ coeffs.F
                if np.any(p <= 0):
                    raise ValueError("signal increment too large for the direct scheme; reduce dt")
                Un, it, res = _implicit_solve(grid, spec, U, cfg.dt, 1.0, 1.0, p,
                                              cfg.newton_tol, cfg.newton_max)
        except NewtonDiverged as exc:
            raise NewtonDiverged(f"step {n} (t={times[n]:.6g}): {exc}", residual=exc.residual,
                                 step=n) from exc
        if not np.all(np.isfinite(Un)):
            raise NonFiniteError(f"non-finite state at step {n} (t={times[n + 1]:.6g})")
        U = Un
        iters_acc += it
        res_acc = np.maximum(res_acc, res)
        if (n + 1) % save_every == 0 or n + 1 == n_steps:
            keep.append(n + 1)
            saved.append(U.copy())
            diag["newton_iterations"].append(iters_acc.copy())
            diag["residual"].append(res_acc.copy())
            iters_acc[:] = 0
            res_acc[:] = 0.0
            if diagnostics:
                diag["energy"].append(spec.primitive(U).sum(axis=-1) * grid.cell)
                if track_energy:
                    diag["energy_source"].append(src.copy())
                    diag["dissipation"].append(dis.copy())
    keep = np.array(keep)
    return times[keep], np.stack(saved), mu[keep], {k: np.stack(v) for k, v in diag.items()}


def _safeguarded_step(grid, spec, b, cfg, z_path, coeffs, ta, tb, mu_a, mu_b, X, depth):
    """Step-anchored solve with a discrete maximum-principle check; on violation
    the step is retried as two half steps."""
    dt = tb - ta
    W, it, res = _implicit_solve(grid, spec, b, dt, 1.0, 1.0, 1.0, cfg.newton_tol, cfg.newton_max)
    slack = 10.0 * cfg.newton_tol * np.maximum(1.0, np.abs(b).max(axis=1))
    hi = np.maximum(b.max(axis=1), 0.0) + slack
    lo = np.minimum(b.min(axis=1), 0.0) - slack
    if np.all(W.max(axis=1) <= hi) and np.all(W.min(axis=1) >= lo):
        return W, it, res
    if depth >= 3:
        raise NewtonDiverged("discrete maximum principle violated after step refinement",
                             residual=float(np.max(res)))
    tm = 0.5 * (ta + tb)
    mu_m = coeffs.mu(z_path(tm))
    W1, it1, r1 = _safeguarded_step(grid, spec, np.exp(mu_a - mu_m) * X, cfg, z_path, coeffs,
                                    ta, tm, mu_a, mu_m, X, depth + 1)
    W2, it2, r2 = _safeguarded_step(grid, spec, np.exp(mu_m - mu_b) * W1, cfg, z_path, coeffs,
                                    tm, tb, mu_m, mu_b, W1, depth + 1)
    return W2, it + it1 + it2, np.maximum(r1, r2)


def _finish(grid, cfg, spec, times, fields, label, diag, shape, diagnostics, extra=None):
    if diagnostics:
        diag.update(_norm_diagnostics(grid, fields, cfg.m))
    out_shape = (times.size,) + shape + (grid.size,)
    diag = {k: v.reshape((times.size,) + shape) for k, v in diag.items()}
    config = dict(asdict(cfg), delta_resolved=spec.delta, C1=spec.C1, C2=spec.C2)
    if extra:
        config.update(extra)
    return Trajectory(times, fields.reshape(out_shape), label, grid, diag, config)


def _run(U0, z_path, cfg, coeffs, t0, T, save_every, diagnostics, spec, origin_input):
    """Run in the configured anchoring; returns (times, X fields, Y fields, diag, spec, shape)."""
    grid = coeffs.grid
    Ub, shape = _as_batch(U0, grid)
    times0 = _time_grid(z_path, cfg.dt, t0, T)
    mu0 = coeffs.mu(z_path(times0[0]))
    if origin_input:
        Y0, X0 = Ub, np.exp(-mu0) * Ub
    else:
        X0, Y0 = Ub, np.exp(mu0) * Ub
    if cfg.anchor == "step":
        if spec is None:
            spec = cfg.phi_spec(grid, np.abs(X0).max(initial=0.0))
        times, X, mu, diag = _march(X0, z_path, cfg, coeffs, t0, T, save_every, diagnostics,
                                    spec, "step")
        if origin_input:
            X[0] = X0
        Y = np.exp(mu)[:, None, :] * X
        Y[0] = Y0
    else:
        if spec is None:
            spec = cfg.phi_spec(grid, np.abs(Y0).max(initial=0.0))
        times, Y, mu, diag = _march(Y0, z_path, cfg, coeffs, t0, T, save_every, diagnostics,
                                    spec, "origin")
        X = np.exp(-mu)[:, None, :] * Y
        X[0] = X0
    return times, X, Y, diag, spec, shape


def solve_transformed(Y0, z_path, cfg, coeffs, t0=None, T=None, save_every=1,
                      diagnostics=True, spec=None):
    """Trajectory of ``Y`` (exponent anchored at the path origin) from ``Y0`` at ``t0``."""
    times, _, Y, diag, spec, shape = _run(Y0, z_path, cfg, coeffs, t0, T, save_every,
                                          diagnostics, spec, True)
    return _finish(coeffs.grid, cfg, spec, times, Y, "Y", diag, shape, diagnostics,
                   {"t0": float(times[0]), "T": float(times[-1])})


def solve_rough(X0, z_path, cfg, coeffs, t0=None, T=None, save_every=1,
                diagnostics=True, spec=None):
    """Trajectory of ``X = e^-mu Y`` for the equation driven by ``z_path``."""
    times, X, _, diag, spec, shape = _run(X0, z_path, cfg, coeffs, t0, T, save_every,
                                          diagnostics, spec, False)
    traj = _finish(coeffs.grid, cfg, spec, times, X, "X", diag, shape, diagnostics,
                   {"t0": float(times[0]), "T": float(times[-1])})
    traj.seed = z_path.seed
    return traj


def solve_direct_bv(X0, z_path, cfg, coeffs, t0=None, T=None, save_every=1,
                    diagnostics=True, spec=None):
    """Backward Euler for ``dX = Lap Phi_delta(X) dt + sum_k f_k X dz^(k)`` with a
    finite-variation signal, the noise term taken implicitly."""
    if not z_path.is_bounded_variation:
        raise NotBoundedVariation(f"signal of kind {z_path.kind!r} is not of finite variation")
    grid = coeffs.grid
    Xb, shape = _as_batch(X0, grid)
    if spec is None:
        spec = cfg.phi_spec(grid, np.abs(Xb).max(initial=0.0))
    times, X, _, diag = _march(Xb, z_path, cfg, coeffs, t0, T, save_every, diagnostics, spec,
                               "direct")
    traj = _finish(grid, cfg, spec, times, X, "X", diag, shape, diagnostics,
                   {"t0": float(times[0]), "T": float(times[-1]), "scheme": "direct"})
    traj.seed = z_path.seed
    return traj


def limit_solution(X0, clamp_levels, z_path, cfg, coeffs, t0=None, T=None, save_every=1):
    """Solve from ``X0`` truncated to ``[-L, L]`` for each level and report the
    Cauchy increments ``sup_t ||X^(L) - X^(L')||_1`` between consecutive levels.

    All levels share one ``Phi_delta`` (resolved from the largest level).
    """
    levels = [float(v) for v in clamp_levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] <= 0:
        raise ValueError("clamp levels must be positive and strictly increasing")
    grid = coeffs.grid
    X0 = np.asarray(X0, dtype=float)
    if not np.all(np.isfinite(X0)):
        raise ValueError("initial condition contains non-finite values")
    top = min(levels[-1], float(np.abs(X0).max(initial=0.0)))
    spec = cfg.phi_spec(grid, top)
    incs, clamp_l1, prev, traj = [], [], None, None
    prev_ic = None
    for L in levels:
        ic = np.clip(X0, -L, L)
        traj = solve_rough(ic, z_path, cfg, coeffs, t0, T, save_every, diagnostics=False,
                           spec=spec)
        if prev is not None:
            incs.append(float(np.max(grid.norm(traj.values - prev.values, "L1"))))
            clamp_l1.append(float(np.max(grid.norm(ic - prev_ic, "L1"))))
        prev, prev_ic = traj, ic
    traj.diagnostics["clamp_levels"] = np.array(levels)
    traj.diagnostics["cauchy_increments"] = np.array(incs)
    traj.diagnostics["clamp_differences"] = np.array(clamp_l1)
    traj.diagnostics["cauchy_tail"] = np.array(incs[-1] if incs else 0.0)
    return traj


# very weak residual -----------------------------------------------------------

@dataclass(frozen=True)
class SineTestFunction:
    """``eta(t, x) = (T - t)^power * prod_j sin(k_j pi (x_j - a_j) / L_j)``.

    Vanishes at ``t = T`` and on the boundary of the box ``prod_j (a_j, a_j + L_j)``.
    """

    T: float
    lower: tuple
    length: tuple
    k: tuple = (1,)
    power: int = 1

    def _space(self, pts):
        n, d = pts.shape
        w = np.array([kj * np.pi / lj for kj, lj in zip(self.k, self.length)])
        arg = (pts - np.asarray(self.lower)) * w
        s, c = np.sin(arg), np.cos(arg)
        val = np.prod(s, axis=1)
        grad = np.empty((n, d))
        for j in range(d):
            grad[:, j] = w[j] * c[:, j] * np.prod(np.delete(s, j, axis=1), axis=1)
        lap = -np.sum(w**2) * val
        return val, grad, lap

    def evaluate(self, t, pts):
        """``(eta, d_t eta, grad eta, Lap eta)`` at one time."""
        val, grad, lap = self._space(pts)
        p = self.power
        tau = self.T - t
        g = tau**p
        dg = -p * tau ** (p - 1) if p > 0 else 0.0
        return g * val, dg * val, g * grad, g * lap


def test_function(grid, T, k=1, power=1):
    """Registry test function adapted to ``grid``'s box."""
    k = (k,) * grid.dim if np.isscalar(k) else tuple(k)
    return SineTestFunction(float(T), tuple(a for a, _ in grid.extent),
                            tuple(b - a for a, b in grid.extent), k, int(power))


def test_function_registry(grid, T):
    """The five standard test functions used for residual checks."""
    specs = [(1, 1), (3, 1), (5, 1), (1, 2), (3, 2)]
    return [test_function(grid, T, k, p) for k, p in specs]


test_function.__test__ = False
test_function_registry.__test__ = False


def very_weak_residual(traj, eta, coeffs, z_path):
    """``|-int Y d_t eta - int Y_0 eta_0 - int Phi(e^-mu Y) Lap(e^mu eta)|`` by
    trapezoidal quadrature in time over the stored times and the grid rule in space.

    The time origin of the weak form is the first stored time.
    """
    if traj.label != "Y":
        raise ValueError("very_weak_residual expects a Y-labelled trajectory")
    grid = coeffs.grid
    pts = grid.coords
    m = traj.config.get("m")
    if m is None:
        raise ValueError("trajectory does not record the exponent m")
    if abs(traj.times[-1] - eta.T) > 1e-9 * max(1.0, eta.T) or traj.times[0] > eta.T:
        raise ValueError("test function must vanish at the final stored time")
    n_t = len(traj)
    vals = traj.values.reshape(n_t, -1, grid.size)
    bulk = np.empty((n_t, vals.shape[1]))
    for i, t in enumerate(traj.times):
        z = z_path(t)
        mu, gmu, lmu = mu_field(coeffs, z)
        e, et, eg, el = eta.evaluate(t, pts)
        lap_e = np.exp(mu) * (el + 2.0 * np.sum(gmu * eg, axis=1) + e * (np.sum(gmu**2, axis=1) + lmu))
        Y = vals[i]
        bulk[i] = (-Y * et - phi(np.exp(-mu) * Y, m) * lap_e) @ grid.weights
        if i == 0:
            init = (Y * e) @ grid.weights
    res = np.abs(np.trapezoid(bulk, traj.times, axis=0) - init)
    return res.reshape(traj.batch_shape) if traj.batch_shape else float(res[0])
