"""Random dynamical system layer: cocycle evaluation over a fixed signal
realisation, pullback runs, absorption and attractor-diameter diagnostics.

``phi(t, theta_s omega) x`` is the solution at time ``s + t`` started from ``x``
at time ``s`` with driver ``omega``; it is computed on the window ``[0, t]`` of
the shifted path ``theta_s omega``.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import choose_partition, uniform_bound_U
from .signals import WindowError, sample_path, shift_path
from .solver import solve_rough

__all__ = ["CocycleRun", "PullbackReport", "cocycle", "pullback", "absorption_check",
           "attractor_diameter_curve"]


def _field_key(x):
    x = np.ascontiguousarray(x, dtype=float)
    return hashlib.sha1(x.tobytes()).hexdigest()


class CocycleRun:
    """A fixed realisation ``omega`` on ``[-T_max, T_final]`` with solver settings."""

    def __init__(self, omega, coeffs, cfg, spec=None, sup=None):
        if omega.t0 > 0 or omega.t1 < 0:
            raise WindowError("omega must be sampled on a window containing 0")
        self.omega = omega
        self.coeffs = coeffs
        self.grid = coeffs.grid
        self.cfg = cfg
        self._cache = {}
        self._lock = threading.Lock()
        # one regularisation for every segment, otherwise restarts change the scheme
        if spec is None and sup is not None:
            spec = cfg.phi_spec(self.grid, sup)
        self.spec = spec

    @classmethod
    def sample(cls, model, T_max, T_final, dt, seed, coeffs, cfg, spec=None, sup=None):
        omega = sample_path(model, -float(T_max), float(T_final), dt, seed=seed)
        return cls(omega, coeffs, cfg, spec=spec, sup=sup)

    @property
    def T_max(self):
        return -self.omega.t0

    def signal(self, s, t):
        """``theta_s omega`` restricted to ``[0, t]``."""
        if t < 0:
            raise ValueError("negative duration")
        if s < self.omega.t0 - 1e-12 or s + t > self.omega.t1 + 1e-9:
            raise WindowError(f"[{s}, {s + t}] is outside omega's window "
                              f"[{self.omega.t0}, {self.omega.t1}]")
        return shift_path(self.omega, s, 0.0, t)

    def cache_info(self):
        return {"entries": len(self._cache)}

    def solve(self, t, s, xs, spec=None):
        """Batched ``phi(t, theta_s omega) x`` for the rows of ``xs``; results are cached."""
        xs = np.asarray(xs, dtype=float).reshape(-1, self.grid.size)
        if t == 0:
            return xs.copy()
        keys = [(float(s), float(s + t), _field_key(x)) for x in xs]
        out = np.empty_like(xs)
        todo = []
        with self._lock:
            for j, k in enumerate(keys):
                if k in self._cache:
                    out[j] = self._cache[k]
                else:
                    todo.append(j)
        if todo:
            with self._lock:
                if self.spec is None:
                    self.spec = self.cfg.phi_spec(self.grid, np.abs(xs).max(initial=0.0))
            path = self.signal(s, t)
            traj = solve_rough(xs[todo], path, self.cfg, self.coeffs, diagnostics=False,
                               save_every=10**9, spec=spec or self.spec)
            res = traj.final.reshape(len(todo), self.grid.size)
            with self._lock:
                for r, j in enumerate(todo):
                    out[j] = res[r]
                    self._cache[keys[j]] = res[r].copy()
        return out


def cocycle(run, t, s, x):
    """``phi(t, theta_s omega) x``."""
    x = np.asarray(x, dtype=float)
    return run.solve(t, s, x[None, :] if x.ndim == 1 else x).reshape(x.shape)


@dataclass
class PullbackReport:
    times: np.ndarray
    images: np.ndarray                 # (n_times, n_ic, nodes)
    diameters: dict                    # norm -> (n_times,)
    sup_norms: np.ndarray              # (n_times, n_ic)
    modulus: np.ndarray                # (n_times,) max adjacent-node difference
    absorbed: dict = field(default_factory=dict)

    def to_json(self, path_or_buf=None):
        payload = {
            "times": self.times.tolist(),
            "diameters": {k: np.asarray(v).tolist() for k, v in self.diameters.items()},
            "sup_norms": self.sup_norms.tolist(),
            "modulus": self.modulus.tolist(),
            "absorption": {k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
                           for k, v in self.absorbed.items()},
        }
        text = json.dumps(payload, indent=1, sort_keys=True)
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)

    def to_csv(self, path_or_buf=None):
        """Diameter curves: ``t,<norm>,...``."""
        names = sorted(self.diameters)
        lines = [",".join(["t"] + [f"diam_{n}" for n in names] + ["max_sup"])]
        for i, t in enumerate(self.times):
            row = [repr(float(t))] + [repr(float(self.diameters[n][i])) for n in names]
            row.append(repr(float(self.sup_norms[i].max())))
            lines.append(",".join(row))
        text = "\n".join(lines) + "\n"
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def _diameter(grid, imgs, which):
    n = imgs.shape[0]
    best = 0.0
    for i in range(n - 1):
        d = grid.norm(imgs[i + 1:] - imgs[i], which)
        best = max(best, float(np.max(d)))
    return best


def _modulus(grid, imgs):
    u = imgs.reshape((imgs.shape[0],) + grid.n)
    pads = [(0, 0)] + [(1, 1)] * grid.dim
    u = np.pad(u, pads)
    return float(max(np.abs(np.diff(u, axis=ax + 1)).max() for ax in range(grid.dim)))


def pullback(run, ic_bundle, times, norms=("L1", "L2", "Linf"), workers=1):
    """Images ``phi(t_n, theta_{-t_n} omega) x_j`` of a bundle at each pullback time."""
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("pullback times must be nonnegative and strictly increasing")
    if times[-1] > run.T_max + 1e-12:
        raise WindowError(f"pullback time {times[-1]} exceeds T_max={run.T_max}")
    bundle = np.asarray(ic_bundle, dtype=float).reshape(-1, run.grid.size)

    def one(t):
        return run.solve(t, -t, bundle)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            imgs = list(ex.map(one, times))
    else:
        imgs = [one(t) for t in times]
    imgs = np.stack(imgs)
    diam = {w: np.array([_diameter(run.grid, im, w) for im in imgs]) for w in norms}
    sup = np.abs(imgs).max(axis=2)
    mod = np.array([_modulus(run.grid, im) for im in imgs])
    return PullbackReport(times, imgs, diam, sup, mod)


def absorption_check(report, run, tol=1e-2):
    """Compare every image at pullback times ``>= 1`` with ``||U_1(theta_{-1} omega)||_inf``.

    ``U`` is the data-independent bound built on ``omega`` over ``[-1, 0]``.  Also
    reported is the sharper nodewise form ``|X_1| <= e^{-mu_1} U_1``.
    """
    sel = report.times >= 1.0 - 1e-12
    if not sel.any():
        raise ValueError("report contains no pullback time >= 1")
    path = run.signal(-1.0, 1.0)
    taus = choose_partition(path, run.coeffs, run.cfg.m)
    U = uniform_bound_U(taus, run.coeffs, path, run.cfg.m)
    U1 = U.evaluate(1.0)
    radius = float(U1.max())
    nodal = np.exp(-run.coeffs.mu(path(1.0))) * U1
    t_sel = report.times[sel]
    sups = report.sup_norms[sel].max(axis=1)
    margin = radius * (1.0 + tol) - sups
    nodal_margin = np.array([float((nodal - np.abs(im)).min()) for im in report.images[sel]])
    out = {
        "times": t_sel,
        "radius": radius,
        "absorbed": margin >= 0,
        "margin": margin,
        "nodewise_absorbed": nodal_margin >= -tol * radius,
        "nodewise_margin": nodal_margin,
        "n_pieces": int(U.n_pieces),
    }
    report.absorbed = out
    return out


def attractor_diameter_curve(report):
    """``(t_n, diam_L1, diam_Linf)`` and the least-squares slope of log ``diam_L1`` in ``t``."""
    if report.times.size < 3:
        raise ValueError("need at least three pullback times")
    d1 = report.diameters.get("L1")
    dinf = report.diameters.get("Linf")
    if d1 is None or dinf is None:
        raise ValueError("report lacks L1 or Linf diameters")
    pos = d1 > 0
    slope = float(np.polyfit(report.times[pos], np.log(d1[pos]), 1)[0]) if pos.sum() >= 2 else 0.0
    return {"t": report.times.copy(), "diam_L1": d1.copy(), "diam_Linf": dinf.copy(),
            "log_slope_L1": slope}
