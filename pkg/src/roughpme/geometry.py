"""Finite-difference grids on intervals and rectangles with zero Dirichlet data.

Fields are plain numpy arrays holding one value per interior node (flattened
in C order for rectangles).  Leading batch axes are allowed wherever a field
is accepted.
"""

from __future__ import annotations

import io
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = ["Grid", "laplacian", "inverse_laplacian", "norm"]


class Grid:
    """Uniform grid on an interval ``(a, b)`` or rectangle ``(a, b) x (c, d)``.

    ``n`` counts interior nodes per axis, so ``h * (n + 1)`` spans each axis.
    ``radius`` is the radius of a ball around the origin that strictly
    contains the closed domain; it defaults to 1.05 times the distance of the
    farthest node.
    """

    def __init__(self, extent, n, radius=None):
        extent = tuple((float(a), float(b)) for a, b in extent)
        n = (int(n),) * len(extent) if np.isscalar(n) else tuple(int(k) for k in n)
        if len(extent) not in (1, 2) or len(n) != len(extent):
            raise ValueError("only intervals and rectangles are supported")
        if any(b <= a for a, b in extent) or any(k < 1 for k in n):
            raise ValueError("invalid extent or node count")
        self.extent = extent
        self.n = n
        self.dim = len(extent)
        self.h = tuple((b - a) / (k + 1) for (a, b), k in zip(extent, n))
        far = float(np.sqrt(sum(max(a * a, b * b) for a, b in extent)))
        if radius is None:
            radius = 1.05 * far
        if not radius > far:
            raise ValueError(f"radius {radius} does not strictly enclose the domain (needs > {far})")
        self.radius = float(radius)

    @classmethod
    def interval(cls, a, b, n, radius=None):
        return cls(((a, b),), n, radius)

    @classmethod
    def rectangle(cls, xlim, ylim, n, radius=None):
        return cls((xlim, ylim), n, radius)

    def __repr__(self):
        return f"Grid(extent={self.extent}, n={self.n}, radius={self.radius:g})"

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.extent]))

    @cached_property
    def axes(self):
        """Interior node coordinates per axis."""
        return tuple(a + h * np.arange(1, k + 1) for (a, _), h, k in zip(self.extent, self.h, self.n))

    @cached_property
    def full_axes(self):
        """Node coordinates per axis including the two boundary nodes."""
        return tuple(a + h * np.arange(k + 2) for (a, _), h, k in zip(self.extent, self.h, self.n))

    @cached_property
    def coords(self):
        """Interior node coordinates, shape ``(size, dim)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @cached_property
    def closure_coords(self):
        """All nodes of the closed domain, boundary included."""
        mesh = np.meshgrid(*self.full_axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @property
    def x(self):
        return self.axes[0] if self.dim == 1 else self.coords[:, 0]

    @cached_property
    def cell(self):
        """Cell volume ``prod(h)``; the uniform weight used by the energy norms."""
        return float(np.prod(self.h))

    @cached_property
    def weights(self):
        """Quadrature weights on interior nodes.

        Each axis uses ``h`` with ``3h/2`` at the two nodes next to the boundary:
        the trapezoidal rule with the boundary half-cells folded inward.  The
        weights sum to ``|O|`` and stay second order for fields vanishing on
        the boundary.
        """
        ws = []
        for h, k in zip(self.h, self.n):
            w = np.full(k, h)
            w[0] += 0.5 * h
            w[-1] += 0.5 * h
            ws.append(w)
        return ws[0] if self.dim == 1 else np.multiply.outer(ws[0], ws[1]).ravel()

    @cached_property
    def closure_weights(self):
        """Trapezoidal weights on all nodes of the closure; they sum to ``|O|``."""
        ws = []
        for h, k in zip(self.h, self.n):
            w = np.full(k + 2, h)
            w[0] = w[-1] = 0.5 * h
            ws.append(w)
        w = ws[0] if self.dim == 1 else np.multiply.outer(ws[0], ws[1]).ravel()
        return w

    @cached_property
    def C4(self):
        """``inf (R^2 - |xi|^2)`` over the closed domain."""
        return float(self.radius**2 - np.max(np.sum(self.closure_coords**2, axis=1)))

    @cached_property
    def laplacian_matrix(self):
        """Sparse 3/5-point Dirichlet Laplacian."""
        mats = []
        for h, k in zip(self.h, self.n):
            mats.append(sp.diags([np.ones(k - 1), -2.0 * np.ones(k), np.ones(k - 1)], [-1, 0, 1]) / h**2)
        if self.dim == 1:
            out = mats[0]
        else:
            out = sp.kron(mats[0], sp.identity(self.n[1])) + sp.kron(sp.identity(self.n[0]), mats[1])
        return sp.csr_matrix(out)

    @cached_property
    def _neg_lap_lu(self):
        return splu(sp.csc_matrix(-self.laplacian_matrix))

    @cached_property
    def poincare_constant(self):
        """Smallest ``C`` with ``||u||_H <= C ||u||_2`` on this grid (``1/lambda_min``)."""
        lam = sum(4.0 / h**2 * np.sin(np.pi * h / (2.0 * (b - a))) ** 2
                  for h, (a, b) in zip(self.h, self.extent))
        return float(1.0 / lam)

    def laplacian(self, u):
        u = np.asarray(u, dtype=float)
        return (self.laplacian_matrix @ u.reshape(-1, self.size).T).T.reshape(u.shape)

    def inverse_laplacian(self, u):
        """Solve ``-Delta_h v = u`` with zero boundary values."""
        u = np.asarray(u, dtype=float)
        flat = u.reshape(-1, self.size).T
        v = self._neg_lap_lu.solve(np.ascontiguousarray(flat))
        # backward error relative to ||A|| ||v|| + ||u||
        res = np.abs(-(self.laplacian_matrix @ v) - flat).max(initial=0.0)
        op_norm = sum(4.0 / h**2 for h in self.h)
        scale = op_norm * np.abs(v).max(initial=0.0) + np.abs(flat).max(initial=0.0)
        # absolute floor for subnormal data
        assert res <= 1e-12 * scale + 1e-290, "inverse Laplacian residual too large"
        return v.T.reshape(u.shape)

    def integrate(self, u):
        return np.asarray(u, dtype=float) @ self.weights

    def norm(self, u, which="L2", p=None):
        """Discrete norms: ``L1``, ``L2``, ``Lp`` (with ``p``), ``Linf``, ``H10`` and ``Hdual``."""
        u = np.asarray(u, dtype=float)
        which = which.upper() if which.lower() != "hdual" else "Hdual"
        if which == "LP":
            if p is None or not 1 <= p < np.inf:
                raise ValueError(f"invalid exponent p={p}")
            return (np.abs(u) ** p @ self.weights) ** (1.0 / p)
        if which == "L1":
            return np.abs(u) @ self.weights
        if which == "L2":
            return np.sqrt(u**2 @ self.weights)
        if which == "LINF":
            return np.abs(u).max(axis=-1)
        if which == "H10":
            return np.sqrt(np.maximum(np.sum(-u * self.laplacian(u), axis=-1) * self.cell, 0.0))
        if which == "Hdual":
            return np.sqrt(np.maximum(np.sum(u * self.inverse_laplacian(u), axis=-1) * self.cell, 0.0))
        raise ValueError(f"unknown norm {which!r}")

    def sample(self, func):
        """Evaluate ``func(x)`` (1D) or ``func(x, y)`` (2D) at the interior nodes."""
        return np.asarray(func(*self.coords.T), dtype=float)

    def field_to_csv(self, u, path_or_buf=None):
        """CSV with columns ``x[,y],value``."""
        u = np.asarray(u, dtype=float).reshape(self.size)
        cols = ["x", "y"][: self.dim] + ["value"]
        buf = io.StringIO()
        np.savetxt(buf, np.column_stack([self.coords, u]), delimiter=",",
                   header=",".join(cols), comments="", fmt="%.17g")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w") as fh:
            fh.write(text)

    def describe(self):
        return {"dim": self.dim, "extent": [list(e) for e in self.extent], "n": list(self.n),
                "h": list(self.h), "radius": self.radius}


def laplacian(grid, u):
    return grid.laplacian(u)


def inverse_laplacian(grid, u):
    return grid.inverse_laplacian(u)


def norm(grid, u, which="L2", p=None):
    return grid.norm(u, which, p)
