"""Projected SOR for the thin obstacle problem on a masked square grid.

Only the half domain x_d >= 0 is stored.  Nodes on the thin plane see their
missing lower neighbour through the even reflection, so their upper
coefficient doubles; after each relaxation they are projected onto u >= 0.
Neighbours outside the unit ball are replaced by the datum at the point where
the grid line crosses the sphere (Shortley-Weller weights).
"""
from __future__ import annotations

import numba
import numpy as np


class Stencil:
    """Sparse 2d-point stencil of the unknown nodes.

    ``nb[k, q]`` is the unknown index of neighbour q (or -1 for a sphere
    crossing, whose datum contribution sits in ``rhs``); ``w`` holds the
    weights and ``diag`` their sums.
    """

    def __init__(self, d, h):
        n = int(round(2.0 / h))
        if n % 2 or abs(n * h - 2.0) > 1e-9:
            raise ValueError("2/h must be an even integer")
        self.d, self.h, self.n = d, 2.0 / n, n
        self.shape = (n + 1,) * (d - 1) + (n // 2 + 1,)
        axes = [np.linspace(-1.0, 1.0, n + 1)] * (d - 1) + [np.linspace(0.0, 1.0, n // 2 + 1)]
        self.axes = axes
        grids = np.meshgrid(*axes, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
        inside = np.sum(X**2, axis=1) < 1.0 - 1e-12
        self.inside = inside.reshape(self.shape)
        self.node_of = np.full(X.shape[0], -1, dtype=np.int64)
        ids = np.flatnonzero(inside)
        self.node_of[ids] = np.arange(len(ids))
        self.flat_index = ids
        self.points = X[ids]
        self.plane = self.points[:, -1] < 0.5 * self.h
        multi = np.array(np.unravel_index(ids, self.shape)).T
        self.multi = multi
        self.color = (np.sum(multi, axis=1) % 2).astype(np.int8)

    def assemble(self, datum):
        """Weights and datum contributions for the boundary function ``datum``."""
        d, h = self.d, self.h
        P = self.points
        N = len(P)
        nb = np.full((N, 2 * d), -1, dtype=np.int64)
        w = np.zeros((N, 2 * d))
        rhs = np.zeros(N)
        strides = np.array([int(np.prod(self.shape[a + 1:])) for a in range(d)])
        r2 = np.sum(P**2, axis=1)
        for a in range(d):
            tgt, dist = [], []
            for sgn in (1, -1):
                ia = self.multi[:, a] + sgn
                if a == d - 1 and sgn == -1:
                    ia = np.where(ia < 0, 1, ia)  # even reflection across the thin plane
                ok = (ia >= 0) & (ia < self.shape[a])
                flat = self.flat_index + (ia - self.multi[:, a]) * strides[a]
                tg = np.where(ok, self.node_of[np.where(ok, flat, 0)], -1)
                # distance to the sphere along the direction sgn * e_a
                xa = P[:, a]
                t = -sgn * xa + np.sqrt(np.maximum(xa * xa - r2 + 1.0, 0.0))
                t = np.where(tg >= 0, h, np.clip(t, 1e-14, h))
                tgt.append(tg)
                dist.append(t)
            hp, hm = dist
            for q, sgn in enumerate((1, -1)):
                hh = dist[q]
                ww = 2.0 / (hh * (hp + hm))
                col = 2 * a + q
                nb[:, col] = tgt[q]
                w[:, col] = ww
                miss = tgt[q] < 0
                if miss.any():
                    B = P[miss].copy()
                    B[:, a] += sgn * hh[miss]
                    B /= np.linalg.norm(B, axis=1)[:, None]
                    rhs[miss] += ww[miss] * np.asarray(datum(B), dtype=float)
        diag = np.sum(w, axis=1)
        return nb, w, rhs, diag


@numba.njit(cache=True)
def _psor(u, nb, w, rhs, diag, plane, order, omega, tol, max_iters, blowup):
    n_nb = nb.shape[1]
    change = np.inf
    it = 0
    while it < max_iters:
        change = 0.0
        for p in range(order.shape[0]):
            k = order[p]
            s = rhs[k]
            for q in range(n_nb):
                j = nb[k, q]
                if j >= 0:
                    s += w[k, q] * u[j]
            new = u[k] + omega * (s / diag[k] - u[k])
            if plane[k] and new < 0.0:
                new = 0.0
            c = abs(new - u[k])
            if c > change:
                change = c
            u[k] = new
        it += 1
        if not np.isfinite(change) or change > blowup:
            return it, change, False
        if change <= tol:
            break
    return it, change, True


@numba.njit(cache=True)
def _residuals(u, nb, w, rhs, diag, plane, h):
    """(max Laplace residual off the plane, max complementarity defect on it)."""
    lap_max = 0.0
    comp_max = 0.0
    for k in range(u.shape[0]):
        s = rhs[k] - diag[k] * u[k]
        for q in range(nb.shape[1]):
            j = nb[k, q]
            if j >= 0:
                s += w[k, q] * u[j]
        if plane[k]:
            # -h/2 Lap_h u approximates the outward flux -d_d u(x', 0+)
            flux = -0.5 * h * s
            c = abs(min(u[k], flux))
            if c > comp_max:
                comp_max = c
        else:
            if abs(s) * h * h > lap_max:
                lap_max = abs(s) * h * h
    return lap_max, comp_max


def optimal_omega(d, h):
    """SOR parameter from the Jacobi radius of the unit ball."""
    lam1 = 5.783185962946784 if d == 2 else np.pi**2
    mu = 1.0 - lam1 * h * h / (2 * d)
    return 2.0 / (1.0 + np.sqrt(max(1.0 - mu * mu, 0.0)))


def run_psor(stencil, datum, u0=None, omega="auto", tol=1e-10, max_iters=200000):
    """Relax to the projected fixed point; returns (u, info)."""
    nb, w, rhs, diag = stencil.assemble(datum)
    order = np.concatenate([np.flatnonzero(stencil.color == 0), np.flatnonzero(stencil.color == 1)]).astype(np.int64)
    u = np.zeros(len(diag)) if u0 is None else np.array(u0, dtype=float)
    u[stencil.plane] = np.maximum(u[stencil.plane], 0.0)
    om = optimal_omega(stencil.d, stencil.h) if omega == "auto" else float(omega)
    start = u.copy()
    blowup = 1e3 * (1.0 + float(np.max(np.abs(rhs / diag))) + float(np.max(np.abs(u), initial=0.0)))
    it, change, ok = _psor(u, nb, w, rhs, diag, stencil.plane, order, om, tol, max_iters, blowup)
    fallback = False
    if not ok:
        u = start
        fallback = True
        om = 1.0
        it, change, ok = _psor(u, nb, w, rhs, diag, stencil.plane, order, om, tol, max_iters, blowup)
    lap, comp = _residuals(u, nb, w, rhs, diag, stencil.plane, stencil.h)
    info = {
        "iterations": int(it), "last_change": float(change), "converged": bool(ok and change <= tol),
        "omega": float(om), "omega_fallback": fallback, "laplace_residual": float(lap),
        "complementarity": float(comp),
    }
    return u, info
