"""Grid solutions of the thin obstacle problem and their interpolation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates, spline_filter

from .datum import BoundaryDatum
from .grid import Stencil, run_psor


class NonConvergence(RuntimeError):
    """The projected iteration stopped at max_iters above tolerance."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InadmissibleDatum(ValueError):
    """The datum is not even in x_d or is negative on the thin set's boundary."""


@dataclass(eq=False)
class GridSolution:
    d: int
    h: float
    stencil: Stencil
    values: np.ndarray  # unknown nodes, in stencil order
    datum: BoundaryDatum
    info: dict = field(default_factory=dict)
    coarse: Optional["GridSolution"] = None

    # ----- grid views

    @property
    def contact_mask(self):
        """Thin-plane unknowns where the constraint is active."""
        return self.values[self.stencil.plane] <= self.contact_threshold

    @property
    def contact_threshold(self):
        return max(10.0 * self.info.get("tol", 1e-10), 1e-13)

    @property
    def residual(self):
        return self.info.get("laplace_residual")

    def half_array(self):
        """Node values on the stored half grid; outside nodes carry the ray extension of the datum."""
        st = self.stencil
        grids = np.meshgrid(*st.axes, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
        arr = self.datum.extension(X)
        arr[st.flat_index] = self.values
        return arr.reshape(st.shape)

    def full_array(self):
        """Values on the full grid [-1, 1]^d by even reflection (cached, read-only)."""
        full = getattr(self, "_full", None)
        if full is None:
            half = self.half_array()
            full = np.concatenate([np.flip(half[..., 1:], axis=-1), half], axis=-1)
            full.setflags(write=False)
            self._full = full
        return full

    def _coeffs(self):
        c = getattr(self, "_spline", None)
        if c is None:
            c = spline_filter(self.full_array(), order=3, mode="mirror")
            self._spline = c
        return c

    def interpolate(self, x, order=3):
        """Values at ball points by cubic (or linear) spline interpolation."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        idx = (x + 1.0) / self.h
        if order == 3:
            return map_coordinates(self._coeffs(), idx.T, order=3, prefilter=False, mode="mirror")
        return map_coordinates(self.full_array(), idx.T, order=order, mode="nearest")

    def sup_error(self, radius=0.5):
        """Max nodal deviation from the datum's exact solution inside B_radius."""
        if self.datum.exact is None:
            raise ValueError("datum has no exact solution")
        P = self.stencil.points
        sel = np.linalg.norm(P, axis=1) <= radius
        return float(np.max(np.abs(self.values[sel] - self.datum.exact(P[sel]))))

    # ----- serialization

    def dump(self, path_bin, path_json, spec_hash=None):
        """Flat float64 dump of the half grid (row-major) plus a JSON sidecar."""
        arr = self.half_array()
        arr.astype("<f8").tofile(path_bin)
        meta = {
            "dims": list(arr.shape), "spacing": self.h, "ordering": "row-major", "dtype": "float64-le",
            "d": self.d, "axes": [[float(a[0]), float(a[-1])] for a in self.stencil.axes],
            "half_domain": "x_d >= 0 (even reflection)", "datum": self.datum.descriptor,
            "info": self.info, "spec_hash": spec_hash,
        }
        with open(path_json, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _check_datum(datum, d, n=257):
    rng = np.random.default_rng(0)
    P = rng.standard_normal((n, d))
    P /= np.linalg.norm(P, axis=1)[:, None]
    Q = P.copy()
    Q[:, -1] *= -1
    g1, g2 = datum(P), datum(Q)
    scale = 1.0 + float(np.max(np.abs(g1)))
    if np.max(np.abs(g1 - g2)) > 1e-10 * scale:
        raise InadmissibleDatum("datum is not even in x_d")
    if d == 2:
        E = np.array([[1.0, 0.0], [-1.0, 0.0]])
    else:
        ph = np.linspace(-np.pi, np.pi, 721)
        E = np.stack([np.cos(ph), np.sin(ph), np.zeros_like(ph)], axis=1)
    if np.min(datum(E)) < -1e-12 * scale:
        raise InadmissibleDatum("datum is negative on the boundary of the thin set")


def _prolong(coarse, fine_stencil):
    """Linear interpolation of a coarse solution onto the fine unknowns."""
    return coarse.interpolate(fine_stencil.points, order=1)


def solve(datum, d=None, h=1 / 64, tol=1e-10, max_iters=200000, omega="auto", nested=True,
          coarsest=1 / 8, raise_on_failure=False):
    """Projected SOR solution with nested-iteration start (the 2h solve is kept)."""
    d = datum.d if d is None else d
    if d != datum.d:
        raise ValueError("dimension mismatch between datum and solver")
    _check_datum(datum, d)
    stencil = Stencil(d, h)
    coarse = None
    u0 = None
    if nested and stencil.n // 2 >= int(round(2 / coarsest)) and (stencil.n // 2) % 2 == 0:
        coarse = solve(datum, d, 2 * stencil.h, tol, max_iters, omega, nested, coarsest)
        u0 = _prolong(coarse, stencil)
    u, info = run_psor(stencil, datum, u0, omega, tol, max_iters)
    info["tol"] = tol
    info["unknowns"] = int(len(u))
    sol = GridSolution(d, stencil.h, stencil, u, datum, info, coarse)
    if not info["converged"] and raise_on_failure:
        raise NonConvergence(f"no convergence after {info['iterations']} sweeps "
                             f"(last change {info['last_change']:.3e})", sol)
    return sol
