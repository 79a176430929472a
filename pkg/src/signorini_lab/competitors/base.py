"""Shared pieces of the competitor constructions: recipes, reports, dictionaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from ..spectral import (
    band_limited_quadrature,
    build_mode_table,
    graded_quadrature,
    TraceExpansion,
)
from ..special import ModelSolution, build_h2m
from ..weiss import FunctionDictionary, piecewise_weiss


def default_tol(w_z):
    return 1e-8 * (1.0 + abs(w_z))


@dataclass(eq=False)
class CompetitorRecipe:
    """A competitor written as a sum of homogeneous pieces over a dictionary.

    ``pieces`` holds (homogeneity, coefficient vector) pairs; the competitor is
    sum_P r^(a_P) f_P.  ``rotation`` is the azimuth beta of the working
    frame: the competitor at y equals the working-frame competitor at R_beta^-1 y.
    """

    case: str
    d: int
    m: Optional[int]
    params: dict
    derived: dict
    dictionary: FunctionDictionary
    pieces: list
    input_coefs: np.ndarray
    rotation: float = 0.0

    def _to_working(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.rotation == 0.0:
            return x
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        y = x.copy()
        y[:, 0] = c * x[:, 0] + s * x[:, 1]
        y[:, 1] = -s * x[:, 0] + c * x[:, 1]
        return y

    def __call__(self, x):
        """Competitor value at ball points (original frame)."""
        y = self._to_working(x)
        r = np.linalg.norm(y, axis=1)
        out = np.zeros(len(y))
        nz = r > 0
        V = self.dictionary.values(y[nz] / r[nz, None])
        for a, coef in self.pieces:
            out[nz] += r[nz] ** a * (V @ coef)
        return out

    def trace(self, points):
        V = self.dictionary.values(self._to_working(points))
        return V @ sum(coef for _, coef in self.pieces)

    def energy(self, mu):
        return piecewise_weiss(self.pieces, self.dictionary.mass, self.dictionary.stiffness, mu, self.d)

    def input_energy(self, mu, homogeneity):
        return piecewise_weiss([(homogeneity, self.input_coefs)], self.dictionary.mass,
                               self.dictionary.stiffness, mu, self.d)

    def trace_error(self):
        """Max deviation between sum of pieces and the input on the quadrature nodes."""
        V = self.dictionary.node_values
        total = sum(coef for _, coef in self.pieces)
        return float(np.max(np.abs(V @ (total - self.input_coefs))))

    def thin_set_minimum(self, n_radii=40, n_angles=512):
        """Minimum of the competitor over a grid of the thin ball {x_d = 0, |x| <= 1}."""
        pts = equator_points(self.d, n_angles)
        V = self.dictionary.values(pts)
        radii = np.unique(np.concatenate([np.linspace(0.0, 1.0, n_radii)[1:], np.geomspace(1e-6, 1.0, n_radii)]))
        vals = np.zeros((len(radii), len(pts)))
        for a, coef in self.pieces:
            vals += np.outer(radii**a, V @ coef)
        return float(vals.min())


@dataclass(eq=False)
class EpiReport:
    """Outcome of one epiperimetric check: gap = W(h) - (1 - factor) W(z)."""

    case: str
    d: int
    m: Optional[int]
    W_z: float
    W_h: float
    factor: float
    gap: float
    passed: bool
    tol: float
    diagnostics: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_dict(self):
        diag = {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in self.diagnostics.items()}
        return {
            "case": self.case, "d": self.d, "m": self.m, "W_z": float(self.W_z), "W_h": float(self.W_h),
            "factor": float(self.factor), "gap": float(self.gap), "pass": bool(self.passed),
            "tol": float(self.tol), "seed": self.seed, "diagnostics": diag,
        }

    def csv_row(self):
        return [self.seed, self.case, self.d, self.m, self.W_z, self.W_h, self.factor, self.gap, self.passed]


CSV_HEADER = ["seed", "case", "d", "m", "W(z)", "W(h)", "factor", "gap", "pass"]


class InadmissibleTrace(ValueError):
    """The trace (or its extension) is negative somewhere on the thin set."""


class ConstructionError(ValueError):
    """A competitor parameter falls outside its admissible window."""


# ---------------------------------------------------------------------------
# equator sampling


def equator_points(d, n=4096):
    if d == 2:
        return np.array([[1.0, 0.0], [-1.0, 0.0]])
    if d == 3:
        ph = -np.pi + 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(ph), np.sin(ph), np.zeros(n)], axis=1)
    raise ValueError("equator sampling is provided for d in {2, 3}")


@lru_cache(maxsize=32)
def _equator_values(d, K, n):
    table = build_mode_table(d, K)
    return table.evaluate(equator_points(d, n))


@lru_cache(maxsize=32)
def _equator_trig_map(K):
    """Matrix taking d=3 mode coefficients to (a_0, a_1, b_1, ..., a_K, b_K) on the equator."""
    n = 4 * K + 8
    F = np.fft.rfft(_equator_values(3, K, n), axis=0) / n
    # rows of F are indexed by frequency; phi starts at -pi, so undo the (-1)^k phase
    sign = (-1.0) ** np.arange(K + 1)
    T = np.zeros((2 * K + 1, F.shape[1]))
    T[0] = F[0].real
    for k in range(1, K + 1):
        T[2 * k - 1] = 2 * sign[k] * F[k].real
        T[2 * k] = -2 * sign[k] * F[k].imag
    return T


def equator_minimum(exp, n=4096, polish=True):
    """Minimum of a trace expansion on the equator (grid plus Newton polish)."""
    d = exp.table.d
    n = 2048 if d == 2 and n == 4096 else n
    vals = _equator_values(d, exp.table.max_homogeneity, n) @ exp.coefficients
    k = int(np.argmin(vals))
    best = float(vals[k])
    if d == 2 or not polish:
        return best
    K = exp.table.max_homogeneity
    t = _equator_trig_map(K) @ exp.coefficients
    ks = np.arange(1, K + 1)
    a, b = t[1::2], t[2::2]

    def derivs(ph):
        c, s = np.cos(ks * ph), np.sin(ks * ph)
        f = t[0] + a @ c + b @ s
        return f, (ks * b) @ c - (ks * a) @ s, -(ks**2 * a) @ c - (ks**2 * b) @ s

    phi = -np.pi + 2 * np.pi * k / n
    for _ in range(4):
        _, g1, g2 = derivs(phi)
        if g2 <= 0:
            break
        step = -g1 / g2
        if abs(step) > 2 * np.pi / n:
            break
        phi += step
    return min(best, float(derivs(phi)[0]))


# ---------------------------------------------------------------------------
# dictionaries



def _table_block(table):
    return (lambda P: table.evaluate(P)), (lambda P: table.gradient(P))


@lru_cache(maxsize=16)
def regular_dictionary(d, K):
    """[h_e (e = e_1), u_0, even modes up to K] on the graded rule."""
    table = build_mode_table(d, K)
    he = ModelSolution("he", d)
    u0 = ModelSolution("u0", d)
    tv, tg = _table_block(table)
    names = ["h_e", "u_0"] + [m.label for m in table.modes]
    dic = FunctionDictionary(
        d, names,
        [he.trace, u0.trace, tv],
        [he.trace_gradient, u0.trace_gradient, tg],
        graded_quadrature(d),
    )
    dic.table = table
    dic.offset = 2
    return dic


@lru_cache(maxsize=16)
def mode_dictionary(d, K):
    """Even modes up to K on the band-limited rule."""
    table = build_mode_table(d, K)
    tv, tg = _table_block(table)
    dic = FunctionDictionary(d, [m.label for m in table.modes], [tv], [tg], band_limited_quadrature(d, K + 2))
    dic.table = table
    dic.offset = 0
    return dic


@lru_cache(maxsize=16)
def h2m_coefficients_in_table(d, m, K):
    """Coefficients of the trace of h_{2m} over the even table of order K (K >= 2m)."""
    table = build_mode_table(d, K)
    q = band_limited_quadrature(d, K + 2 * m)
    h = build_h2m(d, m)
    vals = h.trace(q.points)
    coefs = table.evaluate(q.points).T @ (q.weights * vals)
    resid = q.integrate(vals**2) - float(coefs @ coefs)
    if abs(resid) > 1e-10 * max(1.0, q.integrate(vals**2)):
        raise ArithmeticError("h_2m trace is not captured by the mode table")
    coefs.setflags(write=False)
    return coefs


def embed_coefficients(exp, table):
    """Copy an expansion's coefficients into a (larger) table by (alpha, order)."""
    if exp.table.d != table.d:
        raise ValueError("dimension mismatch")
    if exp.table.max_homogeneity == table.max_homogeneity and exp.table.parity == table.parity:
        return np.array(exp.coefficients, dtype=float)
    out = np.zeros(len(table))
    for md, c in zip(exp.table.modes, exp.coefficients):
        if md.alpha > table.max_homogeneity:
            if c != 0.0:
                raise ValueError("trace has modes above the working table")
            continue
        out[table.index_of(md.alpha, md.order)] = c
    return out


def as_expansion(coefs, table):
    return TraceExpansion(table, coefs)
