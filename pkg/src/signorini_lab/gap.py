"""Explicit frequency-gap constants around 3/2 and the integers 2m."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .spectral import build_mode_table
from .special import build_h2m, h2m_norm_sq_exact, l2_sphere_norm_sq


def _lam(mu, d):
    mu = Fraction(mu)
    return mu * (mu + d - 2)


def count_low_modes(d, m):
    """Number of sphere eigenfunctions (all parities) with homogeneity below 2m.

    Harmonic polynomials of degree k in d variables span
    C(k+d-1, d-1) - C(k+d-3, d-1) dimensions; the sum over k < 2m telescopes.
    """
    if d < 2 or m < 1:
        raise ValueError("need d >= 2 and m >= 1")
    n = comb(2 * m - 1 + d - 1, d - 1) + comb(2 * m - 2 + d - 1, d - 1)
    if d in (2, 3):
        table = build_mode_table(d, 2 * m, parity="all")
        direct = int(np.sum(table.alphas < 2 * m))
        if direct != n:
            raise ArithmeticError(f"mode count mismatch: {direct} vs {n}")
    return n


def certify_positive_gap(d, m, eps, gamma):
    """Smallest t > 0 with (1 - eps t^gamma)(1 + t/(4m+d-2)) = 1."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    A = 4 * m + d - 2
    if gamma == 0:
        return eps * A / (1 - eps)

    def f(t):
        return (1 - eps * t**gamma) * (1 + t / A) - 1

    from scipy.optimize import brentq

    if f(1.0) <= 0:
        raise ArithmeticError("no root in (0, 1]")
    # f < 0 near zero, where -eps t^gamma dominates t/A
    lo = 1e-3 * (eps * A) ** (1 / (1 - gamma))
    lo = min(lo, 0.5)
    while f(lo) >= 0:
        lo *= 1e-3
    t = brentq(f, lo, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    # the root we want is the first sign change; scan the bracket for an earlier one
    grid = np.geomspace(lo, t, 200)
    vals = f(grid)
    idx = np.flatnonzero(vals[:-1] * vals[1:] < 0)
    if len(idx) and grid[idx[0] + 1] < t * (1 - 1e-9):
        t = brentq(f, grid[idx[0]], grid[idx[0] + 1], xtol=1e-15)
    return float(t)


def regular_gap(d):
    """t with (1 - 1/(2d+3))(1 + t/(d+1)) = 1; equal to 1/2 in every dimension."""
    if d < 2:
        raise ValueError("need d >= 2")
    k = Fraction(1, 2 * d + 3)
    t = (d + 1) * (1 / (1 - k) - 1)
    if t != Fraction(1, 2):
        raise ArithmeticError(f"regular gap {t} differs from 1/2")
    return float(t)


@dataclass
class GapCertificate:
    d: int
    m: int
    C1: int
    C2: Fraction
    norm_sq: float
    epsilon: float
    c_minus: float
    c_plus: float
    gamma: float
    regular_gap: float
    eps_singular: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "d": self.d, "m": self.m, "C1": self.C1, "C2": f"{self.C2.numerator}/{self.C2.denominator}",
            "norm_sq": self.norm_sq, "epsilon": self.epsilon, "c_minus": self.c_minus,
            "c_plus": self.c_plus, "gamma": self.gamma, "regular_gap": self.regular_gap,
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def h2m_norm_sq_value(d, m):
    """(value, note) for ||h_{2m}||^2 on the unit sphere."""
    if d == 3:
        q = h2m_norm_sq_exact(m)
        return float(2 * np.pi * q), f"norm_sq = 2 pi * {q} (exact polynomial integral)"
    return float(l2_sphere_norm_sq(build_h2m(d, m), d)), "norm_sq by band-limited quadrature"


def negative_epsilon(d, m):
    """eps = C_2/(C_1 ||h_{2m}||^2 (4m+d)^2) of the negative-energy competitor."""
    c2 = _lam(Fraction(4 * m - 1, 2), d) - _lam(2 * m - 1, d)
    return float(c2) / (count_low_modes(d, m) * h2m_norm_sq_value(d, m)[0] * (4 * m + d) ** 2)


def certify_negative_gap(d, m, eps_singular=None):
    """Assemble C_1, C_2, ||h_{2m}||^2, eps and c_m^-; c_m^+ from the singular-case eps."""
    if d < 2 or m < 1:
        raise ValueError("need d >= 2 and m >= 1")
    notes = []
    c1 = count_low_modes(d, m)
    notes.append(f"C1 = {c1}: eigenfunctions with homogeneity < {2 * m}")
    c2 = _lam(Fraction(4 * m - 1, 2), d) - _lam(2 * m - 1, d)
    notes.append(f"C2 = lambda({2 * m}-1/2) - lambda({2 * m - 1}) = {c2}")
    norm_sq, how = h2m_norm_sq_value(d, m)
    notes.append(how)
    eps = float(c2) / (c1 * norm_sq * (4 * m + d) ** 2)
    notes.append(f"epsilon = C2/(C1 norm_sq {4 * m + d}^2)")
    c_minus = (4 * m + d - 2) * eps / (1 + eps)
    notes.append(f"c_minus = {4 * m + d - 2} eps/(1 + eps)")
    gamma = (d - 2) / d
    if eps_singular is None:
        if d in (2, 3):
            from .competitors.fuzz import calibrate_singular_eps

            eps_singular = calibrate_singular_eps(d, m)["eps"]
            notes.append("c_plus conditional on calibrated eps (corpus seed 0, 300 traces)")
        else:
            eps_singular = None
    else:
        notes.append("c_plus conditional on supplied eps")
    if eps_singular is None:
        c_plus = float("nan")
        notes.append("c_plus unavailable: no calibrated eps for this dimension")
    else:
        c_plus = certify_positive_gap(d, m, eps_singular, gamma)
        notes.append(f"eps_singular = {eps_singular!r}")
    return GapCertificate(d, m, c1, c2, norm_sq, eps, c_minus, c_plus, gamma, regular_gap(d),
                          eps_singular if eps_singular is not None else float("nan"), notes)
