"""Competitors at the integer frequencies 2m.

Above 2m (singular case) the high modes phi are pushed to a homogeneity
alpha > 2m; below 2m (negative case) the low modes Q are pulled down to
alpha < 2m.  In both cases a multiple M of h_{2m} keeps the thin set
nonnegative.
"""
from __future__ import annotations

import numpy as np

from ..spectral import TraceExpansion, build_mode_table, eigenvalue_of_homogeneity
from ..special import h2m_norm_sq_exact, l2_sphere_norm_sq, build_h2m
from ..weiss import kappa as kappa_fn, piecewise_weiss, weiss_fourier
from .base import (
    CompetitorRecipe,
    ConstructionError,
    EpiReport,
    InadmissibleTrace,
    default_tol,
    embed_coefficients,
    equator_minimum,
    h2m_coefficients_in_table,
    mode_dictionary,
)


def gamma_exponent(d):
    """gamma = (d-2)/d."""
    return (d - 2) / d


def h2m_norm_sq(d, m):
    if d == 3:
        return float(2 * np.pi * h2m_norm_sq_exact(m))
    return float(l2_sphere_norm_sq(build_h2m(d, m), d))


def singular_constants(d, m):
    """(C_1, C_2) of the singular-case energy estimate."""
    c1 = (4 * m + d) * h2m_norm_sq(d, m)
    lam1 = eigenvalue_of_homogeneity(2 * m + 1, d)
    c2 = (lam1 - eigenvalue_of_homogeneity(2 * m + 0.5, d)) / lam1
    return c1, c2


def _prepare(c, m, case):
    d = c.table.d
    if c.table.parity != "even":
        raise ValueError("traces must be even in x_d")
    K = max(c.table.max_homogeneity, 2 * m + 1)
    dic = mode_dictionary(d, K)
    table = dic.table
    cvec = embed_coefficients(c, table)
    scale = max(1.0, float(np.linalg.norm(cvec)))
    cmin = equator_minimum(TraceExpansion(table, cvec))
    if cmin < -1e-12 * scale:
        raise InadmissibleTrace(f"trace is negative on the equator (min {cmin:.3e})")
    hvec = np.array(h2m_coefficients_in_table(d, m, K))
    return d, dic, table, cvec, hvec


def _spectral_energy(pieces, table, mu):
    """Route through the exact Gram matrices (identity, diag(lambda))."""
    return piecewise_weiss(pieces, np.eye(len(table)), np.diag(table.eigenvalues), mu, table.d)


def _common_checks(rec, table):
    fid = rec.trace_error()
    thin = rec.thin_set_minimum()
    W_spec = _spectral_energy(rec.pieces, table, float(2 * rec.m))
    return fid, thin, W_spec


def build_singular(c, m, eps):
    """P + phi split at 2m; phi re-extended with kappa_{alpha,2m} = eps ||grad phi||^(2 gamma)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d, dic, table, cvec, hvec = _prepare(c, m, "singular_2m")
    high = table.alphas > 2 * m
    P = np.where(high, 0.0, cvec)
    phi = np.where(high, cvec, 0.0)
    M = max(0.0, -equator_minimum(TraceExpansion(table, P)))
    g = gamma_exponent(d)
    grad_sq = float(np.sum(table.eigenvalues * phi**2))
    kbar = eps * grad_sq**g if grad_sq > 0 else 0.0
    if kbar >= 1:
        raise ConstructionError("kappa >= 1; eps is too large for this trace")
    alpha = (2 * m + kbar * (2 * m + d - 2)) / (1 - kbar)
    if alpha > 2 * m + 0.5 + 1e-14:
        raise ConstructionError(f"alpha={alpha:.6g} exceeds 2m+1/2; lower eps")
    pieces = [(2.0 * m, P + M * hvec), (alpha, phi - M * hvec)]
    derived = {
        "M": M, "alpha": alpha, "kappa": kbar, "gamma": g, "eps": eps,
        "split_index": int(np.argmax(high)) if high.any() else len(table),
        "phi_grad_sq": grad_sq, "phi_norm_sq": float(phi @ phi), "P_norm_sq": float(P @ P),
        "kappa_check": kappa_fn(alpha, 2 * m, d) if alpha > 2 * m else 0.0,
    }
    return CompetitorRecipe("singular_2m", d, m, {"eps": eps}, derived, dic, pieces, cvec)


def verify_singular(c, m, eps, tol=None):
    """W(h) <= W(z) (1 - eps |W(z)|^gamma), and the sharper bound with -(C_2 eps/2)||grad phi||^(2+2 gamma)."""
    rec = build_singular(c, m, eps)
    d, mu = rec.d, 2.0 * m
    table = rec.dictionary.table
    W_z = rec.input_energy(mu, mu)
    W_h = rec.energy(mu)
    tol = default_tol(W_z) if tol is None else tol
    g = rec.derived["gamma"]
    factor = eps * abs(W_z) ** g
    gap = W_h - (1 - factor) * W_z
    c1, c2 = singular_constants(d, m)
    grad_sq = rec.derived["phi_grad_sq"]
    improved = -(c2 * eps / 2) * grad_sq ** (1 + g)
    # the energy estimate behind the improved bound carries C_2/(d + 2 alpha - 2), not C_2
    c2_eff = c2 / (d + 2 * rec.derived["alpha"] - 2)
    improved_eff = -(c2_eff * eps / 2) * grad_sq ** (1 + g)
    fid, thin, W_h_spec = _common_checks(rec, table)
    W_z_four = weiss_fourier(TraceExpansion(table, rec.input_coefs), mu, mu).total
    routes = abs(W_h - W_h_spec) <= 1e-8 * (1 + abs(W_h)) and abs(W_z - W_z_four) <= 1e-8 * (1 + abs(W_z))
    M = rec.derived["M"]
    c3_ratio = M**2 / grad_sq ** (1 - g) if grad_sq > 0 else (0.0 if M == 0 else np.inf)
    diag = {
        **rec.derived, "C1": c1, "C2": c2, "trivial": bool(W_z <= 0),
        "improved_bound_literal": improved, "improved_literal_ok": bool(gap <= improved + tol),
        "C2_effective": c2_eff, "improved_bound": improved_eff, "improved_ok": bool(gap <= improved_eff + tol),
        "C3_ratio": c3_ratio, "W_h_spectral": W_h_spec, "W_z_fourier": W_z_four,
        "routes_agree": bool(routes), "trace_error": fid, "thin_set_min": thin,
    }
    passed = bool(gap <= tol and diag["improved_ok"] and routes and fid <= 1e-10 and thin >= -1e-10)
    return EpiReport("singular_2m", d, m, W_z, W_h, factor, gap, passed, tol, diag)


def negative_constants(d, m):
    """(C_1, C_2) of the negative-case estimate: low-mode count and lambda(2m-1/2) - lambda(2m-1)."""
    n_low = int(np.sum(build_mode_table(d, 2 * m, parity="all").alphas < 2 * m))
    c2 = eigenvalue_of_homogeneity(2 * m - 0.5, d) - eigenvalue_of_homogeneity(2 * m - 1, d)
    return n_low, c2


def build_negative(c, m, eps):
    """Low modes Q + M h_{2m} re-extended with homogeneity alpha = (2m - eps(2m+d-2))/(1+eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    d, dic, table, cvec, hvec = _prepare(c, m, "negative_2m")
    alpha = (2 * m - eps * (2 * m + d - 2)) / (1 + eps)
    if not 2 * m - 1 < alpha < 2 * m:
        raise ConstructionError(f"alpha={alpha:.6g} leaves (2m-1, 2m); lower eps")
    low = table.alphas < 2 * m
    Q = np.where(low, cvec, 0.0)
    rest = np.where(low, 0.0, cvec)
    M = max(0.0, -equator_minimum(TraceExpansion(table, Q))) if low.any() else 0.0
    pieces = [(alpha, Q + M * hvec), (2.0 * m, rest - M * hvec)]
    derived = {
        "M": M, "alpha": alpha, "eps": eps, "kappa_check": -kappa_fn(alpha, 2 * m, d),
        "split_index": int(np.sum(low)), "Q_norm_sq": float(Q @ Q),
        "at_norm_sq": float(np.sum(cvec[table.alphas == 2 * m] ** 2)),
    }
    return CompetitorRecipe("negative_2m", d, m, {"eps": eps}, derived, dic, pieces, cvec)


def verify_negative(c, m, eps, tol=None):
    """W(h) <= (1 + eps) W(z) for the constructed h."""
    rec = build_negative(c, m, eps)
    d, mu = rec.d, 2.0 * m
    table = rec.dictionary.table
    W_z = rec.input_energy(mu, mu)
    W_h = rec.energy(mu)
    tol = default_tol(W_z) if tol is None else tol
    gap = W_h - (1 + eps) * W_z
    c1, c2 = negative_constants(d, m)
    M, alpha = rec.derived["M"], rec.derived["alpha"]
    bound = M**2 * eps / (d + 2 * alpha - 2) * (
        h2m_norm_sq(d, m) * (2 * m + alpha + d - 2) ** 2 * eps - c2 / c1
    )
    fid, thin, W_h_spec = _common_checks(rec, table)
    W_z_four = weiss_fourier(TraceExpansion(table, rec.input_coefs), mu, mu).total
    routes = abs(W_h - W_h_spec) <= 1e-8 * (1 + abs(W_h)) and abs(W_z - W_z_four) <= 1e-8 * (1 + abs(W_z))
    q2 = rec.derived["Q_norm_sq"]
    diag = {
        **rec.derived, "C1": c1, "C2": c2, "energy_bound": bound,
        "cs_ratio": M**2 / q2 if q2 > 0 else 0.0, "cs_ok": bool(M**2 <= c1 * q2 * (1 + 1e-12) + 1e-300),
        "W_h_spectral": W_h_spec, "W_z_fourier": W_z_four, "routes_agree": bool(routes),
        "trace_error": fid, "thin_set_min": thin,
    }
    passed = bool(gap <= tol and routes and diag["cs_ok"] and fid <= 1e-10 and thin >= -1e-10)
    return EpiReport("negative_2m", d, m, W_z, W_h, -eps, gap, passed, tol, diag)
