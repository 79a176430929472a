"""Competitor at frequency 3/2: v = C r^(3/2) h_e + c_0 r^(3/2) u_0 + r^2 phi."""
from __future__ import annotations

import numpy as np

from ..spectral import TraceExpansion, rotate_azimuth
from ..special import ModelSolution, abs_xd_ball_integral, distributional_laplacian_pairing
from ..weiss import kappa as kappa_fn, weiss_fourier
from .base import (
    CompetitorRecipe,
    EpiReport,
    InadmissibleTrace,
    default_tol,
    embed_coefficients,
    equator_minimum,
    regular_dictionary,
)

MU = 1.5


def _pairing_vectors(dic):
    """Integrals of Laplacian(h_e) and Laplacian(u_0) against r^a f_b, for a in {3/2, 2}."""
    cached = getattr(dic, "pairings", None)
    if cached is not None:
        return cached
    vals = dic.values
    out = {}
    for a in (1.5, 2.0):
        out[("he", a)] = distributional_laplacian_pairing(ModelSolution("he", dic.d), vals, a)
        out[("u0", a)] = distributional_laplacian_pairing(ModelSolution("u0", dic.d), vals, a)
    dic.pairings = out
    return out


def build_regular(c):
    """Split c into C h_e + c_0 u_0 + phi and extend phi with homogeneity 2."""
    d = c.table.d
    K = max(c.table.max_homogeneity, 2)
    dic = regular_dictionary(d, K)
    table = dic.table
    cvec = embed_coefficients(c, table)
    scale = max(1.0, float(np.linalg.norm(cvec)))
    cmin = equator_minimum(TraceExpansion(table, cvec))
    if cmin < -1e-12 * scale:
        raise InadmissibleTrace(f"trace is negative on the equator (min {cmin:.3e})")

    if d == 2:
        lin = cvec[table.index_of(1, 1)]
        norm_lin = abs(lin)
        beta = 0.0 if lin >= 0 else np.pi
    else:
        ax, ay = cvec[table.index_of(1, 1)], cvec[table.index_of(1, -1)]
        norm_lin = float(np.hypot(ax, ay))
        beta = float(np.arctan2(ay, ax))
    degenerate = norm_lin <= 1e-14 * scale
    if degenerate:
        beta = 0.0
    cw = rotate_azimuth(TraceExpansion(table, cvec), beta).coefficients
    off = dic.offset
    i0 = off + table.index_of(0, 0)
    i1 = off + table.index_of(1, 1)
    M = dic.mass
    C = 0.0 if degenerate else float(cw[i1 - off] / M[0, i1])
    c0 = float((cw[i0 - off] - C * M[0, i0]) / M[1, i0])

    inp = np.zeros(len(dic))
    inp[off:] = cw
    A = np.zeros(len(dic))
    A[0], A[1] = C, c0
    B = inp - A
    proj = M @ B
    low = [i0, i1] + ([off + table.index_of(1, -1)] if d == 3 else [])
    leak = float(np.max(np.abs(proj[low])))
    if leak > 1e-10 * scale:
        raise ArithmeticError(f"phi keeps low-mode content {leak:.3e}")
    e = (np.cos(beta),) if d == 2 else (np.cos(beta), np.sin(beta))
    derived = {
        "e": tuple(float(t) for t in e), "C": C, "c0": c0, "kappa": 1.0 / (2 * d + 3),
        "degenerate": bool(degenerate), "low_mode_leak": leak,
        "phi_norm_sq": float(B @ M @ B), "phi_grad_sq": float(B @ dic.stiffness @ B),
    }
    return CompetitorRecipe("regular_3_2", d, None, {}, derived, dic, [(1.5, A), (2.0, B)], inp, beta)


def _step1_energy(rec, a):
    """W_{3/2} of C h_e + c_0 u_0 + r^a phi via the distributional Laplacians."""
    dic = rec.dictionary
    d = rec.d
    _, B = rec.pieces[1]
    C, c0 = rec.derived["C"], rec.derived["c0"]
    pv = _pairing_vectors(dic)
    n2 = float(B @ dic.mass @ B)
    g2 = float(B @ dic.stiffness @ B)
    w_phi = (a * a * n2 + g2) / (d + 2 * a - 2) - MU * n2
    w_u0 = -0.75 * abs_xd_ball_integral(d)
    cross = C * float(pv[("he", a)] @ B) + c0 * float(pv[("u0", a)] @ B)
    return c0 * c0 * w_u0 + w_phi - 2.0 * cross


def verify_regular(c, tol=None):
    """Check W(v) <= (1 - 1/(2d+3)) W(z), plus the bound carrying the u_0 term."""
    rec = build_regular(c)
    d = rec.d
    k = rec.derived["kappa"]
    W_z = rec.input_energy(MU, 1.5)
    W_h = rec.energy(MU)
    tol = default_tol(W_z) if tol is None else tol
    gap = W_h - (1 - k) * W_z
    c0 = rec.derived["c0"]
    step2_bound = -0.75 * k * c0 * c0 * abs_xd_ball_integral(d)
    # second route through the Laplacian pairings, and the closed Fourier form
    W_z_pair = _step1_energy(rec, 1.5)
    W_h_pair = _step1_energy(rec, 2.0)
    W_z_fourier = weiss_fourier(c, 1.5, MU).total
    # identity: gap = step2 bound + kappa/(d+2) (lambda(2) ||phi||^2 - ||grad phi||^2)
    ident = step2_bound + k / (d + 2) * (2 * d * rec.derived["phi_norm_sq"] - rec.derived["phi_grad_sq"])
    route_tol = lambda w: 1e-8 * (1 + abs(w))  # noqa: E731
    routes_ok = (
        abs(W_z - W_z_pair) <= route_tol(W_z)
        and abs(W_h - W_h_pair) <= route_tol(W_h)
        and abs(W_z - W_z_fourier) <= route_tol(W_z)
    )
    fidelity = rec.trace_error()
    thin_min = rec.thin_set_minimum()
    diag = {
        **{k_: v for k_, v in rec.derived.items() if k_ != "e"},
        "e": list(rec.derived["e"]),
        "kappa_check": kappa_fn(2.0, MU, d),
        "step2_bound": step2_bound,
        "step2_ok": bool(gap <= step2_bound + tol),
        "gap_identity": ident,
        "W_z_pairing": W_z_pair, "W_h_pairing": W_h_pair, "W_z_fourier": W_z_fourier,
        "routes_agree": bool(routes_ok),
        "trace_error": fidelity, "thin_set_min": thin_min,
    }
    passed = bool(gap <= tol and diag["step2_ok"] and routes_ok and fidelity <= 1e-10 and thin_min >= -1e-10)
    return EpiReport("regular_3_2", d, None, W_z, W_h, k, gap, passed, tol, diag)
