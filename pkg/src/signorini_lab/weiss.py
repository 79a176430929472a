"""Weiss boundary-adjusted energies of homogeneous extensions.

For F = r^alpha f(theta) on the unit ball,

    W_mu(F) = int_B |grad F|^2 - mu int_S F^2
            = (alpha^2 I_0 + I_1)/(d + 2 alpha - 2) - mu I_0,

with I_0 = int_S f^2 and I_1 = int_S |grad_theta f|^2.  The Fourier form
expands the same quantity over an orthonormal eigenbasis; the quadrature
form samples f and its tangential gradient directly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    eigenvalue_of_homogeneity,
    graded_quadrature,
    tangent_frame,
    tangential_from_cartesian,
)


def kappa(alpha, mu, d):
    """kappa_{alpha,mu} = (alpha - mu)/(alpha + mu + d - 2)."""
    return (alpha - mu) / (alpha + mu + d - 2)


@dataclass(frozen=True, eq=False)
class WeissReport:
    mu: float
    alpha: float
    total: float
    contributions: np.ndarray
    kappa: float
    alphas: np.ndarray = field(default=None)
    eigenvalues: np.ndarray = field(default=None)
    coefficients: np.ndarray = field(default=None)

    def to_dict(self):
        rows = [
            {"j": j, "alpha_j": float(a), "lambda_j": float(l), "coef": float(c), "contribution": float(w)}
            for j, (a, l, c, w) in enumerate(zip(self.alphas, self.eigenvalues, self.coefficients, self.contributions))
        ]
        return {"mu": self.mu, "alpha": self.alpha, "total": self.total, "kappa": self.kappa, "modes": rows}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "alpha_j", "lambda_j", "coef", "contribution"])
        for j, (a, l, c, x) in enumerate(zip(self.alphas, self.eigenvalues, self.coefficients, self.contributions)):
            w.writerow([j, f"{a:.17g}", f"{l:.17g}", f"{c:.17g}", f"{x:.17g}"])
        return buf.getvalue()


def _check_alpha(alpha, d):
    if d + 2 * alpha - 2 <= 0:
        raise ValueError(f"alpha={alpha} gives a divergent radial integral in d={d}")


def weiss_fourier(exp, alpha, mu):
    """Closed-form W_mu of the alpha-homogeneous extension of ``exp``."""
    d = exp.table.d
    _check_alpha(alpha, d)
    lam = exp.table.eigenvalues
    c = exp.coefficients
    contrib = c**2 * ((alpha**2 + lam) / (d + 2 * alpha - 2) - mu)
    return WeissReport(
        float(mu), float(alpha), float(np.sum(contrib)), contrib, kappa(alpha, mu, d),
        exp.table.alphas, lam, np.array(c),
    )


def weiss_identity_gap(exp, alpha, mu, rtol=1e-12):
    """kappa/(d+2 alpha-2) * sum (lambda(alpha) - lambda_j) c_j^2.

    The value is checked against W_mu(r^alpha c) - (1 - kappa) W_mu(r^mu c).
    """
    d = exp.table.d
    _check_alpha(alpha, d)
    _check_alpha(mu, d)
    k = kappa(alpha, mu, d)
    lam = exp.table.eigenvalues
    c2 = exp.coefficients**2
    lhs = k / (d + 2 * alpha - 2) * float(np.sum((eigenvalue_of_homogeneity(alpha, d) - lam) * c2))
    rhs = weiss_fourier(exp, alpha, mu).total - (1 - k) * weiss_fourier(exp, mu, mu).total
    scale = float(np.sum(c2 * (1 + lam + alpha**2 + abs(mu))))
    if abs(lhs - rhs) > rtol * max(scale, 1e-300):
        raise ArithmeticError(f"identity mismatch: {lhs!r} vs {rhs!r}")
    return lhs


def mumut_check(exp, mu, t):
    """(W_mu(r^(mu+t) c), W_mu(r^mu c)) under ||grad c||^2 = lambda(mu+t) ||c||^2."""
    d = exp.table.d
    if 2 * mu + d - 2 <= 0:
        raise ValueError("need 2 mu + d - 2 > 0")
    n2 = exp.norm_sq()
    a = mu + t
    grad2 = a * (a + d - 2) * n2
    if d + 2 * a - 2 == 0:
        first = 0.0  # a pure constant-in-r profile; limit of the formula
    else:
        first = (a * a * n2 + grad2) / (d + 2 * a - 2) - mu * n2
    second = (mu * mu * n2 + grad2) / (d + 2 * mu - 2) - mu * n2
    return first, second


# ---------------------------------------------------------------------------
# quadrature oracle


class HomogeneousExtension:
    """The alpha-homogeneous extension r^alpha c(x/r) of a trace expansion."""

    def __init__(self, trace, alpha):
        self.trace_exp = trace
        self.homogeneity = float(alpha)
        self.d = trace.table.d

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        nz = r > 0
        out[nz] = r[nz] ** self.homogeneity * self.trace_exp.evaluate(x[nz] / r[nz, None])
        return out

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        g = np.zeros_like(x)
        nz = r > 0
        th = x[nz] / r[nz, None]
        a = self.homogeneity
        f = self.trace_exp.evaluate(th)
        gt = self.trace_exp.gradient(th)
        frame = tangent_frame(th)
        g[nz] = (r[nz] ** (a - 1))[:, None] * (a * f[:, None] * th + np.einsum("nk,nkd->nd", gt, frame))
        return g

    def trace(self, points):
        return self.trace_exp.evaluate(points)

    def trace_gradient(self, points):
        return self.trace_exp.gradient(points)


def _tangential_gradient(f, points, step=1e-6):
    if hasattr(f, "trace_gradient"):
        return np.asarray(f.trace_gradient(points))
    if hasattr(f, "gradient"):
        return tangential_from_cartesian(points, f.gradient(points))
    # centered differences along great circles
    frame = tangent_frame(points)
    out = np.empty((len(points), frame.shape[1]))
    for k in range(frame.shape[1]):
        t = frame[:, k, :]
        p = np.cos(step) * points + np.sin(step) * t
        m = np.cos(step) * points - np.sin(step) * t
        out[:, k] = (f(p) - f(m)) / (2 * step)
    return out


def weiss_quadrature(f, mu, d, alpha=None, quadrature=None, homog_rtol=1e-6):
    """Independent quadrature evaluation of W_mu for an alpha-homogeneous ``f``.

    ``f`` is a callable on ball points; alpha defaults to ``f.homogeneity``.
    """
    if alpha is None:
        alpha = getattr(f, "homogeneity", None)
        if alpha is None:
            raise ValueError("homogeneity of f is unknown")
    _check_alpha(alpha, d)
    q = quadrature if quadrature is not None else graded_quadrature(d)
    pts = q.points
    vals = np.asarray(f(pts), dtype=float)
    # radial consistency at r = 1/2
    sub = pts[:: max(1, len(pts) // 512)]
    v1 = np.asarray(f(sub), dtype=float)
    v2 = np.asarray(f(0.5 * sub), dtype=float)
    scale = max(float(np.max(np.abs(v1))), 1e-300)
    if np.max(np.abs(v2 - 0.5**alpha * v1)) > homog_rtol * scale:
        raise ValueError(f"function is not {alpha}-homogeneous")
    grad = _tangential_gradient(f, pts)
    I0 = q.integrate(vals**2)
    I1 = q.integrate(np.sum(grad**2, axis=1))
    return (alpha**2 * I0 + I1) / (d + 2 * alpha - 2) - mu * I0


# ---------------------------------------------------------------------------
# sums of homogeneous pieces


class FunctionDictionary:
    """Sphere functions sampled once on a quadrature rule.

    Stores the mass matrix <f_a, f_b> and the stiffness matrix
    <grad f_a, grad f_b> so that energies of sums of homogeneous pieces
    become quadratic forms.
    """

    def __init__(self, d, names, value_fns, grad_fns, quadrature):
        self.d = d
        self.names = list(names)
        self.value_fns = list(value_fns)
        self.grad_fns = list(grad_fns)
        self.quadrature = quadrature
        pts, w = quadrature.points, quadrature.weights
        V = self.values(pts)
        G = self.gradients(pts)
        self.mass = V.T @ (w[:, None] * V)
        self.stiffness = np.einsum("nak,nbk,n->ab", G, G, w)
        self.node_values = V

    def __len__(self):
        return len(self.names)

    def values(self, points):
        cols = [np.asarray(fn(points), dtype=float).reshape(len(points), -1) for fn in self.value_fns]
        return np.concatenate(cols, axis=1)

    def gradients(self, points):
        cols = []
        for fn in self.grad_fns:
            g = np.asarray(fn(points), dtype=float)
            if g.ndim == 2:
                g = g[:, None, :]
            cols.append(g)
        return np.concatenate(cols, axis=1)


def piecewise_weiss(pieces, mass, stiffness, mu, d):
    """W_mu of sum_P r^(a_P) f_P with f_P = sum_b coef_P[b] f_b.

    ``pieces`` is a list of (a_P, coef_P) over a :class:`FunctionDictionary`.
    """
    total = 0.0
    trace = np.zeros(mass.shape[0])
    for aP, cP in pieces:
        trace = trace + cP
        for aQ, cQ in pieces:
            denom = aP + aQ + d - 2
            if denom <= 0:
                raise ValueError("divergent radial integral")
            total += (aP * aQ * (cP @ mass @ cQ) + cP @ stiffness @ cQ) / denom
    return float(total - mu * (trace @ mass @ trace))
