"""Explicit homogeneous solutions of the thin obstacle problem.

Evaluators act on ball points of shape ``(n, d)`` and return values or
Cartesian gradients; ``trace``/``trace_gradient`` restrict to the sphere.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .spectral import (
    band_limited_quadrature,
    graded_rule,
    composite_rule,
    tangential_from_cartesian,
)


# ---------------------------------------------------------------------------
# h_{2m}


def h2m_coefficients(d, m):
    """Exact coefficients C_0..C_m with C_0 = 1 of the harmonic h_{2m}."""
    if d < 2 or m < 1:
        raise ValueError("need d >= 2 and m >= 1")
    C = [Fraction(1)]
    for n in range(1, m + 1):
        num = 2 * (m - n + 1) * (d - 1 + 2 * m - 2 * n)
        C.append(-Fraction(num, 2 * n * (2 * n - 1)) * C[-1])
    return C


@dataclass(frozen=True)
class HarmonicPolynomial:
    """sum_n C_n x_d^(2n) |x'|^(2(m-n)), even in x_d and equal to 1 on the equator."""

    d: int
    m: int
    coefficients: tuple

    @property
    def homogeneity(self):
        return 2 * self.m

    def _parts(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}")
        return x, np.sum(x[:, :-1] ** 2, axis=1), x[:, -1]

    def __call__(self, x):
        _, rho2, xd = self._parts(x)
        out = np.zeros_like(xd)
        for n, c in enumerate(self.coefficients):
            out += float(c) * xd ** (2 * n) * rho2 ** (self.m - n)
        return out

    def gradient(self, x):
        x, rho2, xd = self._parts(x)
        g = np.zeros_like(x)
        for n, c in enumerate(self.coefficients):
            k = self.m - n
            c = float(c)
            if k > 0:
                g[:, :-1] += (c * xd ** (2 * n) * 2 * k * rho2 ** (k - 1))[:, None] * x[:, :-1]
            if n > 0:
                g[:, -1] += c * 2 * n * xd ** (2 * n - 1) * rho2**k
        return g

    def laplacian(self, x):
        """Pointwise Laplacian from the monomial rule (zero for a harmonic h)."""
        _, rho2, xd = self._parts(x)
        out = np.zeros_like(xd)
        d = self.d
        for n, c in enumerate(self.coefficients):
            k = self.m - n
            c = float(c)
            if k > 0:
                out += c * xd ** (2 * n) * 2 * k * (2 * k + d - 3) * rho2 ** (k - 1)
            if n > 0:
                out += c * 2 * n * (2 * n - 1) * xd ** (2 * n - 2) * rho2**k
        return out

    def trace(self, points):
        return self(points)

    def trace_gradient(self, points):
        return tangential_from_cartesian(points, self.gradient(points))

    def to_dict(self):
        return {"d": self.d, "m": self.m, "C": [str(c) for c in self.coefficients]}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["d"]), int(data["m"]), tuple(Fraction(c) for c in data["C"]))


def build_h2m(d, m):
    """The harmonic 2m-homogeneous polynomial equal to 1 on the equator."""
    return HarmonicPolynomial(d, m, tuple(h2m_coefficients(d, m)))


def h2m_norm_sq_exact(m):
    """||h_{2m}||^2 on the unit sphere of R^3, as a Fraction q with value 2*pi*q.

    On the sphere |x'|^2 = 1 - z^2 and the area element is 2*pi dz dphi/(2*pi),
    so the norm reduces to 2*pi times the integral of h(z)^2 over [-1, 1].
    """
    C = h2m_coefficients(3, m)
    # polynomial in z as a dict power -> coefficient
    poly = {}
    for n, c in enumerate(C):
        k = m - n
        # z^(2n) (1 - z^2)^k
        binom = 1
        for j in range(k + 1):
            if j > 0:
                binom = binom * (k - j + 1) // j
            p = 2 * n + 2 * j
            poly[p] = poly.get(p, Fraction(0)) + c * binom * (-1) ** j
    sq = {}
    for p, a in poly.items():
        for q, b in poly.items():
            sq[p + q] = sq.get(p + q, Fraction(0)) + a * b
    return sum((2 * a / (p + 1) for p, a in sq.items() if p % 2 == 0), Fraction(0))


# ---------------------------------------------------------------------------
# model solutions


def sector_angles(m):
    """Zeros s_i = 2 i pi/(4m-1), i = 1..2m-1, of h_{2m-1/2} in the slit angle on (0, 2 pi)."""
    return np.array([2 * i * np.pi / (4 * m - 1) for i in range(1, 2 * m)])


def slit_to_standard(vartheta):
    """Slit angle on (0, 2 pi) (cut along the negative axis) to theta in (-pi, pi)."""
    return np.asarray(vartheta) - np.pi


@dataclass(frozen=True)
class ModelSolution:
    """h_e, u_0 or the planar half-integer solution h_{2m-1/2}.

    ``he`` is Re(x'.e + i|x_d|)^(3/2); ``half_integer`` (d=2 only) is
    r^mu cos(mu theta) with mu = (4m-1)/2 and theta in (-pi, pi], whose slit
    is the contact half-line {theta = pi}.
    """

    kind: str
    d: int
    e: Optional[tuple] = None
    m: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("he", "u0", "half_integer"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.kind == "he":
            e = np.zeros(self.d - 1)
            e[0] = 1.0
            if self.e is not None:
                e = np.asarray(self.e, dtype=float)
                if len(e) == self.d:
                    if abs(e[-1]) > 1e-14:
                        raise ValueError("direction e must lie in the thin plane")
                    e = e[:-1]
                if len(e) != self.d - 1 or np.linalg.norm(e) == 0:
                    raise ValueError("invalid direction e")
                e = e / np.linalg.norm(e)
            object.__setattr__(self, "e", tuple(float(t) for t in e))
        if self.kind == "half_integer":
            if self.d != 2:
                raise ValueError("half-integer solutions are planar")
            if self.m is None or self.m < 1:
                raise ValueError("half_integer needs m >= 1")

    @property
    def homogeneity(self):
        if self.kind == "half_integer":
            return (4 * self.m - 1) / 2
        return 1.5

    def _x(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}")
        return x

    def __call__(self, x):
        x = self._x(x)
        if self.kind == "u0":
            return np.abs(x[:, -1]) ** 1.5
        if self.kind == "he":
            w = x[:, :-1] @ np.asarray(self.e) + 1j * np.abs(x[:, -1])
            return np.real(w**1.5)
        mu = self.homogeneity
        r = np.hypot(x[:, 0], x[:, 1])
        th = np.arctan2(x[:, 1], x[:, 0])
        return r**mu * np.cos(mu * th)

    def radical_form(self, x):
        """(2 x'.e - rho) sqrt(rho + x'.e) with rho = sqrt((x'.e)^2 + x_d^2).

        This equals sqrt(2) times the primary form.
        """
        if self.kind != "he":
            raise ValueError("radical form exists only for h_e")
        x = self._x(x)
        t = x[:, :-1] @ np.asarray(self.e)
        rho = np.hypot(t, x[:, -1])
        return (2 * t - rho) * np.sqrt(np.maximum(rho + t, 0.0))

    def gradient(self, x):
        """Cartesian gradient; on the thin plane the upper one-sided value is used."""
        x = self._x(x)
        g = np.zeros_like(x)
        sgn = np.where(x[:, -1] >= 0, 1.0, -1.0)
        if self.kind == "u0":
            g[:, -1] = 1.5 * np.abs(x[:, -1]) ** 0.5 * sgn
            return g
        if self.kind == "he":
            e = np.asarray(self.e)
            w = x[:, :-1] @ e + 1j * np.abs(x[:, -1])
            root = 1.5 * np.sqrt(w)
            g[:, :-1] = np.real(root)[:, None] * e[None, :]
            g[:, -1] = -np.imag(root) * sgn
            return g
        mu = self.homogeneity
        r = np.hypot(x[:, 0], x[:, 1])
        th = np.arctan2(x[:, 1], x[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            fr = mu * r ** (mu - 1) * np.cos(mu * th)
            ft = -mu * r ** (mu - 1) * np.sin(mu * th)
        g[:, 0] = fr * np.cos(th) - ft * np.sin(th)
        g[:, 1] = fr * np.sin(th) + ft * np.cos(th)
        g[r == 0] = 0.0
        return g

    def trace(self, points):
        return self(points)

    def trace_gradient(self, points):
        return tangential_from_cartesian(points, self.gradient(points))


def evaluate_model(sol, x):
    """Value of a model solution (or h_{2m}) at one point or an array of points."""
    x = np.asarray(x, dtype=float)
    out = sol(x)
    return float(out[0]) if x.ndim == 1 else out


# ---------------------------------------------------------------------------
# norms and pairings


def l2_sphere_norm_sq(f, d, quadrature=None):
    """Integral of f^2 over the unit sphere for a callable ``f(points)``."""
    if quadrature is None:
        quadrature = band_limited_quadrature(d, 24)
    vals = np.asarray(f(quadrature.points), dtype=float)
    return quadrature.integrate(vals**2)


def _trace_callable(phi):
    if hasattr(phi, "evaluate"):
        return phi.evaluate
    return phi


def _wsum(w, vals):
    # weighted sum over nodes; vector-valued integrands keep their trailing axis
    out = np.tensordot(w, np.asarray(vals, dtype=float), axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def _equator_integral(g, d, e, weight_exp, levels=30, order=12):
    """Integral over the equator sphere S^{d-2} of g(theta') w(theta'.e).

    Returns the integral of g(theta') (theta'.e)_-^(1/2) when ``weight_exp``
    is 0.5.  d=2 is a two-point sum.
    """
    if d == 2:
        pts = np.array([[1.0, 0.0], [-1.0, 0.0]])
        t = pts[:, 0] * e[0]
        w = np.where(t < 0, np.abs(t) ** weight_exp, 0.0)
        return _wsum(w, g(pts))
    if d == 3:
        base = np.arctan2(e[1], e[0])
        # theta'.e = cos(psi) is negative on psi in (pi/2, 3 pi/2)
        psi, w = graded_rule(np.pi / 2, 3 * np.pi / 2, "both", levels, order)
        ang = psi + base
        pts = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
        return _wsum(w * np.abs(np.cos(psi)) ** weight_exp, g(pts))
    raise ValueError("equator integrals are provided for d in {2, 3}")


def _abs_xd_weighted_integral(g, d, levels=52, order=12):
    """Integral over the unit sphere of g |theta_d|^(-1/2)."""
    if d == 2:
        # offsets t from the singular angles keep |sin| accurate near +-pi
        t, w = graded_rule(0.0, np.pi / 2, "a", levels, order)
        total = 0.0
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                pts = np.stack([sx * np.cos(t), sy * np.sin(t)], axis=1)
                total = total + _wsum(w * np.sin(t) ** -0.5, g(pts))
        return total
    if d == 3:
        z, wz = composite_rule([-1.0, 0.0, 1.0], ["b", "a"], levels, order)
        # azimuths graded toward +-pi/2, where h_{e_1} has its point singularities
        br = [-np.pi, -np.pi / 2, 0.0, np.pi / 2, np.pi]
        ph, wp = composite_rule(br, ["b", "a", "b", "a"], 12, order)
        Z, PH = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z**2)
        pts = np.stack([s * np.cos(PH), s * np.sin(PH), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * wp[None, :]).reshape(-1)
        return _wsum(w * np.abs(pts[:, 2]) ** -0.5, g(pts))
    raise ValueError("provided for d in {2, 3}")


def distributional_laplacian_pairing(sol, phi, alpha):
    """Integral over B_1 of psi * Laplacian(sol) for psi = r^alpha phi(theta).

    For u_0 the Laplacian is (3/4)|x_d|^(-1/2); for h_e it is the measure
    -3 (x'.e)_-^(1/2) on the thin plane.  Both reduce to sphere integrals
    times 1/(d + alpha - 1/2).
    """
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    g = _trace_callable(phi)
    d = sol.d
    factor = 1.0 / (d + alpha - 0.5)
    if sol.kind == "u0":
        return factor * 0.75 * _abs_xd_weighted_integral(g, d)
    if sol.kind == "he":
        e = np.asarray(sol.e)
        return -3.0 * factor * _equator_integral(g, d, e, 0.5)
    raise ValueError("pairing is defined for he and u0")


def abs_xd_ball_integral(d):
    """Integral of |x_d| over the unit ball, via the sphere: (1/(d+1)) times the sphere integral of |theta_d|."""
    if d == 2:
        return 4.0 / 3.0
    if d == 3:
        return np.pi / 2
    from math import gamma, pi

    # sphere integral of |theta_d| equals 2 |S^{d-2}|/(d-1)
    s_dm2 = 2 * pi ** ((d - 1) / 2) / gamma((d - 1) / 2)
    return 2 * s_dm2 / (d - 1) / (d + 1)
