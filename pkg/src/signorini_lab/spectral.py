"""Even eigenmodes of the sphere Laplacian and trace expansions.

Points on the unit sphere are always passed as Cartesian unit vectors of
shape ``(n, d)``; the thin plane is ``{x_d = 0}``.  Tangential gradients
are returned in an orthonormal tangent frame (see :func:`tangent_frame`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from fractions import Fraction
from math import factorial
from typing import Optional

import numpy as np


def eigenvalue_of_homogeneity(mu, d):
    """Return ``mu * (mu + d - 2)``, the sphere eigenvalue of a mu-homogeneous harmonic."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if np.any(np.asarray(mu) < 0):
        raise ValueError("homogeneity must be nonnegative")
    return mu * (mu + d - 2)


def homogeneity_of_eigenvalue(lam, d):
    """Positive root alpha of alpha*(alpha + d - 2) = lam."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if np.any(np.asarray(lam) < 0):
        raise ValueError("eigenvalue must be nonnegative")
    b = d - 2.0
    return (np.sqrt(b * b + 4.0 * lam) - b) / 2.0


# ---------------------------------------------------------------------------
# geometry helpers


def tangent_frame(points):
    """Orthonormal tangent frame at sphere points, shape ``(n, d-1, d)``.

    d=2: the counterclockwise unit tangent.  d=3: (e_theta, e_phi) with theta
    the polar angle measured from the x_3 axis.  The d=3 frame is undefined
    at the poles.
    """
    x = np.asarray(points, dtype=float)
    n, d = x.shape
    if d == 2:
        return np.stack([-x[:, 1], x[:, 0]], axis=1)[:, None, :]
    if d == 3:
        z = x[:, 2]
        s = np.hypot(x[:, 0], x[:, 1])
        if np.any(s < 1e-14):
            raise ValueError("tangent frame undefined at the poles")
        cph, sph = x[:, 0] / s, x[:, 1] / s
        e_t = np.stack([z * cph, z * sph, -s], axis=1)
        e_p = np.stack([-sph, cph, np.zeros_like(z)], axis=1)
        return np.stack([e_t, e_p], axis=1)
    raise ValueError("tangent frames are provided for d in {2, 3}")


def tangential_from_cartesian(points, grad):
    """Tangent components of a Cartesian gradient of a homogeneous function.

    On the unit sphere grad F = grad_theta f + alpha f x, so the radial part
    is removed by projecting onto the tangent frame.
    """
    frame = tangent_frame(points)
    return np.einsum("nkd,nd->nk", frame, grad)


def angles_to_points(angles, d):
    """Map angles to unit vectors: d=2 takes theta, d=3 takes (polar, azimuth)."""
    a = np.atleast_2d(np.asarray(angles, dtype=float))
    if d == 2:
        t = a.reshape(-1)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if d == 3:
        if a.shape[1] != 2:
            raise ValueError("d=3 angles are (polar, azimuth) pairs")
        th, ph = a[:, 0], a[:, 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    raise ValueError("angles are defined for d in {2, 3}")


def points_to_angles(points):
    x = np.asarray(points, dtype=float)
    if x.shape[1] == 2:
        return np.arctan2(x[:, 1], x[:, 0])[:, None]
    return np.stack([np.arccos(np.clip(x[:, 2], -1, 1)), np.arctan2(x[:, 1], x[:, 0])], axis=1)


# ---------------------------------------------------------------------------
# quadrature


def gauss_rule(a, b, n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def graded_rule(a, b, toward="a", levels=14, order=10, ratio=0.25, max_width=0.25):
    """Composite Gauss rule on [a, b] with geometric panels toward an endpoint.

    ``toward`` is ``"a"``, ``"b"``, ``"both"`` or ``None``.  Geometric panels
    resolve algebraic endpoint singularities such as t^(-1/2) or t^(1/2);
    panels wider than ``max_width`` are split so smooth oscillatory parts of
    the integrand stay resolved.
    """
    if toward == "both":
        mid = 0.5 * (a + b)
        x1, w1 = graded_rule(a, mid, "a", levels, order, ratio, max_width)
        x2, w2 = graded_rule(mid, b, "b", levels, order, ratio, max_width)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    L = b - a
    if toward is None:
        cuts = np.array([0.0, 1.0])
    else:
        cuts = np.concatenate([[0.0], ratio ** np.arange(levels, -1, -1)])
    xs, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n_sub = max(1, int(np.ceil((hi - lo) * abs(L) / max_width)))
        edges = np.linspace(lo, hi, n_sub + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            x, w = gauss_rule(e0, e1, order)
            xs.append(x)
            ws.append(w)
    t = np.concatenate(xs)
    w = np.concatenate(ws) * L
    if toward in ("a", None):
        return a + L * t, w
    return b - L * t, w


def composite_rule(breaks, toward=None, levels=14, order=10, ratio=0.25):
    """Glue graded rules over consecutive breakpoints.

    ``toward`` lists, per interval, the grading direction.
    """
    if toward is None:
        toward = [None] * (len(breaks) - 1)
    xs, ws = [], []
    for (a, b), tw in zip(zip(breaks[:-1], breaks[1:]), toward):
        x, w = graded_rule(a, b, tw, levels, order, ratio)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes (unit vectors) and weights of a rule on the unit sphere."""

    d: int
    points: np.ndarray
    weights: np.ndarray
    mirror: Optional[np.ndarray] = None  # index of the reflected node x_d -> -x_d
    label: str = ""

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def __len__(self):
        return len(self.weights)


def band_limited_quadrature(d, K):
    """Rule exact for products of modes of homogeneity <= K.

    d=2: uniform trapezoid with 4K+16 nodes on (-pi, pi].  d=3: Gauss-Legendre
    in the polar cosine (2K+8 nodes) times a uniform azimuth (4K+16 nodes).
    """
    if d == 2:
        n = 4 * K + 16
        th = -np.pi + 2 * np.pi * np.arange(n) / n
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        w = np.full(n, 2 * np.pi / n)
        mirror = (n - np.arange(n)) % n
        return SphereQuadrature(2, pts, w, mirror, f"trapezoid-{n}")
    if d == 3:
        nz, nph = 2 * K + 8, 4 * K + 16
        z, wz = np.polynomial.legendre.leggauss(nz)
        ph = -np.pi + 2 * np.pi * np.arange(nph) / nph
        Z, PH = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z**2)
        pts = np.stack([s * np.cos(PH), s * np.sin(PH), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(nph, 2 * np.pi / nph)[None, :]).reshape(-1)
        iz, ip = np.meshgrid(np.arange(nz), np.arange(nph), indexing="ij")
        mirror = ((nz - 1 - iz) * nph + ip).reshape(-1)
        return SphereQuadrature(3, pts, w, mirror, f"gauss-{nz}x{nph}")
    raise ValueError("sampled quadrature exists only for d in {2, 3}")


def graded_quadrature(d, levels=14, order=10, ratio=0.25, phi_levels=5):
    """Rule for integrands with root singularities on the thin plane.

    Panels are graded geometrically toward the equator and, for d=3, toward
    the azimuths +-pi/2 where h_e (for e = e_1) has its point singularities;
    d=2 grades toward theta = 0 and +-pi.
    """
    if d == 2:
        br = [-np.pi, -np.pi / 2, 0.0, np.pi / 2, np.pi]
        th, w = composite_rule(br, ["a", "b", "a", "b"], levels, order, ratio)
        return SphereQuadrature(2, np.stack([np.cos(th), np.sin(th)], axis=1), w, None, "graded")
    if d == 3:
        z, wz = composite_rule([-1.0, 0.0, 1.0], ["b", "a"], levels, order, ratio)
        br = [-np.pi, -np.pi / 2, 0.0, np.pi / 2, np.pi]
        ph, wp = composite_rule(br, ["b", "a", "b", "a"], phi_levels, order, ratio)
        Z, PH = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z**2)
        pts = np.stack([s * np.cos(PH), s * np.sin(PH), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * wp[None, :]).reshape(-1)
        return SphereQuadrature(3, pts, w, None, "graded")
    raise ValueError("sampled quadrature exists only for d in {2, 3}")


# ---------------------------------------------------------------------------
# mode tables


@dataclass(frozen=True)
class Mode:
    index: int
    alpha: int
    eigenvalue: float
    order: int
    label: str


def _legendre_table(L, z, s):
    """Unnormalized associated Legendre P_l^m(z) (no Condon-Shortley sign) and d/dtheta."""
    P = np.zeros((L + 1, L + 1, len(z)))
    for m in range(L + 1):
        dfact = 1.0
        for k in range(1, 2 * m, 2):
            dfact *= k
        P[m, m] = dfact * s**m
        if m + 1 <= L:
            P[m + 1, m] = z * (2 * m + 1) * P[m, m]
        for l in range(m + 2, L + 1):
            P[l, m] = ((2 * l - 1) * z * P[l - 1, m] - (l + m - 1) * P[l - 2, m]) / (l - m)
    dP = np.zeros_like(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        for m in range(L + 1):
            for l in range(m, L + 1):
                prev = P[l - 1, m] if l - 1 >= m else 0.0
                dP[l, m] = (l * z * P[l, m] - (l + m) * prev) / s
    return P, dP


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Orthonormal sphere eigenmodes with homogeneity at most K.

    ``parity="even"`` keeps the modes even under x_d -> -x_d (the default and
    the space in which traces live); ``parity="all"`` keeps every mode, which
    is only used to count eigenfunctions.
    """

    d: int
    max_homogeneity: int
    modes: tuple
    parity: str = "even"

    @cached_property
    def alphas(self):
        return _frozen(np.array([m.alpha for m in self.modes], dtype=float))

    @cached_property
    def eigenvalues(self):
        return _frozen(np.array([m.eigenvalue for m in self.modes], dtype=float))

    @cached_property
    def orders(self):
        return _frozen(np.array([m.order for m in self.modes], dtype=int))

    @cached_property
    def _lookup(self):
        return {(m.alpha, m.order): m.index for m in self.modes}

    def __len__(self):
        return len(self.modes)

    def index_of(self, alpha, order):
        try:
            return self._lookup[(alpha, order)]
        except KeyError:
            raise KeyError(f"no mode with alpha={alpha}, order={order}") from None

    def quadrature(self):
        return band_limited_quadrature(self.d, self.max_homogeneity)

    def evaluate(self, points):
        """Mode values at sphere points, shape ``(n, n_modes)``."""
        return self._eval(points, grad=False)[0]

    def gradient(self, points):
        """Tangential gradients in the :func:`tangent_frame`, shape ``(n, n_modes, d-1)``."""
        return self._eval(points, grad=True)[1]

    def evaluate_with_gradient(self, points):
        return self._eval(points, grad=True)

    def _eval(self, points, grad):
        x = np.asarray(points, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ValueError(f"expected points of shape (n, {self.d})")
        n = len(x)
        V = np.empty((n, len(self.modes)))
        G = np.empty((n, len(self.modes), self.d - 1)) if grad else None
        if self.d == 2:
            th = np.arctan2(x[:, 1], x[:, 0])
            for j, md in enumerate(self.modes):
                k = abs(md.order)
                if k == 0:
                    V[:, j] = 1 / np.sqrt(2 * np.pi)
                    if grad:
                        G[:, j, 0] = 0.0
                elif md.order > 0:
                    V[:, j] = np.cos(k * th) / np.sqrt(np.pi)
                    if grad:
                        G[:, j, 0] = -k * np.sin(k * th) / np.sqrt(np.pi)
                else:
                    V[:, j] = np.sin(k * th) / np.sqrt(np.pi)
                    if grad:
                        G[:, j, 0] = k * np.cos(k * th) / np.sqrt(np.pi)
            return V, G
        z = np.clip(x[:, 2], -1.0, 1.0)
        s = np.hypot(x[:, 0], x[:, 1])
        ph = np.arctan2(x[:, 1], x[:, 0])
        P, dP = _legendre_table(self.max_homogeneity, z, s)
        for j, md in enumerate(self.modes):
            l, k = md.alpha, md.order
            a = abs(k)
            norm = np.sqrt((2 * l + 1) / (4 * np.pi) * float(Fraction(factorial(l - a), factorial(l + a))))
            if a == 0:
                trig, dtrig = np.ones(n), np.zeros(n)
            else:
                norm *= np.sqrt(2.0)
                if k > 0:
                    trig, dtrig = np.cos(a * ph), -a * np.sin(a * ph)
                else:
                    trig, dtrig = np.sin(a * ph), a * np.cos(a * ph)
            V[:, j] = norm * P[l, a] * trig
            if grad:
                G[:, j, 0] = norm * dP[l, a] * trig
                with np.errstate(divide="ignore", invalid="ignore"):
                    G[:, j, 1] = norm * P[l, a] * dtrig / s
        return V, G


@lru_cache(maxsize=64)
def build_mode_table(d, K, parity="even"):
    """Enumerate the orthonormal modes of homogeneity at most K.

    d=2: 1/sqrt(2 pi) and cos(k theta)/sqrt(pi) (plus sin(k theta)/sqrt(pi)
    when ``parity="all"``).  d=3: real spherical harmonics Y_lk, kept when
    l + |k| is even for the even table.
    """
    if d not in (2, 3):
        raise ValueError("sampled mode tables exist only for d in {2, 3}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    if parity not in ("even", "all"):
        raise ValueError("parity must be 'even' or 'all'")
    raw = []
    if d == 2:
        for k in range(K + 1):
            raw.append((k, k, f"cos{k}" if k else "const"))
            if parity == "all" and k > 0:
                raw.append((k, -k, f"sin{k}"))
    else:
        for l in range(K + 1):
            for k in range(-l, l + 1):
                if parity == "even" and (l + abs(k)) % 2:
                    continue
                raw.append((l, k, f"Y{l},{k}"))
    raw.sort(key=lambda t: (t[0], abs(t[1]), -t[1]))
    modes = tuple(
        Mode(j, a, float(eigenvalue_of_homogeneity(a, d)), o, lab) for j, (a, o, lab) in enumerate(raw)
    )
    return ModeTable(d, K, modes, parity)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True, eq=False)
class SampledTrace:
    quadrature: SphereQuadrature
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class TraceExpansion:
    """A trace on the unit sphere as coefficients over a :class:`ModeTable`."""

    table: ModeTable
    coefficients: np.ndarray
    samples: Optional[SampledTrace] = None
    residual: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (len(self.table),):
            raise ValueError(f"expected {len(self.table)} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def d(self):
        return self.table.d

    def norm_sq(self):
        return float(np.dot(self.coefficients, self.coefficients))

    def evaluate(self, points):
        return self.table.evaluate(points) @ self.coefficients

    def gradient(self, points):
        return np.einsum("nmk,m->nk", self.table.gradient(points), self.coefficients)

    def coefficient(self, alpha, order):
        return float(self.coefficients[self.table.index_of(alpha, order)])

    def with_coefficients(self, coefs):
        return TraceExpansion(self.table, coefs)

    def __add__(self, other):
        if other.table is not self.table and other.table.modes != self.table.modes:
            raise ValueError("mode table mismatch")
        return TraceExpansion(self.table, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, s):
        return TraceExpansion(self.table, float(s) * self.coefficients)

    __rmul__ = __mul__


def expand_trace(samples, table, quadrature=None, tol=1e-8):
    """Project sampled values onto the modes of ``table``.

    ``samples`` is a :class:`SampledTrace` or a value array on
    ``quadrature`` (default: the table's band-limited rule).  The energy not
    captured by the table is stored in ``residual``.
    """
    if isinstance(samples, SampledTrace):
        quad, vals = samples.quadrature, np.asarray(samples.values, dtype=float)
    else:
        quad = quadrature if quadrature is not None else table.quadrature()
        vals = np.asarray(samples, dtype=float)
    if quad.d != table.d:
        raise ValueError("table and quadrature dimensions differ")
    if vals.shape != (len(quad),):
        raise ValueError(f"expected {len(quad)} samples, got {vals.shape}")
    if quad.mirror is not None:
        scale = max(1.0, float(np.max(np.abs(vals)))) if len(vals) else 1.0
        if np.max(np.abs(vals - vals[quad.mirror])) > tol * scale:
            raise ValueError("trace is not even in x_d")
    V = table.evaluate(quad.points)
    coefs = V.T @ (quad.weights * vals)
    total = quad.integrate(vals**2)
    resid = total - float(np.dot(coefs, coefs))
    if resid < 0 and resid > -1e-10 * max(1.0, total):
        resid = 0.0
    return TraceExpansion(table, coefs, SampledTrace(quad, vals), resid)


def synthesize_trace(exp, quadrature=None):
    """Evaluate an expansion on a quadrature grid (default: its table's rule)."""
    quad = quadrature if quadrature is not None else exp.table.quadrature()
    if quad.d != exp.table.d:
        raise ValueError("table and quadrature dimensions differ")
    return SampledTrace(quad, exp.evaluate(quad.points))


def project_function(f, table, quadrature=None):
    """Expansion of a callable ``f(points)`` (no evenness or residual check)."""
    quad = quadrature if quadrature is not None else band_limited_quadrature(table.d, 2 * table.max_homogeneity + 8)
    vals = np.asarray(f(quad.points), dtype=float)
    coefs = table.evaluate(quad.points).T @ (quad.weights * vals)
    return TraceExpansion(table, coefs)


def rotate_azimuth(exp, beta):
    """Expansion of ``x -> c(R_beta x)`` where R_beta rotates the azimuth by beta.

    For d=2 even tables only beta in pi*Z keeps the trace even.
    """
    table = exp.table
    c = exp.coefficients
    out = np.array(c, dtype=float)
    if table.d == 2 and table.parity == "even":
        q = beta / np.pi
        if abs(q - round(q)) > 1e-12:
            raise ValueError("even d=2 traces rotate only by multiples of pi")
        for j, md in enumerate(table.modes):
            out[j] = c[j] * (-1) ** (md.order * int(round(q)))
        return TraceExpansion(table, out)
    pos = {(md.alpha, md.order): md.index for md in table.modes}
    for md in table.modes:
        k = md.order
        if k <= 0:
            continue
        ic, is_ = pos[(md.alpha, k)], pos.get((md.alpha, -k))
        a, b = c[ic], (c[is_] if is_ is not None else 0.0)
        ck, sk = np.cos(k * beta), np.sin(k * beta)
        out[ic] = a * ck + b * sk
        if is_ is not None:
            out[is_] = -a * sk + b * ck
    return TraceExpansion(table, out)


# ---------------------------------------------------------------------------
# JSON


def trace_to_dict(exp, slit=False):
    return {
        "d": exp.table.d,
        "slit": bool(slit),
        "form": "fourier",
        "modes": [
            {"alpha": md.alpha, "order": md.order, "coef": float(c)}
            for md, c in zip(exp.table.modes, exp.coefficients)
        ],
        "samples": [],
    }


def trace_from_dict(data, max_homogeneity=None):
    """Read the trace JSON layout; sampled traces are fitted by least squares.

    For ``slit=true`` (d=2) sample angles live in (0, 2 pi) and are shifted
    by -pi to the standard angle.
    """
    for key in ("d", "form"):
        if key not in data:
            raise ValueError(f"trace file lacks field '{key}'")
    d = int(data["d"])
    slit = bool(data.get("slit", False))
    if data["form"] == "fourier":
        modes = data.get("modes", [])
        K = max([int(round(m["alpha"])) for m in modes] + [0])
        if max_homogeneity is not None:
            K = max(K, int(max_homogeneity))
        table = build_mode_table(d, K)
        coefs = np.zeros(len(table))
        for m in modes:
            a = float(m["alpha"])
            if abs(a - round(a)) > 1e-12:
                raise ValueError("mode homogeneities must be integers")
            coefs[table.index_of(int(round(a)), int(m["order"]))] += float(m["coef"])
        return TraceExpansion(table, coefs)
    if data["form"] == "sampled":
        rows = data.get("samples", [])
        if not rows:
            raise ValueError("sampled trace has no samples")
        angles = np.array([np.atleast_1d(r[0]) for r in rows], dtype=float)
        vals = np.array([r[1] for r in rows], dtype=float)
        if slit and d == 2:
            angles = angles - np.pi
        pts = angles_to_points(angles, d)
        K = int(max_homogeneity) if max_homogeneity is not None else 8
        table = build_mode_table(d, K)
        V = table.evaluate(pts)
        coefs, *_ = np.linalg.lstsq(V, vals, rcond=None)
        return TraceExpansion(table, coefs)
    raise ValueError(f"unknown trace form {data['form']!r}")
