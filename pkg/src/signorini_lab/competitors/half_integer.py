"""Planar competitor at the half-integer frequencies 2m - 1/2.

Angles: theta in (-pi, pi] with the contact half-line at theta = pi; the
slit angle is vartheta = theta + pi in (0, 2 pi).  The solution
h = r^mu cos(mu theta), mu = 2m - 1/2, vanishes on the 4m - 1 rays
vartheta = s_i = 2 i pi/(4m - 1).  The sector pieces f_j are h cut to

    S_j = (s_{j-1}, s_j) u (2 pi - s_j, 2 pi - s_{j-1}),  j = 1..2m,

so S_{2m} is the single sector around theta = 0 and S_1 touches the slit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..spectral import SphereQuadrature, TraceExpansion, build_mode_table, graded_rule
from ..weiss import FunctionDictionary, kappa as kappa_fn, piecewise_weiss
from .base import CompetitorRecipe, ConstructionError, EpiReport, InadmissibleTrace, default_tol


def half_integer_mu(m):
    return (4 * m - 1) / 2


def sector_index(theta, m):
    """Sector j in 1..2m containing the standard angle theta."""
    vt = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi)
    idx = np.floor(vt / (2 * np.pi / (4 * m - 1))).astype(int) + 1
    idx = np.clip(idx, 1, 4 * m - 1)
    return np.where(idx <= 2 * m, idx, 4 * m - idx)


def kink_angles(m):
    """Standard angles s_i - pi of the nodal rays, i = 1..4m-2, plus the slit pi."""
    s = 2 * np.arange(1, 4 * m - 1) * np.pi / (4 * m - 1)
    return np.concatenate([s - np.pi, [np.pi]])


def _theta(points):
    return np.arctan2(points[:, 1], points[:, 0])


def sector_values(points, m):
    """f_1..f_{2m} at circle points, shape (n, 2m)."""
    th = _theta(points)
    mu = half_integer_mu(m)
    j = sector_index(th, m)
    out = np.zeros((len(th), 2 * m))
    out[np.arange(len(th)), j - 1] = np.cos(mu * th)
    return out


def sector_gradients(points, m):
    th = _theta(points)
    mu = half_integer_mu(m)
    j = sector_index(th, m)
    out = np.zeros((len(th), 2 * m, 1))
    out[np.arange(len(th)), j - 1, 0] = -mu * np.sin(mu * th)
    return out


def _slit_cos(nus):
    nus = np.asarray(nus, dtype=float)

    def val(points):
        return np.cos(np.outer(_theta(points), nus)) / np.sqrt(np.pi)

    def grad(points):
        return (-nus * np.sin(np.outer(_theta(points), nus)) / np.sqrt(np.pi))[:, :, None]

    return val, grad


def slit_quadrature(m, order=12, max_width=0.2):
    """Gauss panels between consecutive nodal rays, so sector pieces integrate exactly."""
    br = np.concatenate([[-np.pi], kink_angles(m)])
    th, w = [], []
    for a, b in zip(br[:-1], br[1:]):
        x, ww = graded_rule(a, b, None, order=order, max_width=max_width)
        th.append(x)
        w.append(ww)
    th = np.concatenate(th)
    return SphereQuadrature(2, np.stack([np.cos(th), np.sin(th)], axis=1), np.concatenate(w), None, "slit")


@lru_cache(maxsize=32)
def sector_dictionary(m, K, nus=()):
    """[f_1..f_{2m}, cos(nu theta)/sqrt(pi) for nu in nus, even integer modes up to K]."""
    table = build_mode_table(2, K)
    sv = (lambda P: sector_values(P, m))
    sg = (lambda P: sector_gradients(P, m))
    cv, cg = _slit_cos(nus)
    names = [f"f_{j}" for j in range(1, 2 * m + 1)] + [f"slit_cos_{nu:g}" for nu in nus] + [md.label for md in table.modes]
    order = 12 if K + max(nus, default=0) < 24 else 20
    dic = FunctionDictionary(
        2, names,
        [sv, cv, lambda P: table.evaluate(P)],
        [sg, cg, lambda P: table.gradient(P)],
        slit_quadrature(m, order=order),
    )
    dic.table = table
    dic.m = m
    dic.nus = tuple(nus)
    dic.n_sector = 2 * m
    dic.offset = 2 * m + len(nus)
    return dic


@dataclass(frozen=True, eq=False)
class SlitTrace:
    """Trace on the slit circle: sector amplitudes, half-integer cosines, integer modes.

    c = sum_j A_j f_j + sum_nu B_nu cos(nu theta)/sqrt(pi) + sum_k b_k e_k.
    """

    m: int
    sector: np.ndarray
    modes: TraceExpansion
    slit_modes: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.sector, dtype=float)
        if s.shape != (2 * self.m,):
            raise ValueError(f"expected {2 * self.m} sector amplitudes")
        object.__setattr__(self, "sector", s)
        if self.modes.table.d != 2 or self.modes.table.parity != "even":
            raise ValueError("slit traces are planar and even")
        for nu in self.slit_modes:
            if abs(2 * nu - round(2 * nu)) > 1e-12 or abs(nu - round(nu)) < 1e-12:
                raise ValueError("slit modes carry half-integer homogeneities")

    @property
    def d(self):
        return 2

    def dictionary(self):
        return sector_dictionary(self.m, max(self.modes.table.max_homogeneity, 2 * self.m),
                                 tuple(sorted(self.slit_modes)))

    def coefficient_vector(self, dic=None):
        dic = dic or self.dictionary()
        out = np.zeros(len(dic))
        out[: 2 * self.m] = self.sector
        for i, nu in enumerate(dic.nus):
            out[2 * self.m + i] = self.slit_modes.get(nu, 0.0)
        for md, c in zip(self.modes.table.modes, self.modes.coefficients):
            out[dic.offset + dic.table.index_of(md.alpha, md.order)] = c
        return out

    def evaluate(self, points):
        dic = self.dictionary()
        return dic.values(np.atleast_2d(points)) @ self.coefficient_vector(dic)

    def to_dict(self):
        mu = half_integer_mu(self.m)
        modes = [{"alpha": mu, "order": j + 1, "coef": float(a)} for j, a in enumerate(self.sector)]
        modes += [{"alpha": float(nu), "order": 0, "coef": float(b)} for nu, b in sorted(self.slit_modes.items())]
        modes += [{"alpha": md.alpha, "order": md.order, "coef": float(c)}
                  for md, c in zip(self.modes.table.modes, self.modes.coefficients)]
        return {"d": 2, "slit": True, "form": "fourier", "m": self.m, "modes": modes, "samples": []}

    @classmethod
    def from_dict(cls, data, m=None):
        """Half-integer entries with order j >= 1 are sector amplitudes; order 0 a slit cosine."""
        if int(data.get("d", 2)) != 2:
            raise ValueError("slit traces are planar")
        if data.get("form", "fourier") != "fourier":
            raise ValueError("slit traces use the fourier form")
        entries = data.get("modes", [])
        if m is None:
            m = data.get("m")
        if m is None:
            halves = [e for e in entries if abs(e["alpha"] - round(e["alpha"])) > 1e-12 and int(e["order"]) > 0]
            if not halves:
                raise ValueError("cannot infer m from the trace file")
            m = int(round((2 * halves[0]["alpha"] + 1) / 4))
        m = int(m)
        mu = half_integer_mu(m)
        sector = np.zeros(2 * m)
        slit = {}
        ints = []
        for e in entries:
            a, o, c = float(e["alpha"]), int(e["order"]), float(e["coef"])
            if abs(a - round(a)) < 1e-12:
                ints.append((int(round(a)), o, c))
            elif o > 0:
                if abs(a - mu) > 1e-12 or o > 2 * m:
                    raise ValueError(f"sector entry alpha={a}, order={o} does not match m={m}")
                sector[o - 1] += c
            else:
                slit[a] = slit.get(a, 0.0) + c
        K = max([k for k, _, _ in ints] + [2 * m])
        table = build_mode_table(2, K)
        coefs = np.zeros(len(table))
        for k, o, c in ints:
            coefs[table.index_of(k, o)] += c
        return cls(m, sector, TraceExpansion(table, coefs), slit)


def half_integer_trace(m, K=None):
    """Trace of h_{2m-1/2}: all sector amplitudes equal to one."""
    K = 2 * m if K is None else K
    table = build_mode_table(2, K)
    return SlitTrace(m, np.ones(2 * m), TraceExpansion(table, np.zeros(len(table))))


def _low_projection_matrix(dic):
    """Rows: low integer modes cos(k theta), k < 2m; columns: dictionary functions."""
    low = [dic.offset + i for i, md in enumerate(dic.table.modes) if md.alpha < 2 * dic.m]
    return dic.mass[low, :]


def build_half_integer(c, m=None, delta=None):
    """Sector amplitudes a_j from P_L(c) = sum a_j P_L(f_j); c~ = c - sum a_j f_j extended with alpha = 2m."""
    m = c.m if m is None else m
    if m != c.m:
        raise ValueError("trace and m disagree")
    dic = c.dictionary()
    cvec = c.coefficient_vector(dic)
    mu = half_integer_mu(m)
    nodes = np.array([[1.0, 0.0], [-1.0, 0.0]])
    thin = dic.values(nodes) @ cvec
    scale = max(1.0, float(np.linalg.norm(cvec)))
    if thin.min() < -1e-12 * scale:
        raise InadmissibleTrace(f"trace is negative on the thin set (min {thin.min():.3e})")
    hvec = np.zeros(len(dic))
    hvec[: 2 * m] = 1.0
    diff = cvec - hvec
    dist = float(np.sqrt(max(diff @ dic.mass @ diff, 0.0)))
    PL = _low_projection_matrix(dic)
    A = PL[:, : 2 * m]
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise ArithmeticError("sector projection matrix is singular")
    a = np.linalg.solve(A, PL @ cvec)
    if a[-1] <= 0:
        raise ConstructionError(f"a_{2 * m} = {a[-1]:.4g} <= 0: delta too large")
    if delta is not None and dist > delta * (1 + 1e-12):
        raise ConstructionError(f"||c - h|| = {dist:.4g} exceeds delta = {delta:.4g}")
    sec = np.zeros(len(dic))
    sec[: 2 * m] = a
    ctil = cvec - sec
    alpha = 2.0 * m
    derived = {
        "a": [float(x) for x in a], "alpha": alpha, "mu": mu, "kappa": kappa_fn(alpha, mu, 2),
        "sector_angles": [float(s) for s in 2 * np.arange(1, 2 * m) * np.pi / (4 * m - 1)],
        "distance_to_h": dist, "low_projection_residual": float(np.max(np.abs(PL @ ctil))),
        "projection_condition": float(cond),
    }
    return CompetitorRecipe("half_integer_2d", 2, m, {"delta": delta}, derived, dic,
                            [(mu, sec), (alpha, ctil)], cvec)


def _jumps(dic, coef, m):
    """[F'](theta_k) = F'(theta_k+) - F'(theta_k-) for F = sum_j coef_j f_j at the kinks."""
    th = kink_angles(m)
    h = 1e-9
    pts_p = np.stack([np.cos(th + h), np.sin(th + h)], axis=1)
    pts_m = np.stack([np.cos(th - h), np.sin(th - h)], axis=1)
    gp = sector_gradients(pts_p, m)[:, :, 0] @ coef[: 2 * m]
    gm = sector_gradients(pts_m, m)[:, :, 0] @ coef[: 2 * m]
    return th, gp - gm


def cross_term(dic, sec, ctil, a_hom, mu):
    """2 (int grad(r^mu F).grad(r^a c~) - mu int F c~) from the kink jumps of F."""
    th, jump = _jumps(dic, sec, dic.m)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    return float(-2.0 / (a_hom + mu) * np.sum(jump * (dic.values(pts) @ ctil)))


def verify_half_integer(c, m=None, delta=None, tol=None):
    """W(h) <= (1 - 1/(8m-1)) W(z) with both sides by quadrature and by the kink route."""
    rec = build_half_integer(c, m, delta)
    m = rec.m
    dic = rec.dictionary
    mu = rec.derived["mu"]
    alpha = rec.derived["alpha"]
    k = rec.derived["kappa"]
    (_, sec), (_, ctil) = rec.pieces
    W_z = rec.input_energy(mu, mu)
    W_h = rec.energy(mu)
    tol = default_tol(W_z) if tol is None else tol
    gap = W_h - (1 - k) * W_z
    Ms, Ss = dic.mass, dic.stiffness
    w_sec = piecewise_weiss([(mu, sec)], Ms, Ss, mu, 2)
    cross_mu = cross_term(dic, sec, ctil, mu, mu)
    cross_al = cross_term(dic, sec, ctil, alpha, mu)
    W_z_kink = w_sec + piecewise_weiss([(mu, ctil)], Ms, Ss, mu, 2) + cross_mu
    W_h_kink = w_sec + piecewise_weiss([(alpha, ctil)], Ms, Ss, mu, 2) + cross_al
    cancel = cross_al - (1 - k) * cross_mu
    routes = abs(W_z - W_z_kink) <= 1e-8 * (1 + abs(W_z)) and abs(W_h - W_h_kink) <= 1e-8 * (1 + abs(W_h))
    fid = rec.trace_error()
    thin = rec.thin_set_minimum()
    diag = {
        **rec.derived, "sector_energy": w_sec, "cross_mu": cross_mu, "cross_alpha": cross_al,
        "cancellation": cancel, "cancellation_ok": bool(abs(cancel) <= 1e-12 * (1 + abs(cross_mu))),
        "W_z_kink": W_z_kink, "W_h_kink": W_h_kink, "routes_agree": bool(routes),
        "trace_error": fid, "thin_set_min": thin,
    }
    passed = bool(gap <= tol and routes and diag["cancellation_ok"] and fid <= 1e-10 and thin >= -1e-10)
    return EpiReport("half_integer_2d", 2, m, W_z, W_h, k, gap, passed, tol, diag)


def sector_energy_nullity(b, m):
    """W_{2m-1/2} of sum_j b_j f_j extended with homogeneity 2m - 1/2 (zero for every b)."""
    dic = sector_dictionary(m, 2 * m)
    coef = np.zeros(len(dic))
    coef[: 2 * m] = b
    mu = half_integer_mu(m)
    return piecewise_weiss([(mu, coef)], dic.mass, dic.stiffness, mu, 2)
