"""Frequency, Weiss energy, free boundary and decay diagnostics of grid solutions.

H(r) = int_{dB_r(x0)} u^2,  D(r) = int_{B_r(x0)} |grad u|^2,  N = r D/H,
W_lam(r) = D/r^(d-2+2 lam) - lam H/r^(d-1+2 lam).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..spectral import graded_rule


def _sphere_rule(d, n_theta=720, n_polar=48, n_azimuth=96):
    """Unit-sphere nodes and weights: 720-point circle, or a 48 x 96 Gauss product grid."""
    if d == 2:
        th = -np.pi + 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n_theta, 2 * np.pi / n_theta)
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    ph = -np.pi + 2 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    Z, PH = np.meshgrid(z, ph, indexing="ij")
    s = np.sqrt(1 - Z**2)
    pts = np.stack([s * np.cos(PH), s * np.sin(PH), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(n_azimuth, 2 * np.pi / n_azimuth)[None, :]).reshape(-1)
    return pts, w


def boundary_integrals(sol, x0, r, rule=None):
    """(H(r), D(r)) from sphere samples of u and its radial derivative.

    D uses int_{B_r} |grad u|^2 = int_{dB_r} u d_r u, valid because u is
    harmonic off the contact set and u vanishes where the Laplacian charges.
    """
    pts, w = rule if rule is not None else _sphere_rule(sol.d)
    d = sol.d
    dr = 0.25 * sol.h
    x0 = np.asarray(x0, dtype=float)
    P = x0 + r * pts
    u = sol.interpolate(P)
    up = sol.interpolate(x0 + (r + dr) * pts)
    um = sol.interpolate(x0 + (r - dr) * pts)
    ur = (up - um) / (2 * dr)
    area = r ** (d - 1)
    return area * float(w @ u**2), area * float(w @ (u * ur))


def _cell_fraction(centers, x0, r, h, sub=8):
    """Fraction of each grid cell (given by centre) inside B_r(x0), by subsampling."""
    d = centers.shape[1]
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    grid = np.stack(np.meshgrid(*([offs] * d), indexing="ij"), axis=-1).reshape(-1, d) * h
    out = np.empty(len(centers))
    for i0 in range(0, len(centers), 4096):
        c = centers[i0:i0 + 4096]
        pts = c[:, None, :] + grid[None, :, :]
        out[i0:i0 + 4096] = np.mean(np.sum((pts - x0) ** 2, axis=2) <= r * r, axis=1)
    return out


def grid_energy(sol, x0, r):
    """D(r) by midpoint quadrature of the discrete gradient over grid cells."""
    arr = sol.full_array()
    h = sol.h
    d = sol.d
    x0 = np.asarray(x0, dtype=float)
    lo = np.floor((x0 - r + 1.0) / h).astype(int) - 1
    hi = np.ceil((x0 + r + 1.0) / h).astype(int) + 1
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.array(arr.shape) - 1)
    sl = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
    A = arr[sl]
    # cell-centred gradient: average of the edge differences
    grads = []
    for a in range(d):
        diff = np.diff(A, axis=a) / h
        for b in range(d):
            if b != a:
                diff = 0.5 * (diff[(slice(None),) * b + (slice(0, -1),)] + diff[(slice(None),) * b + (slice(1, None),)])
        grads.append(diff)
    g2 = sum(g**2 for g in grads)
    centers = np.stack(np.meshgrid(*[(-1.0 + (np.arange(l, hh) + 0.5) * h) for l, hh in zip(lo, hi)],
                                   indexing="ij"), axis=-1).reshape(-1, d)
    dist = np.linalg.norm(centers - x0, axis=1)
    frac = np.where(dist <= r - 0.75 * h * np.sqrt(d), 1.0, 0.0)
    edge = (dist > r - 0.75 * h * np.sqrt(d)) & (dist < r + 0.75 * h * np.sqrt(d))
    frac[edge] = _cell_fraction(centers[edge], x0, r, h, sub=8 if d == 2 else 4)
    return float(np.sum(g2.reshape(-1) * frac) * h**d)


@dataclass
class FrequencyProfile:
    center: np.ndarray
    lam: float
    radii: np.ndarray
    H: np.ndarray
    D: np.ndarray
    N: np.ndarray
    W: np.ndarray
    d: int
    D_grid: np.ndarray = None
    tau_mono: float = 0.0
    snapshots: np.ndarray = None
    snapshot_points: np.ndarray = None
    monotonicity: dict = field(default_factory=dict)

    def scaled_H(self, lam=None):
        lam = self.lam if lam is None else lam
        return self.H / self.radii ** (self.d - 1 + 2 * lam)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r", "H", "D", "N", "W_lambda"])
        for row in zip(self.radii, self.H, self.D, self.N, self.W):
            wr.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()


def _nondecreasing(radii, vals, tau):
    """Largest drop of vals as r increases; passes when the drop is within tau."""
    order = np.argsort(radii)
    v = np.asarray(vals)[order]
    drops = v[:-1] - v[1:]
    worst = float(np.max(drops)) if len(drops) else 0.0
    return {"max_drop": worst, "tau": float(tau), "ok": bool(worst <= tau)}


def radius_ladder(r_max=0.5, r_min=0.05, n=12):
    """Geometric ladder of radii, largest first."""
    return np.geomspace(r_max, r_min, n)


def _raw_profile(sol, x0, lam, radii, route):
    rule = _sphere_rule(sol.d)
    H, D = np.empty(len(radii)), np.empty(len(radii))
    for i, r in enumerate(radii):
        H[i], D[i] = boundary_integrals(sol, x0, r, rule)
        if route == "grid":
            D[i] = grid_energy(sol, x0, r)
    d = sol.d
    N = radii * D / H
    W = D / radii ** (d - 2 + 2 * lam) - lam * H / radii ** (d - 1 + 2 * lam)
    return H, D, N, W


def frequency_profile(sol, x0=None, lam=1.5, radii=None, route="flux", n_snapshot=360):
    """N, W_lam and H along a radius ladder; monotonicity judged against the 2h solve."""
    d = sol.d
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    if abs(x0[-1]) > 1e-12:
        raise ValueError("x0 must lie on the thin plane")
    radii = radius_ladder() if radii is None else np.asarray(radii, dtype=float)
    if np.min(radii) < 2 * sol.h:
        raise ValueError(f"radius {np.min(radii):g} below the resolution floor 2h = {2 * sol.h:g}")
    if np.max(radii) + np.linalg.norm(x0) >= 1.0:
        raise ValueError("radius ladder leaves the unit ball")
    H, D, N, W = _raw_profile(sol, x0, lam, radii, route)
    D_grid = np.array([grid_energy(sol, x0, r) for r in radii]) if route == "flux" else D
    tau = 0.0
    if sol.coarse is not None and np.min(radii) >= 2 * sol.coarse.h:
        Hc, Dc, Nc, Wc = _raw_profile(sol.coarse, x0, lam, radii, route)
        tau = 5.0 * max(float(np.max(np.abs(N - Nc))), float(np.max(np.abs(W - Wc))))
    else:
        tau = 5.0 * float(np.max(np.abs(D - D_grid) * radii / H))
    pts, _ = _sphere_rule(d, n_theta=n_snapshot) if d == 2 else _sphere_rule(d, n_polar=24, n_azimuth=48)
    snaps = np.array([sol.interpolate(x0 + r * pts) / r**lam for r in radii])
    prof = FrequencyProfile(x0, lam, radii, H, D, N, W, d, D_grid, tau, snaps, pts)
    sH = prof.scaled_H()
    mono = {"N": _nondecreasing(radii, N, tau), "W": _nondecreasing(radii, W, tau)}
    if np.min(N) > lam + 0.05:
        tauH = tau * float(np.max(sH))
        mono["H_scaled"] = _nondecreasing(radii, sH, tauH)
    prof.monotonicity = mono
    return prof


def detect_free_boundary(sol):
    """Points of the thin plane where the contact mask switches, refined with u^(2/3).

    Contact reaching the last plane node before the sphere is reported as a
    boundary-touching point.
    """
    st = sol.stencil
    d = sol.d
    plane_idx = np.flatnonzero(st.plane)
    P = st.points[plane_idx]
    vals = sol.values[plane_idx]
    thr = sol.contact_threshold
    contact = vals <= thr
    h = sol.h
    out = []
    lookup = {tuple(np.round(p[:-1] / h).astype(int)): i for i, p in enumerate(P)}
    isolated = set()
    for key, i in lookup.items():
        if not contact[i]:
            continue
        nbrs = [lookup.get(tuple(np.array(key) + s * e)) for e in np.eye(d - 1, dtype=int) for s in (1, -1)]
        if all(j is not None and not contact[j] for j in nbrs):
            # a single contact node: the coincidence set is a point
            isolated.add(i)
            out.append({"point": P[i].tolist(), "boundary_touching": False})
    for a in range(d - 1):
        step = np.zeros(d - 1, dtype=int)
        step[a] = 1
        for key, i in lookup.items():
            if not contact[i] or i in isolated:
                continue
            for sgn in (1, -1):
                nkey = tuple(np.array(key) + sgn * step)
                j = lookup.get(nkey)
                if j is None:
                    # the contact set meets the boundary of the thin ball
                    x = P[i].copy()
                    x[a] += sgn * h
                    x /= np.linalg.norm(x)
                    out.append({"point": x.tolist(), "boundary_touching": True})
                    continue
                if contact[j]:
                    continue
                # refine between contact node i and free node j using u^(2/3) ~ linear
                k = lookup.get(tuple(np.array(nkey) + sgn * step))
                x = P[i].copy()
                t = 0.5
                if k is not None and not contact[k]:
                    a1, a2 = vals[j] ** (2 / 3), vals[k] ** (2 / 3)
                    if a2 > a1:
                        t = float(np.clip(1.0 - a1 / (a2 - a1), 0.0, 1.0))
                x[a] += sgn * t * h
                out.append({"point": x.tolist(), "boundary_touching": False})
    # merge duplicates within h/2
    merged = []
    for p in out:
        q = np.array(p["point"])
        if any(np.linalg.norm(q - np.array(m["point"])) < 0.5 * h and m["boundary_touching"] == p["boundary_touching"]
               for m in merged):
            continue
        merged.append(p)
    return merged


def extrapolate_frequency(profile, k=3):
    """N(0+) by a linear fit of N against r over the k smallest radii."""
    order = np.argsort(profile.radii)[:k]
    r, N = profile.radii[order], profile.N[order]
    A = np.stack([np.ones_like(r), r], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, N, rcond=None)
    spread = float(np.max(np.abs(A @ coef - N)))
    return float(coef[0]), float(coef[1]), spread


def classify_point(profile, tol=0.1):
    """Reg / Sing(2m) / Other from the extrapolated frequency."""
    if len(profile.radii) < 6:
        raise ValueError("classification needs at least 6 radii")
    N0, slope, spread = extrapolate_frequency(profile)
    N_small = profile.N[np.argmin(profile.radii)]
    unstable = abs(N0 - N_small) > 0.25 or spread > 0.05
    if abs(N0 - 1.5) <= tol:
        label, lam = "Reg", 1.5
    else:
        m2 = 2 * max(1, int(round(N0 / 2)))
        label, lam = ("Sing(%d)" % m2, float(m2)) if abs(N0 - m2) <= tol else ("Other", N0)
    sH = profile.H / profile.radii ** (profile.d - 1 + 2 * lam)
    i_small = int(np.argmin(profile.radii))
    nondeg = float(np.min(sH) / sH[i_small]) if sH[i_small] > 0 else 0.0
    return {
        "label": label, "lambda": float(lam), "N_hat": N0, "slope": slope, "fit_spread": spread, "unstable": bool(unstable),
        "nondegeneracy_ratio": nondeg, "nondegenerate": bool(nondeg >= 0.5),
    }


def decay_check(sol, x0=None, lam=2.0, radii=None, classification=None):
    """Geometric (d=2) or logarithmic (d>=3) decay of W_lam and L^1 blow-up increments."""
    if classification is not None and not classification["label"].startswith("Sing"):
        raise ValueError(f"decay_check needs a singular point, got {classification['label']}")
    if abs(lam / 2 - round(lam / 2)) > 1e-12 or lam < 2:
        raise ValueError("decay_check applies at lambda = 2m")
    radii = np.geomspace(0.5, 0.1, 6) if radii is None else np.asarray(radii, dtype=float)
    if len(radii) < 4:
        raise ValueError("insufficient radii")
    prof = frequency_profile(sol, x0, lam, radii)
    W = prof.W
    report = {"radii": prof.radii.tolist(), "W": W.tolist(), "tau": prof.tau_mono}
    # values within the discretization tolerance are indistinguishable from zero
    pos = W > prof.tau_mono
    if sol.d == 2:
        if pos.sum() >= 3:
            beta, logc = np.polyfit(np.log(radii[pos] / radii[0]), np.log(W[pos]), 1)
            report.update({"beta": float(beta), "regime": "geometric", "decays": bool(beta > 0)})
        else:
            report.update({"beta": None, "regime": "geometric", "decays": bool(np.max(np.abs(W)) <= prof.tau_mono),
                           "note": "W vanishes to resolution"})
    else:
        g = (sol.d - 2) / sol.d
        if pos.sum() >= 3:
            slope, _ = np.polyfit(np.log(radii[pos]), W[pos] ** (-g), 1)
            report.update({"slope": float(slope), "regime": "logarithmic", "decays": bool(slope < 0)})
        else:
            report.update({"slope": None, "regime": "logarithmic", "decays": bool(np.max(np.abs(W)) <= prof.tau_mono)})
    _, wts = _sphere_rule(sol.d, n_theta=prof.snapshots.shape[1]) if sol.d == 2 else _sphere_rule(sol.d, 24, 48)
    snaps = prof.snapshots
    inc = [float(wts @ np.abs(snaps[i] - snaps[i + 1])) for i in range(len(radii) - 1)]
    floor = 0.0
    if sol.coarse is not None and np.min(radii) >= 2 * sol.coarse.h:
        pts = prof.snapshot_points
        coarse = np.array([sol.coarse.interpolate(prof.center + r * pts) / r**lam for r in radii])
        floor = 5.0 * float(np.max(np.abs(coarse - snaps) @ wts))
    report["l1_increments"] = inc
    report["increment_floor"] = floor
    pairs = list(zip(inc[:-1], inc[1:]))
    report["increments_strictly_decreasing"] = bool(all(b < a for a, b in pairs))
    report["increments_decreasing"] = bool(all(b <= a * (1 + 1e-9) + floor for a, b in pairs))
    return report
