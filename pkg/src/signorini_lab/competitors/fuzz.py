"""Admissible-trace generators and fuzzing campaigns.

Every item draws from its own counter-based stream keyed by (seed, index), so
campaigns are reproducible item by item and independent of ordering.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..spectral import TraceExpansion, build_mode_table
from ..weiss import weiss_fourier
from .base import CSV_HEADER, ConstructionError, InadmissibleTrace, equator_minimum, h2m_coefficients_in_table
from .half_integer import SlitTrace, sector_dictionary, verify_half_integer
from .regular import verify_regular
from .singular import (
    build_singular,
    gamma_exponent,
    negative_constants,
    singular_constants,
    verify_negative,
    verify_singular,
)


def item_rng(seed, index):
    """Philox stream for item ``index`` of campaign ``seed``."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def default_degree(d, m=None):
    """Mode cutoff of the generated traces."""
    base = 10 if d == 2 else 6
    return base if m is None else max(base, 2 * m + 3)


def admissible_trace(rng, d, K, decay=1.5):
    """Random even trace made nonnegative on the equator.

    Coefficients are centred normals with decay (1 + alpha)^(-decay); a
    positive equator profile (the constant, or h_{2m}) is then added with a
    random margin so that the equator minimum becomes nonnegative.
    """
    table = build_mode_table(d, K)
    c = rng.standard_normal(len(table)) / (1.0 + table.alphas) ** decay
    c *= rng.random(len(table)) < 0.85  # sparse patterns exercise degenerate splits
    mn = equator_minimum(TraceExpansion(table, c))
    margin = rng.exponential(0.3) * (rng.random() < 0.7)
    if rng.random() < 0.5 or K < 2:
        prof = np.zeros(len(table))
        prof[table.index_of(0, 0)] = np.sqrt(2 * np.pi if d == 2 else 4 * np.pi)  # constant 1
    else:
        m = int(rng.integers(1, K // 2 + 1))
        prof = np.array(h2m_coefficients_in_table(d, m, K))
    shift = max(0.0, -mn) * (1.0 + margin) + (margin * 0.1 if mn >= 0 else 0.0) * rng.random()
    c = c + shift * prof
    # guard the Newton-polished minimum against rounding
    mn = equator_minimum(TraceExpansion(table, c))
    if mn < 0:
        c = c + (-mn) * (1 + 1e-9) * prof
    return TraceExpansion(table, c)


def regular_trace(seed, index, d):
    rng = item_rng(seed, index)
    c = admissible_trace(rng, d, default_degree(d))
    return c * (1.0 / np.sqrt(c.norm_sq()))


def singular_trace(seed, index, d, m):
    """Admissible trace rescaled so that int c^2 <= 1 and |W_{2m}(z)| <= 1."""
    rng = item_rng(seed, index)
    c = admissible_trace(rng, d, default_degree(d, m))
    c = c * (1.0 / np.sqrt(c.norm_sq()))
    W = abs(weiss_fourier(c, 2 * m, 2 * m).total)
    s = min(1.0, 1.0 / np.sqrt(W)) if W > 0 else 1.0
    return c * (s * (0.05 + 0.95 * rng.random()))


def negative_trace(seed, index, d, m):
    rng = item_rng(seed, index)
    c = admissible_trace(rng, d, default_degree(d, m))
    return c * (1.0 / np.sqrt(c.norm_sq()))


SLIT_NUS = {1: (3.5, 4.5, 5.5), 2: (7.5, 8.5, 9.5)}


def slit_trace(seed, index, m, delta, K=12):
    """h_{2m-1/2} plus a perturbation eta with ||eta|| <= delta, nonnegative at theta = 0, pi."""
    rng = item_rng(seed, index)
    nus = SLIT_NUS.get(m, tuple(2 * m + k + 0.5 for k in range(2, 5)))
    dic = sector_dictionary(m, max(K, 2 * m), nus)
    table = dic.table
    coef = np.zeros(len(dic))
    coef[: 2 * m] = rng.standard_normal(2 * m)
    coef[2 * m: dic.offset] = rng.standard_normal(len(nus)) / (1 + np.arange(len(nus)))
    coef[dic.offset:] = rng.standard_normal(len(table)) / (1 + table.alphas) ** 1.2
    coef *= rng.random(len(dic)) < 0.8
    ends = dic.values(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    # h is zero at theta = pi and positive at 0; lift eta at pi if needed using the constant
    i0 = dic.offset + table.index_of(0, 0)
    val_pi = ends[1] @ coef
    if val_pi < 0:
        coef[i0] += -val_pi * np.sqrt(2 * np.pi) * (1 + rng.random())
    nrm = float(np.sqrt(coef @ dic.mass @ coef))
    if nrm > 0:
        coef *= delta * rng.random() ** 0.5 / nrm
    sector = 1.0 + coef[: 2 * m]
    slit = {nu: float(coef[2 * m + i]) for i, nu in enumerate(nus)}
    return SlitTrace(m, sector, TraceExpansion(table, coef[dic.offset:]), slit)


# ---------------------------------------------------------------------------
# calibration


def calibrate_singular_eps(d, m, seed=0, n=300, safety=0.5):
    """eps = safety * min(kappa window, C_2/(2 C_1 C_3_hat)), C_3_hat measured on the corpus.

    C_3_hat is the largest M^2/||grad phi||^(2(1-gamma)) over the corpus; the
    kappa window keeps alpha <= 2m + 1/2 on every corpus item.
    """
    g = gamma_exponent(d)
    c1, c2 = singular_constants(d, m)
    c3 = 0.0
    max_grad = 0.0
    for i in range(n):
        c = singular_trace(seed, i, d, m)
        rec = build_singular(c, m, 1e-12)
        gs = rec.derived["phi_grad_sq"]
        M = rec.derived["M"]
        max_grad = max(max_grad, gs)
        if gs > 0:
            c3 = max(c3, M**2 / gs ** (1 - g))
    kmax = 1.0 / (8 * m + 2 * d - 3)
    window = kmax / max_grad**g if max_grad > 0 else kmax
    c3 = max(c3, 1e-300)
    eps = safety * min(window, c2 / (2 * c1 * c3))
    return {"eps": eps, "C1": c1, "C2": c2, "C3_hat": c3, "max_grad_sq": max_grad, "kappa_window": window,
            "corpus_seed": seed, "corpus_size": n}


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class CampaignResult:
    case: str
    d: int
    m: object
    seed: int
    reports: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def violations(self):
        return sum(1 for r in self.reports if not r.passed) + len(self.errors)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.reports:
            w.writerow([r.seed, r.case, r.d, "" if r.m is None else r.m,
                        f"{r.W_z:.17g}", f"{r.W_h:.17g}", f"{r.factor:.17g}", f"{r.gap:.17g}", int(r.passed)])
        return buf.getvalue()

    def summary(self):
        gaps = [r.gap for r in self.reports]
        return {
            "case": self.case, "d": self.d, "m": self.m, "seed": self.seed, "n": len(self.reports),
            "violations": self.violations, "errors": self.errors,
            "max_gap": max(gaps) if gaps else None, "params": self.params,
        }


def run_campaign(case, d, m=None, n=100, seed=0, eps=None, delta=0.05, tol=None):
    """Run ``n`` generated traces through the verifier of ``case``."""
    res = CampaignResult(case, d, m, seed)
    if case == "singular" and eps is None:
        cal = calibrate_singular_eps(d, m, seed=seed, n=max(n, 1))
        eps = cal["eps"]
        res.params["calibration"] = cal
    if case == "negative" and eps is None:
        from ..gap import negative_epsilon

        eps = negative_epsilon(d, m)
    res.params.update({"eps": eps, "delta": delta if case == "half-integer" else None})
    for i in range(n):
        try:
            if case == "regular":
                rep = verify_regular(regular_trace(seed, i, d), tol=tol)
            elif case == "singular":
                rep = verify_singular(singular_trace(seed, i, d, m), m, eps, tol=tol)
            elif case == "negative":
                rep = verify_negative(negative_trace(seed, i, d, m), m, eps, tol=tol)
            elif case == "half-integer":
                rep = verify_half_integer(slit_trace(seed, i, m, delta), m, delta, tol=tol)
            else:
                raise ValueError(f"unknown case {case!r}")
        except (InadmissibleTrace, ConstructionError) as exc:
            res.errors.append({"index": i, "error": type(exc).__name__, "message": str(exc)})
            continue
        rep.seed = seed
        rep.diagnostics["index"] = i
        res.reports.append(rep)
    return res


__all__ = [
    "item_rng", "admissible_trace", "regular_trace", "singular_trace", "negative_trace", "slit_trace",
    "calibrate_singular_eps", "run_campaign", "CampaignResult", "negative_constants",
]
