import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.special import ModelSolution, build_h2m
from signorini_lab.spectral import TraceExpansion, band_limited_quadrature, build_mode_table, eigenvalue_of_homogeneity
from signorini_lab.weiss import (
    FunctionDictionary,
    HomogeneousExtension,
    kappa,
    mumut_check,
    piecewise_weiss,
    weiss_fourier,
    weiss_identity_gap,
    weiss_quadrature,
)

from conftest import random_expansion


@pytest.mark.parametrize("d", [2, 3])
def test_fourier_matches_quadrature(rng, d):
    for _ in range(20):
        exp = random_expansion(rng, d, 6)
        alpha = rng.uniform(0.5, 4.0)
        mu = rng.uniform(1.0, 3.0)
        fourier = weiss_fourier(exp, alpha, mu).total
        quad = weiss_quadrature(HomogeneousExtension(exp, alpha), mu, d)
        assert quad == pytest.approx(fourier, rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_model_energies(d):
    assert abs(weiss_quadrature(ModelSolution("he", d), 1.5, d)) <= 1e-7
    if d == 2:
        assert weiss_quadrature(ModelSolution("u0", 2), 1.5, 2) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("m", [1, 2])
def test_half_integer_solution_has_zero_energy(m):
    h = ModelSolution("half_integer", 2, m=m)
    assert abs(weiss_quadrature(h, h.homogeneity, 2)) <= 1e-7


@pytest.mark.parametrize("d,m", [(2, 1), (3, 2)])
def test_h2m_energy_vanishes_at_its_frequency(d, m):
    h = build_h2m(d, m)
    assert abs(weiss_quadrature(h, 2 * m, d, quadrature=band_limited_quadrature(d, 4 * m + 2))) <= 1e-9


def test_quadrature_rejects_non_homogeneous():
    with pytest.raises(ValueError):
        weiss_quadrature(lambda x: 1.0 + x[:, 0], 1.5, 2, alpha=1.0)


def test_divergent_alpha_rejected(rng):
    exp = random_expansion(rng, 2, 3)
    with pytest.raises(ValueError):
        weiss_fourier(exp, 0.0, 1.0)


def test_kappa_values():
    assert kappa(2, 1.5, 3) == pytest.approx(0.5 / 4.5)
    # half-integer window: kappa_{2m, 2m - 1/2} = 1/(8m - 1) in d = 2
    for m in (1, 2, 3):
        assert kappa(2 * m, 2 * m - 0.5, 2) == pytest.approx(1 / (8 * m - 1))


def test_single_mode_energy_sign():
    # an eigenfunction of homogeneity a has W_mu(r^a phi) = (a - mu) ||phi||^2
    t = build_mode_table(3, 4)
    for j in range(len(t)):
        c = np.zeros(len(t))
        c[j] = 1.0
        a = t.alphas[j]
        if a == 0:
            continue
        w = weiss_fourier(TraceExpansion(t, c), a, 1.5).total
        assert w == pytest.approx(a - 1.5, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    d=st.sampled_from([2, 3]),
    alpha=st.floats(0.6, 5.0),
    mu=st.floats(1.0, 4.0),
)
def test_identity_gap_holds(seed, d, alpha, mu):
    exp = random_expansion(np.random.default_rng(seed), d, 6)
    gap = weiss_identity_gap(exp, alpha, mu)
    lam = eigenvalue_of_homogeneity(alpha, d)
    ref = kappa(alpha, mu, d) / (d + 2 * alpha - 2) * float(np.sum((lam - exp.table.eigenvalues) * exp.coefficients**2))
    assert gap == pytest.approx(ref, rel=1e-12, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), s=st.floats(0.1, 10.0))
def test_energy_is_quadratic(seed, s):
    exp = random_expansion(np.random.default_rng(seed), 2, 5)
    a = weiss_fourier(exp, 2.0, 1.5).total
    b = weiss_fourier(exp * s, 2.0, 1.5).total
    assert b == pytest.approx(s * s * a, rel=1e-12, abs=1e-14)


def test_contributions_sum_and_report(rng):
    exp = random_expansion(rng, 3, 4)
    rep = weiss_fourier(exp, 2.5, 1.5)
    assert rep.total == pytest.approx(np.sum(rep.contributions))
    assert len(rep.to_dict()["modes"]) == len(exp.table)
    assert rep.to_csv().splitlines()[0] == "j,alpha_j,lambda_j,coef,contribution"


def test_mumut_relation():
    t = build_mode_table(2, 4)
    c = np.zeros(len(t))
    c[t.index_of(2, 2)] = 1.0
    exp = TraceExpansion(t, c)
    first, second = mumut_check(exp, 1.5, 0.5)
    assert first == pytest.approx(weiss_fourier(exp, 2.0, 1.5).total)
    assert second == pytest.approx(weiss_fourier(exp, 1.5, 1.5).total)


def test_piecewise_matches_single_homogeneity(rng):
    d = 2
    exp = random_expansion(rng, d, 5)
    t = exp.table
    q = band_limited_quadrature(d, 12)
    dic = FunctionDictionary(d, range(len(t)), [t.evaluate], [t.gradient], q)
    c = exp.coefficients
    # splitting c into two pieces of the same homogeneity leaves W unchanged
    w_split = piecewise_weiss([(2.0, 0.3 * c), (2.0, 0.7 * c)], dic.mass, dic.stiffness, 1.5, d)
    assert w_split == pytest.approx(weiss_fourier(exp, 2.0, 1.5).total, rel=1e-10)
    # two homogeneities against the quadrature oracle
    ext_a, ext_b = HomogeneousExtension(exp, 2.0), HomogeneousExtension(exp * 0.5, 3.0)
    w_mixed = piecewise_weiss([(2.0, c), (3.0, 0.5 * c)], dic.mass, dic.stiffness, 1.5, d)
    # direct radial integral: int_0^1 r^{d-1} ... via the cross formula
    A0, A1 = c @ dic.mass @ c, c @ dic.stiffness @ c
    ref = 0.0
    for a, s in ((2.0, 1.0), (3.0, 0.5)):
        for b, u in ((2.0, 1.0), (3.0, 0.5)):
            ref += s * u * (a * b * A0 + A1) / (a + b + d - 2)
    ref -= 1.5 * 1.5**2 * A0
    assert w_mixed == pytest.approx(ref, rel=1e-12)
    assert ext_a.homogeneity == 2.0 and ext_b.homogeneity == 3.0
