import json
from math import comb

import numpy as np
import pytest

from signorini_lab.spectral import (
    TraceExpansion,
    band_limited_quadrature,
    build_mode_table,
    composite_rule,
    eigenvalue_of_homogeneity,
    expand_trace,
    graded_quadrature,
    graded_rule,
    homogeneity_of_eigenvalue,
    project_function,
    rotate_azimuth,
    synthesize_trace,
    trace_from_dict,
    trace_to_dict,
)

from conftest import random_expansion


@pytest.mark.parametrize("d", [2, 3, 5])
def test_eigenvalue_homogeneity_roundtrip(d):
    mu = np.array([0.0, 1.0, 1.5, 2.0, 3.5, 7.0])
    lam = eigenvalue_of_homogeneity(mu, d)
    assert np.allclose(homogeneity_of_eigenvalue(lam, d), mu, atol=1e-13)


def test_linear_modes_have_homogeneity_one():
    for d in (2, 3, 4, 7):
        assert homogeneity_of_eigenvalue(d - 1, d) == pytest.approx(1.0)


def test_eigenvalue_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenvalue_of_homogeneity(1.0, 1)
    with pytest.raises(ValueError):
        homogeneity_of_eigenvalue(-1.0, 3)


def test_even_table_d2():
    t = build_mode_table(2, 2)
    assert [m.alpha for m in t.modes] == [0, 1, 2]
    assert list(t.eigenvalues) == [0.0, 1.0, 4.0]
    t_all = build_mode_table(2, 2, parity="all")
    assert sorted(m.alpha for m in t_all.modes) == [0, 1, 1, 2, 2]


def test_even_table_d3_parity_rule():
    t = build_mode_table(3, 4)
    assert all((m.alpha + abs(m.order)) % 2 == 0 for m in t.modes)
    # even harmonics of degree l in R^3 number l + 1
    for l in range(5):
        assert sum(1 for m in t.modes if m.alpha == l) == l + 1


def test_all_parity_count_below_four_is_sixteen():
    t = build_mode_table(3, 3, parity="all")
    assert len(t) == 16
    assert int(np.sum(t.alphas < 4)) == 16


@pytest.mark.parametrize("d,K", [(2, 9), (3, 6)])
def test_orthonormal_on_band_limited_rule(d, K):
    t = build_mode_table(d, K)
    q = band_limited_quadrature(d, K)
    V = t.evaluate(q.points)
    G = V.T @ (q.weights[:, None] * V)
    assert np.max(np.abs(G - np.eye(len(t)))) < 1e-12


@pytest.mark.parametrize("d,K", [(2, 6), (3, 4)])
def test_gradients_match_eigenvalues(d, K):
    t = build_mode_table(d, K)
    q = graded_quadrature(d)
    _, G = t.evaluate_with_gradient(q.points)
    S = np.einsum("nak,nbk,n->ab", G, G, q.weights)
    assert np.max(np.abs(S - np.diag(t.eigenvalues))) < 1e-9


def test_table_arrays_read_only():
    t = build_mode_table(2, 4)
    with pytest.raises(ValueError):
        t.alphas[0] = 3.0


def test_index_of_unknown_mode():
    with pytest.raises(KeyError):
        build_mode_table(2, 3).index_of(5, 5)


def test_table_rejects_unsupported_dimension():
    with pytest.raises(ValueError):
        build_mode_table(4, 2)


def test_graded_rule_integrates_root_singularity():
    x, w = graded_rule(0.0, 1.0, "a")
    assert np.dot(w, np.sqrt(x)) == pytest.approx(2 / 3, abs=1e-12)
    # an integrable blow-up converges with the number of grading levels
    errs = [abs(np.dot(w, x**-0.5) - 2.0) for x, w in (graded_rule(0.0, 1.0, "a", levels=n) for n in (6, 10, 14))]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-5
    x, w = composite_rule([-1.0, 0.0, 1.0], ["b", "a"])
    assert np.dot(w, np.abs(x) ** 1.5) == pytest.approx(0.8, abs=1e-12)


@pytest.mark.parametrize("d,K", [(2, 8), (3, 5)])
def test_expand_synthesize_roundtrip(rng, d, K):
    exp = random_expansion(rng, d, K)
    samples = synthesize_trace(exp)
    back = expand_trace(samples, exp.table)
    assert np.max(np.abs(back.coefficients - exp.coefficients)) < 1e-12
    assert abs(back.residual) < 1e-10


def test_expand_reports_residual_above_cutoff():
    table = build_mode_table(2, 3)
    q = band_limited_quadrature(2, 10)
    th = np.arctan2(q.points[:, 1], q.points[:, 0])
    vals = np.cos(th) / np.sqrt(np.pi) + 0.5 * np.cos(6 * th) / np.sqrt(np.pi)
    exp = expand_trace(vals, table, q)
    assert exp.coefficient(1, 1) == pytest.approx(1.0)
    assert exp.residual == pytest.approx(0.25)


def test_expand_rejects_odd_trace():
    table = build_mode_table(2, 3)
    q = table.quadrature()
    with pytest.raises(ValueError):
        expand_trace(q.points[:, 1], table, q)


def test_project_function_recovers_coefficients(rng):
    exp = random_expansion(rng, 3, 4)
    proj = project_function(exp.evaluate, exp.table)
    assert np.allclose(proj.coefficients, exp.coefficients, atol=1e-12)


def test_rotation_preserves_values(rng):
    exp = random_expansion(rng, 3, 4)
    beta = 0.7
    rot = rotate_azimuth(exp, beta)
    q = band_limited_quadrature(3, 4)
    c, s = np.cos(beta), np.sin(beta)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert np.allclose(rot.evaluate(q.points), exp.evaluate(q.points @ R.T), atol=1e-12)
    assert rot.norm_sq() == pytest.approx(exp.norm_sq())


def test_rotation_d2_only_by_pi(rng):
    exp = random_expansion(rng, 2, 4)
    with pytest.raises(ValueError):
        rotate_azimuth(exp, 0.3)
    flipped = rotate_azimuth(exp, np.pi)
    q = band_limited_quadrature(2, 4)
    assert np.allclose(flipped.evaluate(q.points), exp.evaluate(-q.points), atol=1e-12)


def test_json_roundtrip(rng):
    exp = random_expansion(rng, 3, 4)
    data = json.loads(json.dumps(trace_to_dict(exp)))
    assert set(data) == {"d", "slit", "form", "modes", "samples"}
    back = trace_from_dict(data)
    assert np.array_equal(back.coefficients, exp.coefficients)


def test_json_requires_fields():
    with pytest.raises(ValueError):
        trace_from_dict({"modes": []})


def test_expansion_arithmetic(rng):
    a = random_expansion(rng, 2, 5)
    b = random_expansion(rng, 2, 5)
    assert np.allclose((a + b).coefficients, a.coefficients + b.coefficients)
    assert np.allclose((2 * a - b).coefficients, 2 * a.coefficients - b.coefficients)
    with pytest.raises(ValueError):
        TraceExpansion(a.table, np.zeros(2))


def test_spectral_transform_estimator(rng):
    from sklearn.base import clone

    from signorini_lab.estimators import SpectralTransform

    est = SpectralTransform(d=2, max_homogeneity=6).fit()
    C = rng.standard_normal((4, len(est.table_)))
    X = est.inverse_transform(C)
    assert np.allclose(est.transform(X), C, atol=1e-12)
    assert np.allclose(est.residual(X), 0.0, atol=1e-10)
    assert clone(est).get_params() == {"d": 2, "max_homogeneity": 6}
