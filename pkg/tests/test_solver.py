import json

import numpy as np
import pytest

from signorini_lab.estimators import SignoriniSolver
from signorini_lab.solver import (
    InadmissibleDatum,
    NonConvergence,
    Stencil,
    compile_expression,
    detect_free_boundary,
    make_datum,
    optimal_omega,
    solve,
)


def _he(d=2):
    return make_datum({"kind": "model", "name": "he"}, d)


def test_harmonic_quadratic_is_reproduced():
    datum = make_datum({"kind": "expression", "expr": "x1**2 - x2**2", "harmonic": True}, 2)
    sol = solve(datum, h=1 / 32)
    assert sol.info["converged"]
    # second order discretization at the sphere: small nodal error
    assert sol.sup_error(0.9) <= 5e-4


def test_constant_datum():
    datum = make_datum({"kind": "model", "name": "const", "value": 2.0}, 2)
    sol = solve(datum, h=1 / 32)
    assert np.max(np.abs(sol.values - 2.0)) <= 1e-8
    assert detect_free_boundary(sol) == []


def test_he_converges_at_second_order_ish():
    errs = [solve(_he(), h=h).sup_error(0.5) for h in (1 / 32, 1 / 64, 1 / 128)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] >= 1.7


def test_he_free_boundary_at_origin():
    sol = solve(_he(), h=1 / 64)
    fb = [p for p in detect_free_boundary(sol) if not p["boundary_touching"]]
    assert len(fb) == 1
    assert abs(fb[0]["point"][0]) <= 2 / 64
    # contact on the negative half-line, none on the positive one
    P = sol.stencil.points[sol.stencil.plane]
    mask = sol.contact_mask
    assert np.all(mask[P[:, 0] < -0.05])
    assert not np.any(mask[P[:, 0] > 0.05])


def test_solution_respects_constraint():
    sol = solve(make_datum({"kind": "expression", "expr": "x1**2 - x2**2 + 0.2"}, 2), h=1 / 32)
    assert np.min(sol.values[sol.stencil.plane]) >= -1e-12


def test_odd_datum_rejected():
    with pytest.raises(InadmissibleDatum):
        solve(make_datum({"kind": "expression", "expr": "x2"}, 2), h=1 / 16)


def test_negative_on_thin_boundary_rejected():
    with pytest.raises(InadmissibleDatum):
        solve(make_datum({"kind": "expression", "expr": "x1"}, 2), h=1 / 16)


def test_expression_whitelist():
    f = compile_expression("sqrt(abs(x1)) + cos(theta) * r", 2)
    x = np.array([[0.25, 0.0], [0.0, 0.5]])
    np.testing.assert_allclose(f(x), [0.5 + 0.25, 0.0], atol=1e-15)
    for bad in ("__import__('os')", "x1.real", "open('f')", "y + 1", "[x1]", "lambda: 1"):
        with pytest.raises((ValueError, SyntaxError)):
            compile_expression(bad, 2)


def test_non_convergence():
    with pytest.raises(NonConvergence) as exc:
        solve(_he(), h=1 / 32, max_iters=5, nested=False, raise_on_failure=True)
    assert exc.value.solution is not None
    assert not exc.value.solution.info["converged"]


def test_dump_format(tmp_path):
    sol = solve(_he(), h=1 / 16)
    sol.dump(tmp_path / "u.bin", tmp_path / "u.json", spec_hash="abc")
    meta = json.loads((tmp_path / "u.json").read_text())
    arr = np.fromfile(tmp_path / "u.bin", dtype="<f8").reshape(meta["dims"])
    assert meta["spacing"] == 1 / 16 and meta["spec_hash"] == "abc"
    assert meta["ordering"] == "row-major"
    np.testing.assert_array_equal(arr, sol.half_array())


def test_interpolation_matches_nodes():
    sol = solve(_he(), h=1 / 32)
    P = sol.stencil.points
    sel = np.linalg.norm(P, axis=1) < 0.9
    np.testing.assert_allclose(sol.interpolate(P[sel]), sol.values[sel], atol=1e-12)
    # mirror symmetry in x_d
    Q = P[sel].copy()
    Q[:, -1] *= -1
    np.testing.assert_allclose(sol.interpolate(Q), sol.values[sel], atol=1e-12)


def test_deterministic():
    a = solve(_he(), h=1 / 32).values
    b = solve(_he(), h=1 / 32).values
    np.testing.assert_array_equal(a, b)


def test_three_dimensional_h2m():
    datum = make_datum({"kind": "model", "name": "h2m", "m": 1}, 3)
    sol = solve(datum, h=1 / 16)
    assert sol.info["converged"]
    assert sol.sup_error(0.9) <= 5e-3


def test_stencil_and_omega():
    st = Stencil(2, 1 / 16)
    assert st.h == 1 / 16
    w = optimal_omega(2, 1 / 64)
    assert 1.0 < w < 2.0
    assert optimal_omega(2, 1 / 128) > w


def test_estimator_front_end():
    est = SignoriniSolver(d=2, h=1 / 32)
    est.fit({"kind": "model", "name": "he"})
    assert est.converged_ and est.n_iter_ > 0
    x = np.array([[0.3, 0.1], [-0.2, 0.0]])
    np.testing.assert_allclose(est.predict(x), est.solution_.interpolate(x))
    assert est.get_params()["h"] == 1 / 32
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 3)))
