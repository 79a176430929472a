import numpy as np
import pytest

from signorini_lab.solver import (
    boundary_integrals,
    classify_point,
    decay_check,
    detect_free_boundary,
    extrapolate_frequency,
    frequency_profile,
    grid_energy,
    make_datum,
    radius_ladder,
    solve,
)


@pytest.fixture(scope="module")
def he_sol():
    return solve(make_datum({"kind": "model", "name": "he"}, 2), h=1 / 128)


@pytest.fixture(scope="module")
def quad_sol():
    return solve(make_datum({"kind": "expression", "expr": "x1**2 - x2**2", "harmonic": True}, 2), h=1 / 128)


def test_boundary_integrals_of_he(he_sol):
    # H(r) = r^{d-1+3} ||h_e||^2 with ||h_e||^2 = int cos^2(3 theta/2) = pi, and D = (3/2) H / r for the 3/2-homogeneous solution
    r = 0.4
    H, D = boundary_integrals(he_sol, np.zeros(2), r)
    assert H == pytest.approx(np.pi * r**4, rel=2e-3)
    assert r * D / H == pytest.approx(1.5, abs=0.02)


def test_grid_energy_route(he_sol):
    r = 0.4
    H, D = boundary_integrals(he_sol, np.zeros(2), r)
    assert grid_energy(he_sol, np.zeros(2), r) == pytest.approx(D, rel=0.05)


def test_profile_of_he(he_sol):
    prof = frequency_profile(he_sol)
    sel = (prof.radii >= 0.1) & (prof.radii <= 0.5)
    assert np.all(np.abs(prof.N[sel] - 1.5) <= 0.05)
    assert np.max(np.abs(prof.W)) <= 5e-3
    assert all(v["ok"] for v in prof.monotonicity.values())
    cls = classify_point(prof)
    assert cls["label"] == "Reg"
    assert cls["nondegenerate"]


def test_profile_of_harmonic_quadratic(quad_sol):
    prof = frequency_profile(quad_sol, lam=2.0)
    assert np.all(np.abs(prof.N - 2.0) <= 0.05)
    assert all(v["ok"] for v in prof.monotonicity.values())
    assert classify_point(prof)["label"] == "Sing(2)"
    fb = detect_free_boundary(quad_sol)
    assert len(fb) == 1 and np.allclose(fb[0]["point"], 0.0)


def test_profile_csv(he_sol):
    prof = frequency_profile(he_sol, radii=radius_ladder(0.4, 0.1, 6))
    lines = prof.to_csv().splitlines()
    assert lines[0] == "r,H,D,N,W_lambda"
    assert len(lines) == 7


def test_profile_input_checks(he_sol):
    with pytest.raises(ValueError):
        frequency_profile(he_sol, x0=[0.0, 0.1])
    with pytest.raises(ValueError):
        frequency_profile(he_sol, radii=[0.5, 0.001])
    with pytest.raises(ValueError):
        frequency_profile(he_sol, x0=[0.6, 0.0], radii=[0.5, 0.3])


def test_extrapolation_of_linear_data():
    class P:
        radii = np.array([0.4, 0.2, 0.1])
        N = 2.0 + 0.5 * radii

    n0, slope, spread = extrapolate_frequency(P())
    assert n0 == pytest.approx(2.0) and slope == pytest.approx(0.5) and spread < 1e-12


def test_decay_on_perturbed_singular_datum():
    datum = make_datum({"kind": "expression", "expr": "x1**2 - x2**2 + 0.1*r**4*cos(4*theta)"}, 2)
    # the increments sit above the discretization floor only on the fine grid
    sol = solve(datum, h=1 / 256)
    rep = decay_check(sol, lam=2.0)
    assert rep["beta"] is not None and rep["beta"] > 0
    assert rep["increments_decreasing"]
    assert len(rep["l1_increments"]) == 5


def test_decay_requires_integer_lambda(quad_sol):
    with pytest.raises(ValueError):
        decay_check(quad_sol, lam=1.5)
    with pytest.raises(ValueError):
        decay_check(quad_sol, classification={"label": "Reg"})


def test_decay_on_exact_quadratic(quad_sol):
    rep = decay_check(quad_sol, lam=2.0)
    assert rep["decays"]
