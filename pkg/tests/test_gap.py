import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from signorini_lab.gap import (
    certify_negative_gap,
    certify_positive_gap,
    count_low_modes,
    negative_epsilon,
    regular_gap,
)


def test_reference_constants_d3_m2():
    cert = certify_negative_gap(3, 2)
    assert cert.C1 == 16
    assert cert.C2 == Fraction(15, 4)
    assert 0.0015 <= cert.c_minus <= 0.0025
    assert cert.norm_sq == pytest.approx(2 * np.pi * 128 / 81, rel=1e-14)
    assert cert.epsilon == pytest.approx(negative_epsilon(3, 2))
    assert cert.c_minus == pytest.approx(9 * cert.epsilon / (1 + cert.epsilon))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_low_mode_count(d, m):
    # brute count of harmonic polynomial dimensions below degree 2m
    n = sum(comb(k + d - 1, d - 1) - (comb(k + d - 3, d - 1) if k >= 2 else 0) for k in range(2 * m))
    assert count_low_modes(d, m) == n


def test_low_mode_count_planar():
    # d = 2: 1 + 2 (2m - 1)
    for m in range(1, 6):
        assert count_low_modes(2, m) == 4 * m - 1


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_regular_gap_half(d):
    assert regular_gap(d) == 0.5


@pytest.mark.parametrize("gamma", [0.0, 1 / 3, 0.5])
def test_positive_gap_root(gamma):
    d, m, eps = 3, 2, 0.01
    t = certify_positive_gap(d, m, eps, gamma)
    A = 4 * m + d - 2
    assert (1 - eps * t**gamma) * (1 + t / A) == pytest.approx(1.0, abs=1e-13)
    # first sign change: negative just below the root
    assert (1 - eps * (0.99 * t) ** gamma) * (1 + 0.99 * t / A) < 1


def test_positive_gap_closed_form():
    assert certify_positive_gap(2, 1, 0.1, 0.0) == pytest.approx(0.1 * 4 / 0.9)


def test_positive_gap_domain():
    with pytest.raises(ValueError):
        certify_positive_gap(3, 1, 1.5, 0.2)
    with pytest.raises(ValueError):
        certify_positive_gap(3, 1, 0.1, 1.0)


def test_certificate_json():
    cert = certify_negative_gap(2, 1, eps_singular=0.05)
    data = json.loads(cert.to_json())
    assert data["C1"] == 3
    assert data["C2"] == str(cert.C2.numerator) + "/" + str(cert.C2.denominator)
    assert data["c_plus"] == pytest.approx(certify_positive_gap(2, 1, 0.05, 0.0))


def test_norm_quadrature_limited_to_low_dimensions():
    with pytest.raises(ValueError):
        certify_negative_gap(4, 1)


def test_c2_values_planar():
    # lambda(2m - 1/2) - lambda(2m - 1) = (2m - 1/2)^2 - (2m - 1)^2 in d = 2
    for m in (1, 2, 3):
        c = certify_negative_gap(2, m, eps_singular=0.01)
        assert c.C2 == Fraction(4 * m - 1, 2) ** 2 - (2 * m - 1) ** 2
