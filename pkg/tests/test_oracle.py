from __future__ import annotations

import math

import numpy as np
import pytest

from realroot.construction import CoefficientSchedule, ParameterError
from realroot.noise import NoiseRealization, NoiseSpec, sample
from realroot.oracle import ORACLE_MAX_N, oracle_count, oracle_roots, reference_sign


def test_linear():
    r = NoiseRealization.from_values([1.0, -1.0])
    s = CoefficientSchedule.build("1/2", 1)
    roots = oracle_roots(r, s)
    assert len(roots["positive"]) == 1 and roots["negative"] == []
    lo, hi = roots["positive"][0]
    assert lo <= 1.0 <= hi


@pytest.mark.parametrize("signs", [(1, 1, 1), (1, -1, 1)])
def test_quadratic_negative_discriminant(signs):
    # c = (e^-1, e^-2, e^-2): discriminant e^-4 - 4 e^-3 < 0
    assert math.exp(-4) - 4 * math.exp(-3) < 0
    r = NoiseRealization.from_values(list(signs))
    assert oracle_count(r, CoefficientSchedule.build("1/2", 2)) == 0


def test_quadratic_two_roots():
    # eps = (+1, 10, +1): (10 e^-2)^2 - 4 e^-1 e^-2 > 0, both roots negative
    r = NoiseRealization.from_values([1.0, 10.0, 1.0])
    roots = oracle_roots(r, CoefficientSchedule.build("1/2", 2))
    assert len(roots["negative"]) == 2 and roots["positive"] == []


def test_against_numpy_roots():
    # moderate degree where float64 root finding is still trustworthy
    for seed in range(6):
        s = CoefficientSchedule.build("1/2", 7)
        r = sample(NoiseSpec("gaussian"), 7, seed)
        coeffs = [float(np.exp(-(2.0 ** s.block_of(k)))) * r.values()[k] for k in range(8)]
        z = np.roots(coeffs[::-1])
        real = int(np.sum(np.abs(z.imag) < 1e-9 * np.maximum(1, np.abs(z))))
        assert oracle_count(r, s) == real


def test_reference_sign_linear():
    r = NoiseRealization.from_values([1.0, -1.0])
    s = CoefficientSchedule.build("1/2", 1)
    assert reference_sign(r, s, 0.5) == 1 and reference_sign(r, s, 1.5) == -1


def test_cap():
    n = ORACLE_MAX_N + 1
    with pytest.raises(ParameterError):
        oracle_count(sample(NoiseSpec(), n, 0), CoefficientSchedule.build("1/2", n))


def test_deterministic():
    s = CoefficientSchedule.build("0.5", 120)
    r = sample(NoiseSpec("gaussian"), 120, 8)
    assert oracle_roots(r, s) == oracle_roots(r, s)
