from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realroot.construction import CoefficientSchedule, ParameterError
from realroot.logeval import EvalRequest, Weight, dominance_margin, eval_sign
from realroot.noise import NoiseRealization, NoiseSpec, sample
from realroot.oracle import ReferenceEvaluator
from realroot.rootcount import PRECISION_LADDER
from realroot.xreal import XReal


def _linear():
    # g(t) = e^-1 - e^(t-2): root at t = 1
    return NoiseRealization.from_values([1.0, -1.0]), CoefficientSchedule.build("1/2", 1)


def test_linear_closed_form():
    r, s = _linear()
    assert eval_sign(EvalRequest(0.0), r, s).sign == 1
    assert eval_sign(EvalRequest(2.0), r, s).sign == -1
    res = eval_sign(EvalRequest(0.0), r, s)
    # |g(0)| = e^-1 - e^-2
    true = math.log(math.exp(-1) - math.exp(-2))
    assert float(res.log_lo) <= true <= float(res.log_hi)
    assert float(res.gap) > 0


@pytest.mark.parametrize("prec", PRECISION_LADDER)
def test_exact_cancellation_is_indeterminate(prec):
    r, s = _linear()
    assert eval_sign(EvalRequest(1.0, precision=prec), r, s).sign == 0


def test_all_positive():
    s = CoefficientSchedule.build("1/2", 300)
    r = NoiseRealization.from_values(np.full(301, 0.37))
    for t in (-1e6, -3.0, 0.0, 17.5, 1e4, XReal.pow2(3000)):
        assert eval_sign(EvalRequest(t), r, s).sign == 1


def test_request_validation():
    with pytest.raises(ParameterError):
        EvalRequest(0.0, axis="sideways")
    with pytest.raises(ParameterError):
        Weight("cubic")
    with pytest.raises(ParameterError):
        Weight.rescaled(5, 5)
    s = CoefficientSchedule.build("1/2", 10)
    with pytest.raises(ParameterError):
        Weight.rescaled_for_block(s, 3)


def test_margin_single_term():
    r = NoiseRealization.from_values([-0.3])
    s = CoefficientSchedule.build("1/2", 0)
    res = dominance_margin(0, 5.0, r, s, "full")
    assert res.sign == 1
    # c_0 |eps_0| / 2 with nothing to subtract
    assert float(res.log_lo) <= -1 + math.log(0.15) <= float(res.log_hi)


def test_margin_block16():
    s = CoefficientSchedule.build("1/2", 600)
    r = NoiseRealization.from_values(np.ones(601))
    res = dominance_margin(16, 640.0, r, s, "full")
    assert res.sign == 1
    # leader log-magnitude -2^16 + 512*640
    assert float(res.log_hi) == pytest.approx(262144 + math.log(0.5), abs=1e-6)
    # the nearest competitor is k = 511 in the same block, e^-640 below the leader
    assert float(res.gap) == pytest.approx(640 + math.log(0.5), abs=0.01)
    left = dominance_margin(16, 640.0, r, s, "left")
    assert left.sign == 1


def test_margin_adversarial_leader():
    # a 2^-61 leader loses ~42.3 nats; the window margin at a_11 (alpha = 1/2) is ~30
    s = CoefficientSchedule.build("1/2", 600)
    v = np.ones(601)
    v[242] = 2.0**-61
    r = NoiseRealization.from_values(v)
    a11 = s.window(11).a
    assert float(a11) < 60 * math.log(2)
    assert dominance_margin(11, a11, r, s, "full").sign in (-1, 0)
    assert dominance_margin(11, a11, NoiseRealization.from_values(np.ones(601)), s, "full").sign == 1


def test_margin_top():
    s = CoefficientSchedule.build("1/2", 600)
    r = NoiseRealization.from_values(np.ones(601))
    assert dominance_margin(s.j_star, XReal(s.top_start()) * 2, r, s, "top").sign == 1
    with pytest.raises(ParameterError):
        dominance_margin(99, 1.0, r, s, "full")


def _random_t(rng, r, s):
    from realroot.rootcount import t_domain

    lo, hi = t_domain(r, s)["positive"]
    lo, hi = float(lo), float(hi)
    return float(rng.uniform(lo - 1, hi + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32), st.sampled_from(["gaussian", "rademacher", "uniform"]),
       st.sampled_from(["0.5", "0.3", "0.7"]))
def test_soundness_against_reference(n, seed, kind, alpha):
    s = CoefficientSchedule.build(alpha, n)
    r = sample(NoiseSpec(kind), n, seed)
    ref = ReferenceEvaluator(r, s)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        t = _random_t(rng, r, s)
        axis = "positive" if rng.random() < 0.5 else "negative"
        w = [Weight(), Weight("derivative"), Weight.shifted(int(rng.integers(0, n + 1)), 2)][int(rng.integers(0, 3))]
        got = eval_sign(EvalRequest(t, axis, w), r, s)
        if got.sign != 0:
            assert got.sign == ref.sign(t, axis, w)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 150), st.integers(0, 2**32))
def test_axis_symmetry(n, seed):
    s = CoefficientSchedule.build("0.5", n)
    r = sample(NoiseSpec("gaussian"), n, seed)
    f = r.flipped_negative()
    rng = np.random.default_rng(seed)
    for _ in range(5):
        t = _random_t(rng, r, s)
        a = eval_sign(EvalRequest(t, "negative"), r, s)
        b = eval_sign(EvalRequest(t, "positive"), f, s)
        assert a.sign == b.sign


def test_precision_is_monotone():
    rng = np.random.default_rng(11)
    for seed in range(15):
        n = int(rng.integers(2, 120))
        s = CoefficientSchedule.build("0.5", n)
        r = sample(NoiseSpec("rademacher"), n, seed)
        for _ in range(10):
            t = _random_t(rng, r, s)
            prev = 0
            for prec in PRECISION_LADDER:
                sg = eval_sign(EvalRequest(t, precision=prec), r, s).sign
                if prev != 0:
                    assert sg == prev
                prev = sg or prev


def test_huge_t_beyond_float_range():
    # t far past 2**1024 must still produce a determinate answer (top term wins)
    s = CoefficientSchedule.build("0.7", 5000)
    r = sample(NoiseSpec("gaussian"), 5000, 3)
    t = XReal.pow2(1100)
    res = eval_sign(EvalRequest(t), r, s)
    assert res.sign == int(r.eps_sign[-1])
