"""Independent real-root oracle and reference signs in arb ball arithmetic.

This path shares nothing with :mod:`realroot.logeval` beyond the noise
arrays: the polynomial is summed directly (python-flint ``arb_poly``) with
no block structure and no log-sum-exp absorption.

On the positive axis ``f = P - N`` where ``P`` and ``N`` have nonnegative
coefficients and are therefore increasing in ``x > 0``.  On a cell
``[X1, X2]`` this gives ``f >= P(X1) - N(X2)`` and ``f <= P(X2) - N(X1)``,
and the same bounds on ``f'`` certify monotonicity.  Cells start uniform in
``asinh(t)`` over the Cauchy domain and are bisected adaptively; a cell that
cannot be decided is retried at doubled precision.  The negative axis uses
coefficients ``(-1)**k a_k``.
"""

from __future__ import annotations

import math
from typing import Optional

from fractions import Fraction

from flint import arb, arb_poly, ctx, fmpq

from .construction import CoefficientSchedule, ParameterError
from .logeval import Weight
from .noise import NoiseRealization
from .xreal import XReal

ORACLE_MAX_N = 2000
GRID_CELLS = 256
MAX_PRECISION = 4096
MIN_REL_WIDTH = Fraction(1, 2**120)


class OracleFailure(RuntimeError):
    """Two candidate roots could not be separated at the maximal precision."""


class _prec:
    def __init__(self, bits: int):
        self.bits = bits

    def __enter__(self):
        self.old = ctx.prec
        ctx.prec = self.bits

    def __exit__(self, *exc):
        ctx.prec = self.old


def _abs_coeffs(r: NoiseRealization, sched: CoefficientSchedule) -> list:
    blk = sched.block_index()
    two = arb(2)
    return [(arb(float(r.eps_logabs[k])) - two ** int(blk[k])).exp() for k in range(r.n + 1)]


def _split(r: NoiseRealization, sched: CoefficientSchedule, axis: str):
    mags = _abs_coeffs(r, sched)
    zero = arb(0)
    pos, neg = [], []
    for k, m in enumerate(mags):
        s = int(r.eps_sign[k])
        if axis == "negative" and k % 2 == 1:
            s = -s
        pos.append(m if s > 0 else zero)
        neg.append(m if s < 0 else zero)
    P, N = arb_poly(pos), arb_poly(neg)
    return P, N, P.derivative(), N.derivative()


def _to_arb(t) -> arb:
    t = XReal.of(t)
    if t.is_zero:
        return arb(0)
    return arb(t.m) * arb(2) ** t.e


def _cauchy_domain(r: NoiseRealization, sched: CoefficientSchedule) -> tuple[float, float]:
    mags = _abs_coeffs(r, sched)
    n = r.n
    top = mags[0]
    for m in mags[1:n]:
        top = top.max(m)
    x_hi = 1 + top / mags[n]
    low = mags[1]
    for m in mags[2:]:
        low = low.max(m)
    x_lo = mags[0] / (mags[0] + low)
    t_hi = float(x_hi.log().upper())
    t_lo = float(x_lo.log().lower())
    return math.nextafter(t_lo, -math.inf) - 1e-9, math.nextafter(t_hi, math.inf) + 1e-9


class _Axis:
    def __init__(self, r, sched, axis, prec):
        self.r, self.sched, self.axis, self.prec = r, sched, axis, prec
        with _prec(prec):
            self.polys = _split(r, sched, axis)
        self.cache: dict[tuple[float, int], arb] = {}

    def val(self, t: fmpq, which: int) -> arb:
        """``(P, N, P', N')[which]`` at ``x = e^t``, cached per endpoint."""
        key = (t, which)
        v = self.cache.get(key)
        if v is None:
            with _prec(self.prec):
                v = self.polys[which](arb(t).exp())
            self.cache[key] = v
        return v

    def sign_at(self, t: fmpq) -> int:
        with _prec(self.prec):
            v = self.val(t, 0) - self.val(t, 1)
        return 1 if v > 0 else (-1 if v < 0 else 0)

    def classify(self, t1: fmpq, t2: fmpq) -> Optional[int]:
        """Root count on ``[t1, t2]`` if decidable at this precision, else None."""
        v = self.val
        with _prec(self.prec):
            if v(t1, 0) - v(t2, 1) > 0 or v(t2, 0) - v(t1, 1) < 0:
                return 0
            mono = v(t1, 2) - v(t2, 3) > 0 or v(t2, 2) - v(t1, 3) < 0
        if not mono:
            return None
        s1, s2 = self.sign_at(t1), self.sign_at(t2)
        if s1 == 0 or s2 == 0:
            return None
        return 1 if s1 != s2 else 0


def _q(x: float) -> fmpq:
    f = Fraction(x)
    return fmpq(f.numerator, f.denominator)


def _count_axis(r, sched, axis, t_lo, t_hi, prec0) -> tuple[int, list]:
    """Cells start uniform in ``asinh(t)`` and are bisected with exact rational ends."""
    u_lo, u_hi = math.asinh(t_lo), math.asinh(t_hi)
    grid = [math.sinh(u_lo + (u_hi - u_lo) * i / GRID_CELLS) for i in range(GRID_CELLS + 1)]
    grid[0], grid[-1] = t_lo, t_hi
    grid = [_q(g) for g in sorted(set(grid))]
    engines: dict[int, _Axis] = {}

    def eng(p):
        if p not in engines:
            engines[p] = _Axis(r, sched, axis, p)
        return engines[p]

    min_rel = fmpq(MIN_REL_WIDTH.numerator, MIN_REL_WIDTH.denominator)
    total, roots = 0, []
    stack = [(grid[i], grid[i + 1], prec0) for i in range(len(grid) - 1)][::-1]
    while stack:
        t1, t2, p = stack.pop()
        got = eng(p).classify(t1, t2)
        if got is not None:
            total += got
            if got:
                roots.append((float(t1), float(t2)))
            continue
        scale = max(abs(t1), abs(t2), fmpq(1))
        if t2 - t1 > min_rel * scale:
            tm = (t1 + t2) / 2
            stack.append((tm, t2, p))
            stack.append((t1, tm, p))
        elif p < MAX_PRECISION:
            stack.append((t1, t2, 2 * p))
        else:
            raise OracleFailure(f"cannot separate roots near t in [{float(t1)!r}, {float(t2)!r}] on {axis} axis")
    roots.sort()
    return total, roots


def oracle_roots(r: NoiseRealization, sched: CoefficientSchedule, precision_bits: int = 256) -> dict:
    """Isolating t-intervals of the real roots, per axis."""
    if r.n != sched.n:
        raise ParameterError("realization and schedule degrees differ")
    if r.n > ORACLE_MAX_N:
        raise ParameterError(f"oracle is capped at n <= {ORACLE_MAX_N}")
    if r.n == 0:
        return {"positive": [], "negative": []}
    with _prec(precision_bits):
        t_lo, t_hi = _cauchy_domain(r, sched)
    out = {}
    for axis in ("positive", "negative"):
        _, roots = _count_axis(r, sched, axis, t_lo, t_hi, precision_bits)
        out[axis] = roots
    return out


def oracle_count(r: NoiseRealization, sched: CoefficientSchedule, precision_bits: int = 256) -> int:
    """Number of real roots of ``f_n``, from the independent arb path."""
    roots = oracle_roots(r, sched, precision_bits)
    return len(roots["positive"]) + len(roots["negative"])


class ReferenceEvaluator:
    """High-precision signs of ``sum_k w_k eps_k c_k (+-e^t)^k`` by direct summation."""

    def __init__(self, r: NoiseRealization, sched: CoefficientSchedule, precision_bits: int = MAX_PRECISION):
        self.r, self.sched, self.prec = r, sched, precision_bits
        with _prec(precision_bits):
            self.mags = _abs_coeffs(r, sched)
        self._polys: dict = {}

    def _poly(self, axis: str, weight: Weight) -> arb_poly:
        key = (axis, weight)
        P = self._polys.get(key)
        if P is None:
            with _prec(self.prec):
                cs = []
                for k, m in enumerate(self.mags):
                    s = int(self.r.eps_sign[k])
                    if axis == "negative" and k % 2 == 1:
                        s = -s
                    if weight.kind == "none":
                        w = arb(1)
                    elif weight.kind == "derivative":
                        w = arb(k)
                    elif weight.kind == "second":
                        w = arb(k * k)
                    elif weight.kind == "shifted":
                        w = arb(k - weight.p) ** weight.q
                    else:
                        w = arb(2 * k - weight.p - weight.q) / arb(weight.q - weight.p)
                    cs.append(m * w * s)
                P = self._polys[key] = arb_poly(cs)
        return P

    def sign(self, t, axis: str = "positive", weight: Weight = Weight()) -> int:
        P = self._poly(axis, weight)
        with _prec(self.prec):
            v = P(_to_arb(t).exp())
        return 1 if v > 0 else (-1 if v < 0 else 0)


def reference_sign(r: NoiseRealization, sched: CoefficientSchedule, t, axis: str = "positive",
                   weight: Weight = Weight(), precision_bits: int = MAX_PRECISION) -> int:
    return ReferenceEvaluator(r, sched, precision_bits).sign(t, axis, weight)

