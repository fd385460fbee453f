"""Deterministic block-exponential coefficient schedule.

For ``0 < alpha < 1`` the block boundaries are ``m_j = 2*floor(j**(1/alpha))``
(``m_{-1} = -1``), block ``I_j = (m_{j-1}, m_j]`` carries the coefficient
``c_k = exp(-2**j)``, and the leader of block ``j`` dominates the polynomial
on the dominance window ``[a_j, b_j]`` in exponential coordinates ``t``.

``alpha`` is held as an exact :class:`~fractions.Fraction` so the floors are
computed with integer arithmetic (``0.7`` means ``7/10``).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Union

import gmpy2
import mpmath
import numpy as np

from .xreal import XReal

J_HORIZON = 2**20
ORDER_SCAN_HORIZON = 10**5

AlphaLike = Union[Fraction, float, int, str]


class ParameterError(ValueError):
    """Invalid parameter passed to a public operation."""


def as_fraction(alpha: AlphaLike) -> Fraction:
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, bool):
        raise ParameterError("alpha must be a number")
    if isinstance(alpha, int):
        return Fraction(alpha)
    if isinstance(alpha, float):
        if not math.isfinite(alpha):
            raise ParameterError(f"alpha must be finite, got {alpha!r}")
        # shortest repr, so 0.7 is read as 7/10 rather than its binary neighbour
        return Fraction(repr(alpha))
    try:
        return Fraction(str(alpha).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse alpha {alpha!r}") from exc


def _pow_gt(j: int, expo: Fraction, rhs: int) -> bool:
    """Exact test of ``j**expo > rhs`` for a positive rational exponent."""
    return j ** expo.numerator > rhs ** expo.denominator


def floor_root_power(j: int, alpha: Fraction) -> int:
    """``floor(j**(1/alpha))``, exact.

    Small-denominator alphas use an integer root of ``j**b`` (``alpha = a/b``).
    Otherwise a float candidate is corrected with 256-bit guards; ties are
    impossible there except for ``j in (0, 1)``.
    """
    if j < 0:
        raise ParameterError("j must be nonnegative")
    if j <= 1:
        return j
    a, b = alpha.numerator, alpha.denominator
    if a <= 10_000 and b <= 10_000:
        root, _ = gmpy2.iroot(gmpy2.mpz(j) ** b, a)
        return int(root)
    inv = 1.0 / float(alpha)
    r = int(math.floor(j**inv))
    with mpmath.workprec(256):
        target = mpmath.log(j) / mpmath.mpf(alpha.numerator) * alpha.denominator
        while r > 0 and mpmath.log(r) > target:
            r -= 1
        while mpmath.log(r + 1) <= target:
            r += 1
    return r


class _MTable:
    """Lazily extended list of ``m_j`` for one alpha."""

    def __init__(self, alpha: Fraction):
        self.alpha = alpha
        self.m: list[int] = [0]

    def extend_to(self, j: int) -> None:
        if j > J_HORIZON:
            raise ParameterError(f"block index {j} beyond supported horizon 2**20")
        m, alpha = self.m, self.alpha
        for i in range(len(m), j + 1):
            m.append(2 * floor_root_power(i, alpha))

    def get(self, j: int) -> int:
        if j == -1:
            return -1
        if j < -1:
            raise ParameterError("block index must be >= -1")
        if j >= len(self.m):
            self.extend_to(max(j, 2 * len(self.m)) if j < J_HORIZON // 2 else j)
        return self.m[j]

    def block_of(self, k: int) -> int:
        if k < 0:
            raise ParameterError("index k must be nonnegative")
        while self.m[-1] < k:
            nxt = min(2 * len(self.m), J_HORIZON)
            if nxt < len(self.m):
                raise ParameterError(f"index {k} beyond supported horizon")
            self.extend_to(nxt)
        return bisect.bisect_left(self.m, k)


@lru_cache(maxsize=64)
def _table(alpha: Fraction) -> _MTable:
    return _MTable(alpha)


@dataclass(frozen=True)
class AlphaParams:
    """``alpha``, the window exponent ``beta`` and the first ordered window ``j0``."""

    alpha: Fraction
    beta: Fraction
    j0: int

    @property
    def alpha_f(self) -> float:
        return float(self.alpha)

    @property
    def beta_f(self) -> float:
        return float(self.beta)


@dataclass(frozen=True)
class Window:
    j: int
    a: XReal
    b: XReal

    @property
    def nonempty(self) -> bool:
        return self.a < self.b


def _first_nonempty_window(beta: Fraction) -> int:
    # a_j < b_j  <=>  3 j**(-beta) < 1  <=>  j**beta > 3
    j = max(1, int(3.0 ** (1.0 / float(beta))) - 2)
    while not _pow_gt(j, beta, 3):
        j += 1
    while j > 1 and _pow_gt(j - 1, beta, 3):
        j -= 1
    return j


def _ordering_violations(alpha: Fraction, beta: Fraction, j_lo: int, j_hi: int) -> np.ndarray:
    """Indices j in [j_lo, j_hi] with b_j >= a_{j+1} (scale-free log comparison)."""
    if j_lo > j_hi:
        return np.empty(0, dtype=np.int64)
    j = np.arange(j_lo, j_hi + 1, dtype=np.float64)
    af, bf = float(alpha), float(beta)
    lhs = (1.0 - 1.0 / af) * (np.log(j) - np.log1p(j)) + np.log1p(-(j ** -bf)) - np.log1p((j + 1.0) ** -bf)
    return np.nonzero(lhs >= -1e-12)[0].astype(np.int64) + j_lo


def make_params(alpha: AlphaLike) -> AlphaParams:
    a = as_fraction(alpha)
    if not (0 < a < 1):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    beta = min(Fraction(1, 2), (1 - a) / (2 * a))
    j0 = _first_nonempty_window(beta)
    if j0 <= ORDER_SCAN_HORIZON:
        bad = _ordering_violations(a, beta, j0, ORDER_SCAN_HORIZON)
        if bad.size:
            j0 = int(bad[-1]) + 1
    return AlphaParams(alpha=a, beta=beta, j0=j0)


def _params(p: Union[AlphaParams, AlphaLike]) -> AlphaParams:
    return p if isinstance(p, AlphaParams) else make_params(p)


def m_of(params: Union[AlphaParams, AlphaLike], j: int) -> int:
    """``m_j = 2*floor(j**(1/alpha))`` with ``m_{-1} = -1``."""
    return _table(_params(params).alpha).get(j)


def block_of(params: Union[AlphaParams, AlphaLike], k: int) -> int:
    """The unique ``j`` with ``m_{j-1} < k <= m_j``."""
    return _table(_params(params).alpha).block_of(k)


def j_star(params: Union[AlphaParams, AlphaLike], n: int) -> int:
    if n < 0:
        raise ParameterError("degree n must be nonnegative")
    return block_of(params, n)


def log_c(params: Union[AlphaParams, AlphaLike], k: int) -> XReal:
    """``log c_k = -2**j`` for ``k`` in block ``j``; exact."""
    return -XReal.pow2(block_of(params, k))


def window(params: Union[AlphaParams, AlphaLike], j: int) -> Window:
    """Dominance window ``[a_j, b_j]`` (natural-log units, ~1e-15 relative accuracy)."""
    p = _params(params)
    if j < 1:
        raise ParameterError("windows are defined for j >= 1")
    if j > J_HORIZON:
        raise ParameterError(f"block index {j} beyond supported horizon 2**20")
    af, bf = p.alpha_f, p.beta_f
    base = af * float(j) ** (1.0 - 1.0 / af)
    x = float(j) ** -bf
    return Window(j, XReal(base * (1.0 + x), j - 2), XReal(base * (1.0 - x), j - 1))


@dataclass
class CoefficientSchedule:
    """The construction truncated at degree ``n``."""

    params: AlphaParams
    n: int
    j_star: int = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError("degree n must be nonnegative")
        self.j_star = j_star(self.params, self.n)

    @classmethod
    def build(cls, alpha: Union[AlphaParams, AlphaLike], n: int) -> "CoefficientSchedule":
        return cls(_params(alpha), int(n))

    def m(self, j: int) -> int:
        return m_of(self.params, j)

    def leader(self, j: int) -> int:
        """Dominant index of block ``j``; ``n`` for the (possibly incomplete) top block."""
        return self.n if j >= self.j_star else self.m(j)

    def block_of(self, k: int) -> int:
        return block_of(self.params, k)

    def log_c(self, k: int) -> XReal:
        return log_c(self.params, k)

    def window(self, j: int) -> Window:
        key = ("w", j)
        w = self._cache.get(key)
        if w is None:
            w = self._cache[key] = window(self.params, j)
        return w

    def top_start(self) -> XReal:
        """Left end of the half-line where leader ``n`` should dominate.

        For an incomplete top block the crossing between ``m_{j*-1}`` and ``n``
        sits later than ``a_{j*}``; the start is moved to that crossing times
        ``1 + j*^-beta`` so the top window keeps the same relative margin.
        """
        js = self.j_star
        if js < 1:
            return XReal(0.0)
        a = self.window(js).a
        if self.n == self.m(js):
            return a
        d = self.n - self.m(js - 1)
        cross = XReal.pow2(js - 1) / d
        shifted = cross * (1.0 + float(js) ** -self.params.beta_f)
        return shifted if shifted > a else a

    def m_array(self) -> np.ndarray:
        """``m_0 .. m_{j*}`` as int64 (clipped block ends use :meth:`block_bounds`)."""
        arr = self._cache.get("m")
        if arr is None:
            arr = np.array([self.m(j) for j in range(self.j_star + 1)], dtype=np.int64)
            self._cache["m"] = arr
        return arr

    def block_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """First and last index of each block 0..j*, the last one clipped to ``n``."""
        got = self._cache.get("bounds")
        if got is None:
            m = self.m_array()
            lo = np.empty_like(m)
            lo[0] = 0
            lo[1:] = m[:-1] + 1
            hi = m.copy()
            hi[-1] = self.n
            got = self._cache["bounds"] = (lo, hi)
        return got

    def block_index(self) -> np.ndarray:
        """Block number of every ``k`` in ``0..n``."""
        arr = self._cache.get("blk")
        if arr is None:
            lo, hi = self.block_bounds()
            arr = np.repeat(np.arange(self.j_star + 1, dtype=np.int64), hi - lo + 1)
            self._cache["blk"] = arr
        return arr

    def k0(self) -> int:
        """Near-origin cut: ``max(j0, ceil(log n))``."""
        ln = math.log(self.n) if self.n > 1 else 0.0
        return max(self.params.j0, math.ceil(ln), 1)
