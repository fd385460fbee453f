"""Certified log-domain evaluation of ``g(t) = f(e^t)`` and related sums.

Every term ``|w_k eps_k| c_k e^{kt}`` is handled through its log
``L_k = -2**j_k + k t + log|eps_k| + log|w_k|``.  Values of ``t`` and ``2**j``
far beyond the float range are brought into a per-point *frame*: all
components are scaled by ``2**-s`` so they fit a float, each ``L_k`` comes
with a rigorous absolute error bound, and only differences to an anchor
term are taken back to natural-log units.

Terms are screened per block segment with a geometric-series upper bound;
segments more than ``ABSORB`` below the anchor go into a counted tail whose
sign is unknown, the rest are summed exactly with a directed log-sum-exp.
Indeterminate answers are values, never errors; the caller escalates by
raising ``EvalRequest.precision`` (the high-precision path uses mpmath).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np

from .construction import CoefficientSchedule, ParameterError
from .noise import NoiseRealization
from .xreal import XReal

U = 2.0**-53
ABSORB = 4096.0
FLOOR = -4e307
_TINY = 2.0**-1060
_EPS_L = 6 * U
_LOG_HALF = math.log(0.5)

AXES = ("positive", "negative")


# -- weights ------------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    """Per-term multiplier: 1, ``k``, ``k**2``, ``(2k - p - q)/(q - p)`` or ``(k - p)**q``.

    The last (``shifted``, ``q`` in {1, 2}) gives the derivatives of ``e^{-pt} g(t)``.
    """

    kind: str = "none"
    p: int = 0
    q: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "derivative", "second", "rescaled", "shifted"):
            raise ParameterError(f"unknown weight {self.kind!r}")
        if self.kind == "rescaled" and not (0 <= self.p < self.q):
            raise ParameterError("rescaled weight needs 0 <= p < q")
        if self.kind == "shifted" and not (self.p >= 0 and self.q in (1, 2)):
            raise ParameterError("shifted weight needs center >= 0 and order 1 or 2")

    @classmethod
    def rescaled(cls, p: int, q: int) -> "Weight":
        return cls("rescaled", int(p), int(q))

    @classmethod
    def shifted(cls, c: int, order: int = 1) -> "Weight":
        return cls("shifted", int(c), int(order))

    @classmethod
    def rescaled_for_block(cls, sched: CoefficientSchedule, j: int) -> "Weight":
        """Weight of the transition after block ``j`` (top block uses leader ``n``)."""
        if j + 1 > sched.j_star:
            raise ParameterError("rescaled(j) requires j < j*")
        return cls.rescaled(sched.leader(j), sched.leader(j + 1))

    def log_abs(self, k: np.ndarray) -> np.ndarray:
        kf = k.astype(np.float64)
        with np.errstate(divide="ignore"):
            if self.kind == "none":
                return np.zeros_like(kf)
            if self.kind == "derivative":
                return np.log(kf)
            if self.kind == "second":
                return 2.0 * np.log(kf)
            if self.kind == "shifted":
                return self.q * np.log(np.abs(kf - self.p))
            return np.log(np.abs(2.0 * kf - (self.p + self.q))) - math.log(self.q - self.p)

    def sign(self, k: np.ndarray) -> np.ndarray:
        if self.kind in ("none", "derivative", "second"):
            return np.ones(k.shape, dtype=np.int8)
        if self.kind == "shifted":
            return (np.sign(k - self.p) ** self.q).astype(np.int8)
        return np.sign(2 * k - (self.p + self.q)).astype(np.int8)

    def seg_log_max(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Upper bound on ``log|w_k|`` over each ``[lo, hi]`` (-inf if all zero)."""
        with np.errstate(divide="ignore"):
            if self.kind == "none":
                return np.zeros(lo.shape)
            if self.kind == "derivative":
                return np.log(hi.astype(np.float64)) + 1e-15
            if self.kind == "second":
                return 2.0 * np.log(hi.astype(np.float64)) + 2e-15
            if self.kind == "shifted":
                m = np.maximum(np.abs(lo - self.p), np.abs(hi - self.p)).astype(np.float64)
                return self.q * np.log(m) + 2e-15
            s = self.p + self.q
            m = np.maximum(np.abs(2 * lo - s), np.abs(2 * hi - s)).astype(np.float64)
            return np.log(m) - math.log(self.q - self.p) + 1e-15


NO_WEIGHT = Weight()


# -- result types ---------------------------------------------------------------


@dataclass(frozen=True)
class SignedLogInterval:
    """Certified sign and log-magnitude bounds; ``sign == 0`` means indeterminate."""

    sign: int
    log_lo: Optional[XReal] = None
    log_hi: Optional[XReal] = None
    gap: Optional[XReal] = None

    @property
    def determinate(self) -> bool:
        return self.sign != 0

    def as_dict(self) -> dict:
        fmt = lambda x: None if x is None else str(x)  # noqa: E731
        return {"sign": self.sign, "log_lo": fmt(self.log_lo), "log_hi": fmt(self.log_hi), "gap": fmt(self.gap)}


INDETERMINATE = SignedLogInterval(0)


@dataclass(frozen=True)
class EvalRequest:
    t: XReal
    axis: str = "positive"
    weight: Weight = NO_WEIGHT
    precision: int = 53

    def __post_init__(self):
        if not isinstance(self.t, XReal):
            object.__setattr__(self, "t", XReal.of(self.t))
        if self.axis not in AXES:
            raise ParameterError(f"unknown axis {self.axis!r}")


# -- directed log-sum-exp ------------------------------------------------------------


def lse_up(x: np.ndarray) -> float:
    """Upper bound on ``log(sum(exp(x)))``."""
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    d = x - m
    s = float(np.sum(np.exp(d)))
    amax = min(-float(np.min(d)), 746.0)
    s_hi = s * (1.0 + U * (1.01 * amax + x.size + 16)) + x.size * 1e-300
    ls = math.log(s_hi)
    v = m + ls
    return v + 4 * U * (abs(m) + ls) + 1e-300


def lse_down(x: np.ndarray) -> float:
    """Lower bound on ``log(sum(exp(x)))``."""
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    d = x - m
    s = float(np.sum(np.exp(d)))
    amax = min(-float(np.min(d)), 746.0)
    s_lo = s * (1.0 - U * (1.01 * amax + x.size + 16))
    ls = math.log(s_lo)
    v = m + ls
    return v - 4 * U * (abs(m) + abs(ls)) - 1e-300


def log_sub_down(a: float, b: float) -> float:
    """Lower bound on ``log(e^a - e^b)`` for ``a > b``."""
    if b == -math.inf:
        return a
    r = math.log1p(-math.exp(b - a))
    return a + r - 4 * U * (abs(a) + abs(r)) - 8 * U - 1e-300


def _geo(t: float, count: np.ndarray) -> np.ndarray:
    """Upper bound on ``log sum_{i<count} e^{-i|t|}``."""
    lc = np.log(count.astype(np.float64))
    a = abs(t)
    if a == 0.0 or not math.isfinite(a):
        g = lc if a == 0.0 else np.zeros_like(lc)
    else:
        g = np.minimum(lc, -math.log1p(-math.exp(-a)) if a < 700 else 0.0)
    return g + 1e-13 + 4 * U * np.abs(g)


# -- per-realization term tables -------------------------------------------------------


class TermTable:
    """Block-structured views of one realization under one schedule."""

    def __init__(self, r: NoiseRealization, sched: CoefficientSchedule):
        if r.n != sched.n:
            raise ParameterError("realization and schedule degrees differ")
        self.n = r.n
        self.sched = sched
        self.loge = r.eps_logabs
        k = np.arange(self.n + 1)
        self.k = k
        self.kf = k.astype(np.float64)
        self.sign = {"positive": r.eps_sign,
                     "negative": (r.eps_sign * np.where(k % 2 == 1, -1, 1)).astype(np.int8)}
        self.blk = sched.block_index()
        self.blo, self.bhi = sched.block_bounds()
        self.bj = np.arange(len(self.blo), dtype=np.int64)
        self.bmaxe = np.maximum.reduceat(self.loge, self.blo)
        self.lam = None

    @classmethod
    def of(cls, r: NoiseRealization, sched: CoefficientSchedule) -> "TermTable":
        key = ("tt", sched.params.alpha, sched.n)
        tt = r._cache.get(key)
        if tt is None:
            tt = r._cache[key] = cls(r, sched)
        return tt

    def segments(self, ranges: Sequence[tuple[int, int]]):
        """Intersections of index ranges with blocks: (lo, hi, j, maxe) arrays."""
        los, his, js, es = [], [], [], []
        for a, b in ranges:
            a, b = max(int(a), 0), min(int(b), self.n)
            if a > b:
                continue
            ba, bb = int(self.blk[a]), int(self.blk[b])
            lo = self.blo[ba:bb + 1].copy()
            hi = self.bhi[ba:bb + 1].copy()
            e = self.bmaxe[ba:bb + 1].copy()
            if lo[0] != a:
                lo[0] = a
                e[0] = self.loge[a:hi[0] + 1].max()
            if hi[-1] != b:
                hi[-1] = b
                e[-1] = self.loge[lo[-1]:b + 1].max()
            los.append(lo)
            his.append(hi)
            js.append(self.bj[ba:bb + 1])
            es.append(e)
        if not los:
            z = np.empty(0, dtype=np.int64)
            return z, z, z, np.empty(0)
        return np.concatenate(los), np.concatenate(his), np.concatenate(js), np.concatenate(es)


class _Frame:
    """Scaled evaluation frame at one point ``t``."""

    __slots__ = ("t", "tf", "s", "ts")

    def __init__(self, t: XReal, n: int, jmax: int = 0):
        self.t = t
        self.tf = float(t)
        te = t.e if not t.is_zero else -(10**9)
        self.s = max(0, te + (n + 1).bit_length() + 2 - 1000, jmax - 1000)
        self.ts = 0.0 if t.is_zero else math.ldexp(t.m, t.e - self.s)

    def lvals(self, K: np.ndarray, J: np.ndarray, E: np.ndarray, W: np.ndarray):
        """Scaled ``L`` and its absolute error; entries with ``2**j`` past the frame are -inf."""
        s = self.s
        with np.errstate(over="ignore", invalid="ignore"):
            c1 = np.ldexp(1.0, np.clip(J - s, -1100, 1100).astype(np.int32))
            c2 = K * self.ts
            c3 = np.ldexp(E, -s) if s else E
            c4 = np.ldexp(W, -s) if s else W
            L = ((c2 - c1) + c3) + c4
            err = _EPS_L * (c1 + np.abs(c2) + np.abs(c3) + np.abs(c4)) + _TINY
        bad = ~np.isfinite(L)
        if bad.any():
            L = np.where(bad, -np.inf, L)
            err = np.where(bad, 0.0, err)
        return L, err

    def rel(self, L, err, La: float, ea: float):
        """Upper/lower bounds of ``L - La`` in natural-log units."""
        s = self.s
        with np.errstate(over="ignore", invalid="ignore"):
            D = L - La
            eD = (err + ea + 3 * U * np.abs(D)) * (1.0 + 1e-9)
            ub = np.ldexp(D + eD, s) if s else D + eD
            lb = np.ldexp(D - eD, s) if s else D - eD
        ub = np.where(np.isnan(ub) | (ub == -np.inf), FLOOR, ub)
        lb = np.where(np.isnan(lb), -np.inf, lb)
        return ub, lb

    def absolute(self, La: float, ea: float, rel: float, upper: bool) -> XReal:
        """``La * 2**s + rel`` rounded outward."""
        base = XReal(La + (ea if upper else -ea) * 1.0001, self.s)
        if math.isinf(rel):
            raise ValueError("infinite relative log")
        out = base + XReal(rel)
        return out.next_up().next_up() if upper else out.next_down().next_down()


class Evaluator:
    """All log-domain queries for one realization and schedule."""

    def __init__(self, r: NoiseRealization, sched: CoefficientSchedule):
        self.tt = TermTable.of(r, sched)
        self.n = self.tt.n
        self.sched = sched

    # -- single terms ---------------------------------------------------------

    def _term(self, fr: _Frame, k: int, weight: Weight):
        K = np.array([float(k)])
        J = np.array([int(self.tt.blk[k])])
        E = np.array([self.tt.loge[k]])
        W = weight.log_abs(np.array([k]))
        L, e = fr.lvals(K, J, E, W)
        return float(L[0]), float(e[0])

    def log_term(self, t, k: int, weight: Weight = NO_WEIGHT) -> tuple[XReal, XReal]:
        """Bounds on ``log(|w_k eps_k| c_k e^{kt})``."""
        t = XReal.of(t)
        fr = _Frame(t, self.n, int(self.tt.blk[k]))
        L, e = self._term(fr, k, weight)
        if L == -math.inf:
            raise ValueError("term weight is zero")
        return fr.absolute(L, e, 0.0, False), fr.absolute(L, e, 0.0, True)

    # -- segment screening ------------------------------------------------------

    def _screen(self, fr: _Frame, ranges, weight: Weight, La: float, ea: float, anchor: Optional[int] = None):
        """Split the index set into expanded term arrays and an absorbed-tail bound.

        Returns ``(k_expanded, ub, lb, tail_up)``, logs relative to the anchor.
        ``anchor`` (same weight as ``La``) gets the exact relative log 0 when its
        recomputed value is bit-identical to ``La``.
        """
        tt = self.tt
        lo, hi, J, E = tt.segments(ranges)
        if lo.size == 0:
            z = np.empty(0)
            return np.empty(0, dtype=np.int64), z, z, -math.inf
        W = weight.seg_log_max(lo, hi)
        live = W > -np.inf
        if not live.all():
            lo, hi, J, E, W = lo[live], hi[live], J[live], E[live], W[live]
            if lo.size == 0:
                z = np.empty(0)
                return np.empty(0, dtype=np.int64), z, z, -math.inf
        pos = fr.tf >= 0.0
        kext = hi if pos else lo
        L, err = fr.lvals(kext.astype(np.float64), J, E, W)
        ub, _ = fr.rel(L, err, La, ea)
        ub = ub + _geo(fr.tf, hi - lo + 1)
        expand = ub > -ABSORB
        tails = [ub[~expand]]
        ks = []
        if expand.any():
            at = abs(fr.tf)
            for a, b, j in zip(lo[expand], hi[expand], J[expand]):
                a, b = int(a), int(b)
                cnt = b - a + 1
                r = cnt if at == 0.0 else min(cnt, int(math.ceil((ABSORB + 60.0) / at)) + 1)
                if r >= cnt:
                    ks.append(np.arange(a, b + 1))
                    continue
                if pos:
                    ks.append(np.arange(b - r + 1, b + 1))
                    ra, rb, kx = a, b - r, b - r
                else:
                    ks.append(np.arange(a, a + r))
                    ra, rb, kx = a + r, b, a + r
                e_rest = float(tt.loge[ra:rb + 1].max())
                w_rest = weight.seg_log_max(np.array([ra]), np.array([rb]))
                Lr, er = fr.lvals(np.array([float(kx)]), np.array([int(j)]), np.array([e_rest]), w_rest)
                ubr, _ = fr.rel(Lr, er, La, ea)
                tails.append(ubr + _geo(fr.tf, np.array([rb - ra + 1])))
        tail = lse_up(np.concatenate(tails))
        if not ks:
            z = np.empty(0)
            return np.empty(0, dtype=np.int64), z, z, tail
        k = np.concatenate(ks)
        w = weight.log_abs(k)
        keep = w > -np.inf
        if not keep.all():
            k, w = k[keep], w[keep]
        L, err = fr.lvals(tt.kf[k], tt.blk[k], tt.loge[k], w)
        ub, lb = fr.rel(L, err, La, ea)
        if anchor is not None:
            self_ = (k == anchor) & (L == La)
            if self_.any():
                ub = np.where(self_, 0.0, ub)
                lb = np.where(self_, 0.0, lb)
        return k, ub, lb, tail

    def _anchor(self, fr: _Frame, ranges, weight: Weight) -> int:
        """Index of (approximately) the largest term among ``ranges``."""
        tt = self.tt
        lo, hi, J, E = tt.segments(ranges)
        W = weight.seg_log_max(lo, hi)
        live = W > -np.inf
        lo, hi, J, E, W = lo[live], hi[live], J[live], E[live], W[live]
        if lo.size == 0:
            raise ValueError("no terms with nonzero weight")
        kext = hi if fr.tf >= 0 else lo
        L, _ = fr.lvals(kext.astype(np.float64), J, E, W)
        i = int(np.argmax(L))
        a, b = int(lo[i]), int(hi[i])
        span = b - a + 1
        if fr.tf != 0 and span > 64:
            r = min(span, int(math.ceil(64.0 / abs(fr.tf))) + 1)
            a, b = (b - r + 1, b) if fr.tf >= 0 else (a, a + r - 1)
        k = np.arange(a, b + 1)
        w = weight.log_abs(k)
        Lk, _ = fr.lvals(tt.kf[k], tt.blk[k], tt.loge[k], w)
        return int(k[int(np.argmax(Lk))])

    def argmax_term(self, t, weight: Weight = NO_WEIGHT) -> int:
        t = XReal.of(t)
        fr = _Frame(t, self.n)
        return self._anchor(fr, [(0, self.n)], weight)

    # -- public queries -----------------------------------------------------------

    def mass_ratio(self, t, anchor: int, ranges, weight: Weight = NO_WEIGHT,
                   anchor_weight: Optional[Weight] = None) -> tuple[float, float]:
        """Bounds on ``log(sum_{ranges} T_i(t) / T_anchor(t))`` (``T`` weighted, unsigned).

        The anchor uses ``anchor_weight`` when given, else ``weight``.
        """
        t = XReal.of(t)
        fr = _Frame(t, self.n, int(self.tt.blk[anchor]))
        La, ea = self._term(fr, anchor, weight if anchor_weight is None else anchor_weight)
        if La == -math.inf:
            return math.inf, math.inf
        k, ub, lb, tail = self._screen(fr, ranges, weight, La, ea, anchor if anchor_weight is None else None)
        hi = lse_up(np.append(ub, tail))
        lo = lse_down(lb)
        return lo, hi

    def log_mass(self, t, ranges, weight: Weight = NO_WEIGHT) -> tuple[XReal, XReal]:
        """Absolute bounds on ``log sum_{ranges} T_i(t)``."""
        t = XReal.of(t)
        fr0 = _Frame(t, self.n)
        a = self._anchor(fr0, ranges, weight)
        fr = _Frame(t, self.n, int(self.tt.blk[a]))
        La, ea = self._term(fr, a, weight)
        k, ub, lb, tail = self._screen(fr, ranges, weight, La, ea, a)
        hi = lse_up(np.append(ub, tail))
        lo = lse_down(lb)
        return fr.absolute(La, ea, lo, False), fr.absolute(La, ea, hi, True)

    def eval_sign(self, req: EvalRequest) -> SignedLogInterval:
        if req.precision > 53:
            return self._eval_mp(req)
        fr0 = _Frame(req.t, self.n)
        a = self._anchor(fr0, [(0, self.n)], req.weight)
        fr = _Frame(req.t, self.n, int(self.tt.blk[a]))
        La, ea = self._term(fr, a, req.weight)
        k, ub, lb, tail = self._screen(fr, [(0, self.n)], req.weight, La, ea, a)
        sg = self.tt.sign[req.axis][k] * req.weight.sign(k)
        pos, neg = sg > 0, sg < 0
        p_hi, p_lo = lse_up(ub[pos]), lse_down(lb[pos])
        n_hi, n_lo = lse_up(ub[neg]), lse_down(lb[neg])
        return _decide(fr, La, ea, p_lo, p_hi, n_lo, n_hi, tail)

    def _eval_mp(self, req: EvalRequest) -> SignedLogInterval:
        """Same screening, expanded terms summed in mpmath at ``req.precision`` bits."""
        tt = self.tt
        fr0 = _Frame(req.t, self.n)
        a = self._anchor(fr0, [(0, self.n)], req.weight)
        fr = _Frame(req.t, self.n, int(tt.blk[a]))
        La, ea = self._term(fr, a, req.weight)
        k, ub, lb, tail = self._screen(fr, [(0, self.n)], req.weight, La, ea)
        prec = int(req.precision)
        with mpmath.workprec(prec + 20):
            tm = req.t.to_mpf()
            eps = mpmath.ldexp(1, -prec)
            w = req.weight
            sg = tt.sign[req.axis][k] * w.sign(k)

            def logw(i: int):
                if w.kind == "none":
                    return mpmath.mpf(0)
                if w.kind == "derivative":
                    return mpmath.log(i)
                if w.kind == "second":
                    return 2 * mpmath.log(i)
                if w.kind == "shifted":
                    return w.q * mpmath.log(abs(i - w.p))
                return mpmath.log(abs(mpmath.mpf(2 * i - w.p - w.q)) / (w.q - w.p))

            def lterm(i: int):
                return -mpmath.ldexp(1, int(tt.blk[i])) + i * tm + mpmath.mpf(float(tt.loge[i])) + logw(i)

            ia = a
            la = lterm(ia)
            scale_a = mpmath.ldexp(1, int(tt.blk[ia])) + abs(ia * tm) + abs(tt.loge[ia]) + 1
            total = mpmath.mpf(0)
            bound = mpmath.mpf(0)
            for i, s_i in zip(k.tolist(), sg.tolist()):
                d = lterm(i) - la
                if d < -ABSORB:
                    term = mpmath.exp(d)
                    bound += term
                    continue
                scale = mpmath.ldexp(1, int(tt.blk[i])) + abs(i * tm) + abs(tt.loge[i]) + 1
                ed = 8 * eps * (scale + scale_a + abs(d))
                term = mpmath.exp(d)
                total += term if s_i > 0 else -term
                bound += term * (mpmath.expm1(ed * 1.01) + (len(k) + 8) * eps)
            tail_m = mpmath.exp(mpmath.mpf(tail)) if tail > -math.inf else mpmath.mpf(0)
            slack = bound + tail_m
            mag = abs(total)
            if mag <= slack:
                return INDETERMINATE
            sign = 1 if total > 0 else -1
            lo_rel = float(mpmath.log(mag - slack)) - 1e-12 * (1 + abs(float(mpmath.log(mag - slack))))
            hi_rel = float(mpmath.log(mag + slack)) + 1e-12 * (1 + abs(float(mpmath.log(mag + slack))))
            gap = float(mpmath.log(mag) - mpmath.log(slack)) if slack > 0 else math.inf
            gap = gap - 1e-9 * (1 + abs(gap)) if math.isfinite(gap) else 1e300
        # the mp path must not report a gap it cannot certify
        if gap <= 0:
            return INDETERMINATE
        return SignedLogInterval(sign, fr.absolute(La, ea, lo_rel, False),
                                 fr.absolute(La, ea, hi_rel, True), XReal(gap))

    def dominance_margin(self, j: int, t, side: str = "full", factor: float = 0.5) -> SignedLogInterval:
        """Enclosure of ``factor * T_l(t) - sum_{side} T_i(t)`` for leader ``l`` of block ``j``.

        ``side='top'`` uses leader ``n`` against every lower term with factor 1.
        """
        sched = self.sched
        if side == "top":
            lead, ranges, factor = self.n, [(0, self.n - 1)], 1.0
        else:
            if not (0 <= j <= sched.j_star):
                raise ParameterError("block index outside 0..j*")
            lead = sched.leader(j)
            left, right = (0, lead - 1), (lead + 1, self.n)
            ranges = {"full": [left, right], "left": [left], "right": [right]}.get(side)
            if ranges is None:
                raise ParameterError(f"unknown side {side!r}")
        t = XReal.of(t)
        fr = _Frame(t, self.n, int(self.tt.blk[lead]))
        La, ea = self._term(fr, lead, NO_WEIGHT)
        k, ub, lb, tail = self._screen(fr, ranges, NO_WEIGHT, La, ea)
        m_hi = lse_up(np.append(ub, tail))
        m_lo = lse_down(lb)
        lf = math.log(factor)
        lf_lo, lf_hi = lf - 2 * U * abs(lf) - 1e-300, lf + 2 * U * abs(lf) + 1e-300
        if m_hi < lf_lo:
            return SignedLogInterval(1, fr.absolute(La, ea, log_sub_down(lf_lo, m_hi), False),
                                     fr.absolute(La, ea, lf_hi, True),
                                     XReal(lf_lo - m_hi if m_hi > -math.inf else 1e300))
        if m_lo > lf_hi:
            return SignedLogInterval(-1, fr.absolute(La, ea, log_sub_down(m_lo, lf_hi), False),
                                     fr.absolute(La, ea, m_hi, True), XReal(m_lo - lf_hi))
        return INDETERMINATE

    def block_partials(self, t, axis: str = "positive") -> list[dict]:
        """Per-block log mass upper bounds at ``t`` (debug output)."""
        t = XReal.of(t)
        tt = self.tt
        out = []
        for j in range(len(tt.blo)):
            lo_, hi_ = self.log_mass(t, [(int(tt.blo[j]), int(tt.bhi[j]))])
            out.append({"j": j, "lo": int(tt.blo[j]), "hi": int(tt.bhi[j]),
                        "log_mass_lo": str(lo_), "log_mass_hi": str(hi_),
                        "leader_sign": int(tt.sign[axis][self.sched.leader(j)])})
        return out


def _decide(fr: _Frame, La: float, ea: float, p_lo, p_hi, n_lo, n_hi, tail) -> SignedLogInterval:
    opp_n = lse_up(np.array([n_hi, tail]))
    if p_lo > opp_n and p_lo > -math.inf:
        gap = p_lo - opp_n
        lo = log_sub_down(p_lo, opp_n)
        hi = lse_up(np.array([p_hi, tail]))
        return SignedLogInterval(1, fr.absolute(La, ea, lo, False), fr.absolute(La, ea, hi, True),
                                 XReal(gap if math.isfinite(gap) else 1e300))
    opp_p = lse_up(np.array([p_hi, tail]))
    if n_lo > opp_p and n_lo > -math.inf:
        gap = n_lo - opp_p
        lo = log_sub_down(n_lo, opp_p)
        hi = lse_up(np.array([n_hi, tail]))
        return SignedLogInterval(-1, fr.absolute(La, ea, lo, False), fr.absolute(La, ea, hi, True),
                                 XReal(gap if math.isfinite(gap) else 1e300))
    return INDETERMINATE


def evaluator(r: NoiseRealization, sched: CoefficientSchedule) -> Evaluator:
    key = ("ev", sched.params.alpha, sched.n)
    ev = r._cache.get(key)
    if ev is None:
        ev = r._cache[key] = Evaluator(r, sched)
    return ev


def eval_sign(req: EvalRequest, r: NoiseRealization, sched: CoefficientSchedule) -> SignedLogInterval:
    """Certified sign of ``sum_k w_k eps_k c_k (+-e^t)^k`` at ``req.t``."""
    return evaluator(r, sched).eval_sign(req)


def dominance_margin(j: int, t, r: NoiseRealization, sched: CoefficientSchedule,
                     side: str = "full", factor: float = 0.5) -> SignedLogInterval:
    return evaluator(r, sched).dominance_margin(j, t, side, factor)
