"""Certified real-root counting for ``f_n`` on both half-lines.

Every certificate rests on one fact: for ``i < l`` the ratio
``T_i(t)/T_l(t) = const * e^{(i-l)t}`` decreases in ``t`` and for ``i > l``
it increases, where ``T_k(t) = |w_k eps_k| c_k e^{kt}``.  Mass bounds taken
at the two ends of an interval therefore hold on the whole interval.

* single leader ``l`` on ``[lo, hi]``: left mass at ``lo`` plus right mass at
  ``hi`` below ``T_l`` gives a constant sign (no root);
* two leaders ``p < q`` with equal signs: left mass at ``lo`` (relative to
  ``T_p``), right mass at ``hi`` (relative to ``T_q``) and the middle mass at
  any pivot ``sigma`` (relative to both) with ``max(L, R) + M < 1`` gives a
  constant sign;
* opposite signs: the same test on the weights ``|2i - p - q|/(q - p)``
  makes the rescaled derivative one-signed, so there is at most one root and
  the endpoint signs decide it.

Dominance windows ``[a_j, b_j]`` and the transitions between them are
certified this way for ``j >= k0 = max(j0, ceil(log n))``.  Below ``a_{k0}``
the interval is cut at midpoints between the tie points of the upper convex
hull of ``(k, log|a_k|)``, the same tests are applied per piece, and what
remains is bisected with mean-value tests; regions that resist are covered
by a Rouche disk bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .construction import CoefficientSchedule, ParameterError
from .logeval import (NO_WEIGHT, U, EvalRequest, Evaluator, SignedLogInterval, Weight, evaluator,
                      lse_up)
from .noise import NoiseRealization, sign_changes
from .xreal import XReal, format_sci

PRECISION_LADDER = (53, 128, 512, 4096)
_LOG_HALF = math.log(0.5)


# -- report types --------------------------------------------------------------------


@dataclass
class RootInterval:
    axis: str
    lo: XReal
    hi: XReal
    tag: str

    def as_dict(self) -> dict:
        return {"lo": format_sci(self.lo), "hi": format_sci(self.hi), "tag": self.tag}


@dataclass
class Certificate:
    j: int
    kind: str
    outcome: str
    gap: Optional[float] = None
    factor: Optional[str] = None
    axis: Optional[str] = None

    def as_dict(self) -> dict:
        d = asdict(self)
        if d["gap"] is not None:
            d["gap"] = float(d["gap"]) if math.isfinite(d["gap"]) else None
        return {k: v for k, v in d.items() if v is not None or k in ("gap",)}


@dataclass
class CountOptions:
    max_precision: int = 4096
    max_depth: int = 200
    node_budget: int = 4000
    factor: float = 0.5
    refine: bool = True

    @property
    def ladder(self) -> tuple[int, ...]:
        return tuple(p for p in PRECISION_LADDER if p <= max(53, self.max_precision))


@dataclass
class RootCountReport:
    status: str
    count_lo: int
    count_hi: int
    predicted: int
    roots: list = field(default_factory=list)
    indeterminate_regions: list = field(default_factory=list)
    per_axis: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def count(self) -> Optional[int]:
        return self.count_lo if self.status == "exact" else None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "count": self.count,
            "count_lo": self.count_lo,
            "count_hi": self.count_hi,
            "predicted": self.predicted,
            "per_axis": self.per_axis,
            "certificates": [c.as_dict() for c in self.certificates],
            "indeterminate_regions": [
                {"axis": ax, "lo": format_sci(a), "hi": format_sci(b)} for ax, a, b in self.indeterminate_regions
            ],
            "warnings": list(self.warnings),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass(frozen=True)
class WindowResult:
    outcome: str  # "no_root" or "failed"
    sign: int = 0
    factor: Optional[str] = None
    gap: Optional[float] = None


@dataclass(frozen=True)
class TransitionResult:
    outcome: str  # "no_root", "single_root" or "failed"
    interval: Optional[tuple[XReal, XReal]] = None
    gap: Optional[float] = None


@dataclass(frozen=True)
class RoucheResult:
    outcome: str  # "at_most" or "failed"
    bound: Optional[int] = None
    gap: Optional[float] = None


# -- small helpers ------------------------------------------------------------------------


def _check(r: NoiseRealization, sched: CoefficientSchedule) -> None:
    if r.n != sched.n:
        raise ParameterError("realization and schedule degrees differ")


def _eff_sign(r: NoiseRealization, k: int, axis: str) -> int:
    s = int(r.eps_sign[k])
    return -s if (axis == "negative" and k % 2 == 1) else s


def _softplus_up(x: XReal) -> XReal:
    """Upper bound on ``log(1 + e^x)``."""
    xf = float(x)
    if xf > 40.0 or math.isinf(xf):
        return (x + 1e-17).next_up().next_up()
    v = math.log1p(math.exp(xf)) if xf < 700 else xf
    return XReal(v * (1 + 4 * U) + 1e-300)


def _lam(r: NoiseRealization, sched: CoefficientSchedule, k: int) -> XReal:
    return -XReal.pow2(int(sched.block_index()[k])) + float(r.eps_logabs[k])


def _mid(a: XReal, b: XReal) -> XReal:
    return (a + b).ldexp(-1)


def predict(r: NoiseRealization, sched: CoefficientSchedule) -> int:
    """Sign changes of the leader sequence on both half-lines."""
    _check(r, sched)
    return sign_changes(r, sched, "positive") + sign_changes(r, sched, "negative")


def t_domain(r: NoiseRealization, sched: CoefficientSchedule) -> dict:
    """Cauchy bounds ``(t_min, t_max)`` in log-coordinates, the same on both axes.

    ``None`` for ``n = 0`` (a nonzero constant has no roots).
    """
    _check(r, sched)
    n = r.n
    if n == 0:
        return {"positive": None, "negative": None}
    lam = _float_lams(r, sched)
    ln = _lam(r, sched, n)
    top = float(np.max(lam[:n]))
    t_max = _softplus_up(XReal(top) - ln)
    low = float(np.max(lam[1:]))
    t_min = -_softplus_up(XReal(low) - XReal(float(lam[0])))
    # lam entries carry one rounding each; widen by a relative hair
    t_max = (t_max + XReal(1e-9) + t_max * 1e-12).next_up()
    t_min = (t_min - XReal(1e-9) - abs(t_min) * 1e-12).next_down()
    dom = (t_min, t_max)
    return {"positive": dom, "negative": dom}


def _float_lams(r: NoiseRealization, sched: CoefficientSchedule) -> np.ndarray:
    """``log|a_k|`` in float; blocks past ``2**1000`` are clamped (never maximal)."""
    j = sched.block_index()
    with np.errstate(over="ignore"):
        c = -np.ldexp(1.0, np.minimum(j, 1020).astype(np.int32))
    return c + r.eps_logabs


# -- core certificates ----------------------------------------------------------------------


class _Certifier:
    def __init__(self, r: NoiseRealization, sched: CoefficientSchedule, opts: CountOptions):
        self.r, self.sched, self.opts = r, sched, opts
        self.n = r.n
        self.ev: Evaluator = evaluator(r, sched)
        self._mag: dict = {}
        self._signs: dict = {}

    # ratio primitives (upper bounds, natural log)

    def left(self, t, lead, w=NO_WEIGHT) -> float:
        return self.ev.mass_ratio(t, lead, [(0, lead - 1)], w)[1] if lead > 0 else -math.inf

    def right(self, t, lead, w=NO_WEIGHT) -> float:
        return self.ev.mass_ratio(t, lead, [(lead + 1, self.n)], w)[1] if lead < self.n else -math.inf

    def crossing(self, p: int, q: int, w: Weight = NO_WEIGHT) -> XReal:
        """Point where ``T_p = T_q``."""
        lw = w.log_abs(np.array([p, q]))
        d = _lam(self.r, self.sched, p) - _lam(self.r, self.sched, q) + float(lw[0] - lw[1])
        return d / (q - p)

    def c0(self, lo: XReal, hi: XReal, lead: int) -> Optional[float]:
        """Gap ``-log(L + R)`` if leader ``lead`` dominates all of ``[lo, hi]``."""
        key = ("c0", lo, hi, lead)
        if key not in self._mag:
            tot = lse_up(np.array([self.left(lo, lead), self.right(hi, lead)]))
            self._mag[key] = -tot if tot < 0 else None
        return self._mag[key]

    def c2(self, lo: XReal, hi: XReal, p: int, q: int, w: Weight, sigma: Optional[XReal] = None) -> Optional[float]:
        """Gap if ``T_p + T_q`` (weighted) beats all other weighted mass on ``[lo, hi]``."""
        key = ("c2", lo, hi, p, q, w)
        if key in self._mag:
            return self._mag[key]
        ev = self.ev
        rl = self.left(lo, p, w)
        rr = self.right(hi, q, w)
        out = None
        if max(rl, rr) < 0:
            if q - p > 1:
                s = self.crossing(p, q, w) if sigma is None else sigma
                s = lo if s < lo else (hi if s > hi else s)
                mid = [(p + 1, q - 1)]
                rm = max(ev.mass_ratio(s, p, mid, w)[1], ev.mass_ratio(s, q, mid, w)[1])
            else:
                rm = -math.inf
            tot = lse_up(np.array([max(rl, rr), rm]))
            out = -tot if tot < 0 else None
        self._mag[key] = out
        return out

    def sign_at(self, t: XReal, axis: str, w: Weight = NO_WEIGHT) -> SignedLogInterval:
        key = (t, axis, w)
        res = self._signs.get(key)
        if res is None:
            for prec in self.opts.ladder:
                res = self.ev.eval_sign(EvalRequest(t, axis, w, prec))
                if res.sign:
                    break
            self._signs[key] = res
        return res

    # structured certificates

    def window(self, j: int) -> WindowResult:
        key = ("win", j)
        if key in self._mag:
            return self._mag[key]
        lead = self.sched.m(j)
        w = self.sched.window(j)
        tot = lse_up(np.array([self.left(w.a, lead), self.right(w.b, lead)]))
        lf = math.log(self.opts.factor)
        if tot < lf:
            res = WindowResult("no_root", 0, _factor_tag(self.opts.factor), -tot)
        elif tot < 0:
            res = WindowResult("no_root", 0, "1", -tot)
        else:
            res = WindowResult("failed", 0, None, -tot if math.isfinite(tot) else None)
        self._mag[key] = res
        return res

    def top(self) -> WindowResult:
        key = ("top",)
        if key not in self._mag:
            a = self.sched.top_start()
            tot = self.left(a, self.n)
            self._mag[key] = WindowResult("no_root", 0, "1", -tot) if tot < 0 else \
                WindowResult("failed", 0, None, -tot if math.isfinite(tot) else None)
        return self._mag[key]

    def transition_bounds(self, j: int) -> tuple[XReal, XReal, int, int]:
        sched = self.sched
        lo = sched.window(j).b
        hi = sched.window(j + 1).a if j + 1 < sched.j_star else sched.top_start()
        return lo, hi, sched.leader(j), sched.leader(j + 1)

    def transition(self, j: int, axis: str) -> TransitionResult:
        lo, hi, p, q = self.transition_bounds(j)
        sp, sq = _eff_sign(self.r, p, axis), _eff_sign(self.r, q, axis)
        if sp == sq:
            g = self.c2(lo, hi, p, q, NO_WEIGHT)
            return TransitionResult("no_root", None, g) if g is not None else TransitionResult("failed")
        g = self.c2(lo, hi, p, q, Weight.rescaled(p, q))
        if g is None:
            return TransitionResult("failed")
        s_lo = self._end_sign(lo, axis, j, p)
        s_hi = self._end_sign(hi, axis, j + 1, q)
        if s_lo == 0 or s_hi == 0:
            return TransitionResult("failed", None, g)
        if s_lo == s_hi:
            return TransitionResult("no_root", None, g)
        iv = self.refine(lo, hi, s_lo, s_hi, axis, self.crossing(p, q)) if self.opts.refine else (lo, hi)
        return TransitionResult("single_root", iv, g)

    def _end_sign(self, t: XReal, axis: str, j: int, lead: int) -> int:
        """Sign at a window end: the leader's when the window certifies, else evaluated."""
        if j < self.sched.j_star:
            ok = self.window(j).outcome == "no_root"
        else:
            ok = self.top().outcome == "no_root"
        if ok:
            return _eff_sign(self.r, lead, axis)
        return self.sign_at(t, axis).sign

    def refine(self, lo: XReal, hi: XReal, s_lo: int, s_hi: int, axis: str, guess: XReal):
        """Shrink a certified single-root bracket to width at most ``2**-20 (hi - lo)``."""
        width = hi - lo
        target = width.ldexp(-20)
        d = width.ldexp(-22)
        if lo < guess < hi:
            a, b = guess - d, guess + d
            a = lo if a < lo else a
            b = hi if b > hi else b
            if self.sign_at(a, axis).sign == s_lo and self.sign_at(b, axis).sign == s_hi:
                return a, b
        a, b = lo, hi
        for _ in range(80):
            if b - a <= target:
                break
            m = _mid(a, b)
            s = self.sign_at(m, axis).sign
            if s == 0:
                break
            if s == s_lo:
                a = m
            else:
                b = m
        return a, b

    def rouche_at(self, t: XReal, lead: int) -> Optional[float]:
        tot = lse_up(np.array([self.left(t, lead), self.right(t, lead)]))
        return -tot if tot < 0 else None


def _factor_tag(f: float) -> str:
    return "1/2" if f == 0.5 else ("1/4" if f == 0.25 else repr(f))


# -- public certificate operations -------------------------------------------------------


def _certifier(r, sched, opts=None) -> _Certifier:
    opts = opts or CountOptions()
    key = ("cert", sched.params.alpha, sched.n, opts.max_precision, opts.factor)
    c = r._cache.get(key)
    if c is None:
        c = r._cache[key] = _Certifier(r, sched, opts)
    return c


def certify_window(j: int, r: NoiseRealization, sched: CoefficientSchedule, axis: str = "positive",
                   opts: Optional[CountOptions] = None) -> WindowResult:
    """Constant sign of ``g`` on ``[a_j, b_j]``; ``j = j*`` means the top half-line."""
    _check(r, sched)
    if not (sched.params.j0 <= j <= sched.j_star):
        raise ParameterError(f"certify_window needs j0 <= j <= j*, got j={j}")
    c = _certifier(r, sched, opts)
    res = c.top() if j == sched.j_star else c.window(j)
    if res.outcome != "no_root":
        return res
    lead = sched.leader(j)
    return WindowResult("no_root", _eff_sign(r, lead, axis), res.factor, res.gap)


def certify_transition(j: int, r: NoiseRealization, sched: CoefficientSchedule, axis: str = "positive",
                       opts: Optional[CountOptions] = None) -> TransitionResult:
    """No root (equal leader signs) or exactly one isolated root on ``[b_j, a_{j+1}]``."""
    _check(r, sched)
    if not (sched.params.j0 <= j < sched.j_star):
        raise ParameterError(f"certify_transition needs j0 <= j < j*, got j={j}")
    return _certifier(r, sched, opts).transition(j, axis)


def rouche_bound(j: int, r: NoiseRealization, sched: CoefficientSchedule,
                 opts: Optional[CountOptions] = None, strict: bool = True) -> RoucheResult:
    """At most ``m_j`` zeros in ``|z| <= e^{b_j}`` when the leader dominates the circle."""
    _check(r, sched)
    lo_j = sched.params.j0 if strict else 1
    if j < lo_j:
        raise ParameterError(f"rouche_bound needs j >= {lo_j}")
    if sched.m(j) >= sched.n:
        raise ParameterError("rouche_bound needs m_j < n")
    c = _certifier(r, sched, opts)
    g = c.rouche_at(sched.window(j).b, sched.m(j))
    return RoucheResult("at_most", sched.m(j), g) if g is not None else RoucheResult("failed")


# -- near-origin isolation -------------------------------------------------------------------


def _hull_candidates(r: NoiseRealization, sched: CoefficientSchedule, kmax: int) -> np.ndarray:
    """Indices that can be on the upper hull of ``(k, log|a_k|)`` (necessary condition only)."""
    lo, hi = sched.block_bounds()
    blk = sched.block_index()[: kmax + 1]
    e = r.eps_logabs[: kmax + 1]
    k = np.arange(kmax + 1)
    jb = blk
    top = np.minimum(hi[jb], kmax)
    prev = lo[jb] - 1
    keep = (k == top) | (k == 0)
    inner = ~keep & (jb >= 1) & (jb < 1000)
    if inner.any():
        ki = k[inner]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tau_up = (e[ki] - e[top[inner]]) / (top[inner] - ki)
            half = np.ldexp(1.0, (jb[inner] - 1).astype(np.int32))
            tau_lo = (half + e[prev[inner]] - e[ki]) / (ki - prev[inner])
        keep[ki] = tau_lo <= tau_up + 1e-9 * (1.0 + np.abs(tau_up))
    return k[keep]


def _upper_hull(ks: np.ndarray, lam: list) -> list[int]:
    hull: list[int] = []
    for i in range(len(ks)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord a -> i
            if (lam[b] - lam[a]) * (ks[i] - ks[a]) <= (lam[i] - lam[a]) * (ks[b] - ks[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return [int(ks[i]) for i in hull]


def newton_ties(r: NoiseRealization, sched: CoefficientSchedule, kmax: Optional[int] = None):
    """Hull vertices and tie points ``tau_i`` between consecutive vertices."""
    kmax = r.n if kmax is None else min(kmax, r.n)
    key = ("hull", sched.params.alpha, sched.n, kmax)
    got = r._cache.get(key)
    if got is not None:
        return got
    ks = _hull_candidates(r, sched, kmax)
    jmax = int(sched.block_index()[ks].max()) if ks.size else 0
    if jmax < 1000:
        lam = list(_float_lams(r, sched)[ks].tolist())
        verts = _upper_hull(ks, lam)
        lmap = dict(zip(ks.tolist(), lam))
        ties = [XReal((lmap[v] - lmap[w]) / (w - v)) for v, w in zip(verts, verts[1:])]
    else:
        lamx = [_lam(r, sched, int(k)) for k in ks]
        verts = _upper_hull(ks, lamx)
        lmap = dict(zip(ks.tolist(), lamx))
        ties = [(lmap[v] - lmap[w]) / (w - v) for v, w in zip(verts, verts[1:])]
    r._cache[key] = (verts, ties)
    return verts, ties


class _AxisCounter:
    """Per-axis bookkeeping of certified roots and unresolved regions."""

    def __init__(self, cert: _Certifier, axis: str):
        self.c = cert
        self.axis = axis
        self.roots: list[RootInterval] = []
        self.undecided: list[tuple[XReal, XReal, int]] = []  # (lo, hi, max extra roots or -1)
        self.nodes = 0

    def isolate(self, lo: XReal, hi: XReal, kmax: int) -> None:
        """Count roots on ``[lo, hi]`` using hull pieces, then bisection."""
        if not lo < hi:
            return
        verts, ties = newton_ties(self.c.r, self.c.sched, kmax)
        inside = [i for i, t in enumerate(ties) if lo < t < hi]
        if not inside:
            lead = verts[0]
            for i, t in enumerate(ties):
                if t <= lo:
                    lead = verts[i + 1]
            self._piece(lo, hi, lead, lead, None)
            return
        cuts = [lo] + [_mid(ties[a], ties[b]) for a, b in zip(inside, inside[1:])] + [hi]
        for (a, b), i in zip(zip(cuts, cuts[1:]), inside):
            self._piece(a, b, verts[i], verts[i + 1], ties[i])

    def _piece(self, a: XReal, b: XReal, p: int, q: int, sigma: Optional[XReal]) -> None:
        c, axis = self.c, self.axis
        if p == q:
            if c.c0(a, b, p) is not None:
                return
        elif _eff_sign(c.r, p, axis) == _eff_sign(c.r, q, axis):
            if c.c2(a, b, p, q, NO_WEIGHT, sigma) is not None:
                return
        elif c.c2(a, b, p, q, Weight.rescaled(p, q)) is not None:
            self._monotone(a, b, "bisection")
            return
        self._bisect(a, b, 0)

    def _monotone(self, a: XReal, b: XReal, tag: str) -> None:
        sa, sb = self.c.sign_at(a, self.axis).sign, self.c.sign_at(b, self.axis).sign
        if sa == 0 or sb == 0:
            self.undecided.append((a, b, 1))
        elif sa != sb:
            self.roots.append(RootInterval(self.axis, a, b, tag))

    def _mean_value(self, a: XReal, b: XReal, m: XReal, half: XReal) -> Optional[str]:
        """Mean-value tests on ``h = e^{-ct} g`` with ``c`` the leading index at ``m``.

        ``h`` has the roots of ``g``; its derivatives carry weights ``(k - c)**o``,
        which stay small next to the leader.  Returns "none" (no root),
        "monotone" (at most one) or None.
        """
        c, axis = self.c, self.axis
        ev = c.ev
        lead = ev.argmax_term(m)
        lh = half.log()
        tc = ev.log_term(m, lead)[1]
        for order, outcome in ((1, "none"), (2, "monotone")):
            w = Weight.shifted(lead, order)
            parts = []
            if lead < c.n:
                parts.append(ev.mass_ratio(b, lead, [(lead + 1, c.n)], w, NO_WEIGHT)[1])
            if lead > 0:
                parts.append(ev.mass_ratio(a, lead, [(0, lead - 1)], w, NO_WEIGHT)[1])
            spread = lse_up(np.array(parts))
            val = c.sign_at(m, axis, NO_WEIGHT if order == 1 else Weight.shifted(lead, 1))
            if not val.sign:
                continue
            lo = val.log_lo
            d = float(lo - tc) - 4 * U * (abs(float(lo)) + abs(float(tc)))
            if d > lh + spread + 1e-12 * (1 + abs(lh + spread)):
                return outcome
        return None

    def _bisect(self, a: XReal, b: XReal, depth: int) -> None:
        c, axis = self.c, self.axis
        self.nodes += 1
        ev = c.ev
        pa, pb = ev.argmax_term(a), ev.argmax_term(b)
        if pa == pb:
            if c.c0(a, b, pa) is not None:
                return
        elif pa < pb:
            if _eff_sign(c.r, pa, axis) == _eff_sign(c.r, pb, axis):
                if c.c2(a, b, pa, pb, NO_WEIGHT) is not None:
                    return
            elif c.c2(a, b, pa, pb, Weight.rescaled(pa, pb)) is not None:
                self._monotone(a, b, "bisection")
                return
        m = _mid(a, b)
        half = (b - a).ldexp(-1)
        if not half.is_zero:
            settled = self._mean_value(a, b, m, half)
            if settled is not None:
                if settled == "monotone":
                    self._monotone(a, b, "bisection")
                return
        if depth >= c.opts.max_depth or self.nodes >= c.opts.node_budget or not (a < m < b):
            self.undecided.append((a, b, -1))
            return
        self._bisect(a, m, depth + 1)
        self._bisect(m, b, depth + 1)


# -- orchestration ------------------------------------------------------------------------------


def count_certified(r: NoiseRealization, sched: CoefficientSchedule,
                    opts: Optional[CountOptions] = None) -> RootCountReport:
    _check(r, sched)
    opts = opts or CountOptions()
    n = r.n
    pred = predict(r, sched)
    if n == 0:
        return RootCountReport("exact", 0, 0, pred, per_axis=[
            {"axis": ax, "count": 0, "sign_changes": 0, "roots": []} for ax in ("positive", "negative")])
    cert = _Certifier(r, sched, opts)
    dom = t_domain(r, sched)["positive"]
    t_min, t_max = dom
    js = sched.j_star
    k0 = sched.k0()
    structured = k0 <= js - 1
    certs: list[Certificate] = []
    if structured:
        for j in range(k0, js):
            w = cert.window(j)
            certs.append(Certificate(j, "window", w.outcome, w.gap, w.factor))
        tw = cert.top()
        certs.append(Certificate(js, "top", tw.outcome, tw.gap, tw.factor))

    counters = {}
    for axis in ("positive", "negative"):
        ac = _AxisCounter(cert, axis)
        counters[axis] = ac
        if not structured:
            ac.isolate(t_min - XReal(1.0), t_max, n)
            continue
        near_hi = sched.window(k0).a
        kmax = min(n, sched.m(k0 + 1) if k0 + 1 < js else n)
        ac.isolate(t_min - XReal(1.0), near_hi, kmax)
        for j in range(k0, js):
            w = sched.window(j)
            if cert.window(j).outcome != "no_root":
                ac.isolate(w.a, w.b, n)
            lo, hi, p, q = cert.transition_bounds(j)
            tr = cert.transition(j, axis)
            kind = "no-change" if _eff_sign(r, p, axis) == _eff_sign(r, q, axis) else "yes-change"
            certs.append(Certificate(j, kind, tr.outcome, tr.gap, None, axis))
            if tr.outcome == "single_root":
                ac.roots.append(RootInterval(axis, tr.interval[0], tr.interval[1], "window-transition"))
            elif tr.outcome == "failed":
                ac.isolate(lo, hi, n)
        if cert.top().outcome != "no_root":
            ac.isolate(sched.top_start(), t_max, n)

    count_lo = sum(len(ac.roots) for ac in counters.values())
    undecided = [(ax, a, b, extra) for ax, ac in counters.items() for a, b, extra in ac.undecided]
    warnings: list[str] = []
    status = "exact"
    count_hi = count_lo
    if undecided:
        status, count_hi, note = _fallback_bound(cert, counters, undecided)
        if note:
            warnings.append(note)
    elif (count_lo - n) % 2:
        warnings.append("parity: exact count differs from n mod 2 (multiple root suspected)")
    per_axis = []
    for axis, ac in counters.items():
        ac.roots.sort(key=lambda ri: ri.lo)
        per_axis.append({"axis": axis, "count": len(ac.roots), "sign_changes": sign_changes(r, sched, axis),
                         "roots": [ri.as_dict() for ri in ac.roots], "bisection_nodes": ac.nodes})
    return RootCountReport(
        status, count_lo, count_hi, pred,
        roots=[ri for ac in counters.values() for ri in ac.roots],
        indeterminate_regions=[(ax, a, b) for ax, a, b, _ in undecided],
        per_axis=per_axis, certificates=certs, warnings=warnings)


def _fallback_bound(cert: _Certifier, counters: dict, undecided: list) -> tuple[str, int, str]:
    """Upper bound on the count when some regions stayed undecided."""
    count_lo = sum(len(ac.roots) for ac in counters.values())
    n = cert.n
    if all(extra >= 0 for *_, extra in undecided):
        return "bounded", count_lo + sum(extra for *_, extra in undecided), ""
    # a Rouche disk covering every undecided region on both axes
    reach = max(b for _, _, b, _ in undecided)
    sched = cert.sched
    points: list[tuple[XReal, int]] = []
    for j in range(1, sched.j_star):
        if sched.m(j) < n:
            b = sched.window(j).b
            if b >= reach:
                points.append((b, sched.m(j)))
    verts, ties = newton_ties(cert.r, sched)
    for i in range(1, len(verts) - 1):
        t = _mid(ties[i - 1], ties[i])
        if t >= reach:
            points.append((t, verts[i]))
    points.sort(key=lambda pt: pt[0])
    for t, lead in points:
        if lead >= n or cert.rouche_at(t, lead) is None:
            continue
        outside = sum(1 for ac in counters.values() for ri in ac.roots if ri.lo >= t)
        extra_monotone = sum(extra for _, a, _, extra in undecided if extra >= 0 and a >= t)
        return "bounded", max(count_lo, outside + lead + extra_monotone), ""
    return "failed", n, "rouche fallback failed: no dominated circle beyond the undecided regions"
