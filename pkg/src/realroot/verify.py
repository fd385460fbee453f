"""Checks of the deterministic increment bounds and scans of certificate failure rates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import mpmath
import numpy as np
from scipy import stats

from .construction import AlphaLike, CoefficientSchedule, ParameterError, make_params, m_of
from .logeval import lse_up
from .noise import NoiseSpec, sample, trial_seed
from .rootcount import CountOptions, _Certifier, _eff_sign

EVENT_KINDS = ("dominance-full", "dominance-left", "dominance-right", "top", "no-root", "no-change", "yes-change")
PSEUDOCOUNT = 0.5


# -- deterministic increments ------------------------------------------------------------


@dataclass(frozen=True)
class IncrementRow:
    j: int
    lhs_left: float
    lhs_right: float
    budget_left: float
    budget_right: float
    pass_left: bool
    pass_right: bool

    @property
    def passed(self) -> bool:
        return self.pass_left and self.pass_right


@dataclass
class IncrementTable:
    alpha: float
    rows: list
    j1: Optional[int]

    @property
    def passes_from_j1(self) -> bool:
        return self.j1 is not None and all(r.passed for r in self.rows if r.j >= self.j1)

    def write_csv(self, path: Union[str, Path], header: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["alpha", "j", "lhs_left", "lhs_right", "budget_left", "budget_right",
                        "pass_left", "pass_right"])
            for r in self.rows:
                w.writerow([self.alpha, r.j, repr(r.lhs_left), repr(r.lhs_right), repr(r.budget_left),
                            repr(r.budget_right), int(r.pass_left), int(r.pass_right)])


def _leq(x: mpmath.mpf, y: mpmath.mpf, tol: mpmath.mpf) -> bool:
    """``x <= y`` decided only when the difference exceeds the working error."""
    return x - y < -tol


def check_increments(alpha: AlphaLike, j_lo: int, j_hi: int) -> IncrementTable:
    """Log-ratios of adjacent block leaders at the window ends against fixed budgets.

    ``lhs_left = 2^{j-1} - (m_j - m_{j-1}) a_j`` (decreasing in t, so ``a_j`` is
    the worst point of the window) and ``lhs_right = -2^j + (m_{j+1} - m_j) b_j``
    (increasing, worst at ``b_j``).  Budgets are ``-2^{j-1} j^-beta / 2`` on the
    left and ``-2^j j^-beta / 2`` on the right.  Values are computed with
    ``j + 128`` bits and a comparison only passes outside the rounding margin.
    """
    params = make_params(alpha)
    if j_lo < params.j0:
        raise ParameterError(f"check_increments needs j_lo >= j0 = {params.j0}")
    if j_hi < j_lo:
        return IncrementTable(params.alpha_f, [], None)
    a = params.alpha
    rows = []
    for j in range(j_lo, j_hi + 1):
        with mpmath.workprec(j + 128):
            am = mpmath.mpf(a.numerator) / a.denominator
            bm = mpmath.mpf(params.beta.numerator) / params.beta.denominator
            jm = mpmath.mpf(j)
            base = am * jm ** (1 - 1 / am)
            xj = jm ** (-bm)
            aj = base * (1 + xj) * mpmath.ldexp(1, j - 2)
            bj = base * (1 - xj) * mpmath.ldexp(1, j - 1)
            d_left = m_of(params, j) - m_of(params, j - 1)
            d_right = m_of(params, j + 1) - m_of(params, j)
            left = mpmath.ldexp(1, j - 1) - d_left * aj
            right = -mpmath.ldexp(1, j) + d_right * bj
            bud_l = -mpmath.ldexp(1, j - 1) * xj / 2
            bud_r = -mpmath.ldexp(1, j) * xj / 2
            tol = mpmath.ldexp(1, j + 16 - (j + 128))
            pl, pr = _leq(left, bud_l, tol), _leq(right, bud_r, tol)
            rows.append(IncrementRow(j, float(left), float(right), float(bud_l), float(bud_r), pl, pr))
    j1 = None
    for r in reversed(rows):
        if not r.passed:
            break
        j1 = r.j
    return IncrementTable(params.alpha_f, rows, j1)


# -- event frequencies -------------------------------------------------------------------------


@dataclass(frozen=True)
class EventFrequency:
    j: int
    kind: str
    trials: int
    failures: int

    @property
    def frequency(self) -> float:
        return self.failures / self.trials if self.trials else 0.0


def trial_events(r, sched: CoefficientSchedule, opts: Optional[CountOptions] = None) -> list[tuple[int, str, bool]]:
    """``(j, kind, failed)`` for every certificate of one realization.

    Dominance events use factor 1/2 (``full``: left plus right mass, ``left`` and
    ``right``: each side alone); ``no-root`` is the factor-1 window test;
    ``top`` is leader ``n`` on ``[a_top, inf)``.  Transitions are scored on the
    positive axis by the sign pattern of their leaders.
    """
    c = _Certifier(r, sched, opts or CountOptions())
    out = []
    j0, js = sched.params.j0, sched.j_star
    half = math.log(0.5)
    for j in range(j0, js):
        lead = sched.m(j)
        w = sched.window(j)
        rl, rr = c.left(w.a, lead), c.right(w.b, lead)
        tot = lse_up(np.array([rl, rr]))
        out.append((j, "dominance-left", not rl < half))
        out.append((j, "dominance-right", not rr < half))
        out.append((j, "dominance-full", not tot < half))
        out.append((j, "no-root", not tot < 0))
    if js >= max(j0, 1):
        out.append((js, "top", c.top().outcome != "no_root"))
    for j in range(j0, js):
        p, q = sched.leader(j), sched.leader(j + 1)
        same = _eff_sign(r, p, "positive") == _eff_sign(r, q, "positive")
        res = c.transition(j, "positive")
        if same:
            out.append((j, "no-change", res.outcome != "no_root"))
        else:
            out.append((j, "yes-change", res.outcome != "single_root"))
    return out


def event_scan(spec: NoiseSpec, alpha: AlphaLike, n: int, trials: int,
               seeds: Union[int, Iterable[int]] = 0, opts: Optional[CountOptions] = None) -> list[EventFrequency]:
    """Per-``(j, kind)`` failure counts over ``trials`` realizations.

    ``seeds`` is either an explicit sequence or a master seed; trial ``i`` then
    uses ``trial_seed(master, i)``.
    """
    if trials < 0:
        raise ParameterError("trials must be nonnegative")
    if trials == 0:
        return []
    sched = CoefficientSchedule.build(alpha, n)
    if isinstance(seeds, int):
        seed_list = [trial_seed(seeds, i) for i in range(trials)]
    else:
        seed_list = [int(s) for s in seeds][:trials]
        if len(seed_list) < trials:
            raise ParameterError("fewer seeds than trials")
    counts: dict[tuple[int, str], list[int]] = {}
    for s in seed_list:
        r = sample(spec, n, s)
        for j, kind, failed in trial_events(r, sched, opts):
            cell = counts.setdefault((j, kind), [0, 0])
            cell[0] += 1
            cell[1] += int(failed)
    order = {k: i for i, k in enumerate(EVENT_KINDS)}
    keys = sorted(counts, key=lambda k: (k[0], order[k[1]]))
    return [EventFrequency(j, kind, *counts[(j, kind)]) for j, kind in keys]


def decay_slope(rows: Sequence[EventFrequency], kind: str, j_min: int = 0) -> Optional[float]:
    """Slope of ``log((failures + 0.5) / trials)`` against ``j**2``; None if under 3 points."""
    pts = [(r.j, r) for r in rows if r.kind == kind and r.trials > 0 and r.j >= j_min]
    if len(pts) < 3:
        return None
    x = np.array([j * j for j, _ in pts], dtype=float)
    y = np.array([math.log((r.failures + PSEUDOCOUNT) / r.trials) for _, r in pts])
    return float(stats.linregress(x, y).slope)


def write_events_csv(rows: Sequence[EventFrequency], path: Union[str, Path], header: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["j", "kind", "trials", "failures"])
        for r in rows:
            w.writerow([r.j, r.kind, r.trials, r.failures])
