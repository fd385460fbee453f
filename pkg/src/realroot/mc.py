"""Monte Carlo campaigns over realizations, and their statistics.

Trial ``i`` of every ``(alpha, n)`` point uses seed ``trial_seed(master, i)``.
Noise is generated per index, so the same trial at two degrees shares the
common prefix of its coefficients.  Records are appended to a journal as they
finish (a rerun resumes from it) and the final ``trials.csv`` is sorted by
``(alpha, n, trial_index)``, so results do not depend on worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .config import RunConfig
from .construction import CoefficientSchedule, ParameterError, as_fraction
from .noise import NoiseSpec, sample, sign_changes, trial_seed
from .rootcount import CountOptions, count_certified

log = logging.getLogger(__name__)

JOURNAL = "trials.journal"
TRIALS_CSV = "trials.csv"
SUMMARY_JSON = "summary.json"
HISTOGRAM_CSV = "histogram.csv"
HIST_BINS = 20
HIST_RANGE = (-4.0, 4.0)
CONCENTRATION_DELTA = 0.25


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    alpha: float
    n: int
    dist: str
    p: float
    S_pos: int
    S_neg: int
    predicted: int
    count_lo: int
    count_hi: int
    status: str
    wall_ms: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def key(self) -> tuple:
        return (self.alpha, self.n, self.trial_index)

    def row(self) -> list[str]:
        return [str(getattr(self, c)) if c != "wall_ms" else f"{self.wall_ms:.3f}" for c in self.columns()]

    @classmethod
    def from_row(cls, row: dict) -> "TrialRecord":
        conv = {"trial_index": int, "seed": int, "alpha": float, "n": int, "dist": str, "p": float,
                "S_pos": int, "S_neg": int, "predicted": int, "count_lo": int, "count_hi": int,
                "status": str, "wall_ms": float}
        return cls(**{k: conv[k](row[k]) for k in conv})

    @property
    def R(self) -> Optional[int]:
        return self.count_lo if self.status == "exact" else None


# -- single trial ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _schedule(alpha: str, n: int) -> CoefficientSchedule:
    return CoefficientSchedule.build(as_fraction(alpha), n)


def run_trial(alpha: str, n: int, spec: NoiseSpec, seed: int, trial_index: int = 0,
              max_precision: int = 4096) -> TrialRecord:
    """Sample, count and package one realization; failures become ``status='error'``."""
    t0 = time.perf_counter()
    alpha_f = float(as_fraction(alpha))
    try:
        sched = _schedule(alpha, n)
        r = sample(spec, n, seed)
        sp, sn = sign_changes(r, sched, "positive"), sign_changes(r, sched, "negative")
        rep = count_certified(r, sched, CountOptions(max_precision=max_precision))
        rec = TrialRecord(trial_index, seed, alpha_f, n, spec.kind, spec.p, sp, sn, sp + sn,
                          rep.count_lo, rep.count_hi, rep.status, 0.0)
    except Exception as exc:  # recorded, never fatal to the campaign
        log.warning("trial %d (alpha=%s, n=%d) failed: %r", trial_index, alpha, n, exc)
        rec = TrialRecord(trial_index, seed, alpha_f, n, spec.kind, spec.p, -1, -1, -1, -1, -1, "error", 0.0)
    rec.wall_ms = 1000.0 * (time.perf_counter() - t0)
    return rec


def _task(args) -> dict:
    alpha, n, kind, p, seed, idx, prec = args
    return asdict(run_trial(alpha, n, NoiseSpec(kind, p), seed, idx, prec))


# -- campaign ---------------------------------------------------------------------------------


def worker_count(requested: Optional[int] = None) -> int:
    env = os.environ.get("REALROOT_THREADS")
    cap = int(env) if env and env.strip().isdigit() and int(env) > 0 else None
    if requested:
        return max(1, min(cap, requested)) if cap else max(1, requested)
    return cap or os.cpu_count() or 1


def _journal_load(path: Path, fingerprint: str) -> dict:
    done: dict = {}
    if not path.exists():
        return done
    with open(path) as fh:
        first = fh.readline().strip()
        if first != fingerprint:
            log.info("journal %s belongs to another configuration; starting over", path)
            return {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = TrialRecord(**json.loads(line))
            except (ValueError, TypeError):
                break  # torn last line from an interrupted run
            done[rec.key()] = rec
    return done


def run_campaign(config: RunConfig, workers: Optional[int] = None,
                 output_dir: Union[str, Path, None] = None) -> list[TrialRecord]:
    """Run every ``(alpha, n, i)`` trial; write ``trials.csv`` when an output dir is set."""
    config.validate()
    out = Path(output_dir) if output_dir is not None else (Path(config.output_dir) if config.output_dir else None)
    spec = config.noise_spec()
    tasks = []
    for a in config.alphas:
        for n in config.ns:
            for i in range(config.trials):
                tasks.append((a, n, spec.kind, spec.p, trial_seed(config.master_seed, i), i, config.max_precision))
    done: dict = {}
    jfh = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        fingerprint = json.dumps(config.provenance(), sort_keys=True)
        jpath = out / JOURNAL
        done = _journal_load(jpath, fingerprint)
        jfh = open(jpath, "w")
        jfh.write(fingerprint + "\n")
        for rec in done.values():
            jfh.write(json.dumps(asdict(rec)) + "\n")
        jfh.flush()
    todo = [t for t in tasks if (float(as_fraction(t[0])), t[1], t[5]) not in done]
    results = dict(done)

    def accept(d: dict) -> None:
        rec = TrialRecord(**d)
        results[rec.key()] = rec
        if jfh is not None:
            jfh.write(json.dumps(d) + "\n")
            jfh.flush()
            os.fsync(jfh.fileno())
        if config.verbosity > 1:
            log.info("trial alpha=%s n=%d i=%d -> %s %d", rec.alpha, rec.n, rec.trial_index, rec.status, rec.count_lo)

    try:
        nw = min(worker_count(workers), max(1, len(todo)))
        if nw <= 1:
            for t in todo:
                accept(_task(t))
        else:
            with ProcessPoolExecutor(max_workers=nw) as ex:
                futs = [ex.submit(_task, t) for t in todo]
                for f in as_completed(futs):
                    accept(f.result())
    finally:
        if jfh is not None:
            jfh.close()
    records = sorted(results.values(), key=TrialRecord.key)
    if out is not None:
        write_trials_csv(records, out / TRIALS_CSV, config.header_lines())
    return records


def write_trials_csv(records: Sequence[TrialRecord], path: Union[str, Path], header: Sequence[str] = ()) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TrialRecord.columns())
        for r in records:
            w.writerow(r.row())
    os.replace(tmp, path)


def read_trials_csv(path: Union[str, Path]) -> tuple[list[TrialRecord], list[str]]:
    header, body = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                body.append(line)
    recs = [TrialRecord.from_row(row) for row in csv.DictReader(body)]
    return sorted(recs, key=TrialRecord.key), header


# -- theory ----------------------------------------------------------------------------------


def theory_sign_change_moments(p: float, N: int) -> tuple[float, float]:
    """Mean and variance of the number of sign flips among ``N`` adjacent pairs of i.i.d. signs.

    With ``P(+) = p`` and ``q = 2p(1-p)`` the flip indicators have mean ``q``,
    variance ``q(1-q)`` and neighbour covariance ``p(1-p) - q**2`` (1-dependent).
    """
    if not (0.0 < p < 1.0):
        raise ParameterError("p must lie in (0, 1)")
    if N < 1:
        raise ParameterError("N must be at least 1")
    q = 2.0 * p * (1.0 - p)
    return N * q, N * q * (1.0 - q) + 2.0 * (N - 1) * (p * (1.0 - p) - q * q)


def theory_constants(p: float) -> tuple[float, float]:
    """``(c_p, c_p')``: limits of mean and variance of ``R`` over ``(n/2)**alpha``."""
    q = 2.0 * p * (1.0 - p)
    return 4.0 * p * (1.0 - p), 4.0 * q * (1.0 - q) + 8.0 * (p * (1.0 - p) - q * q)


def estimate_exponent(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log(mean)`` against ``log(n)``, with its standard error.

    Needs positive means at two or more distinct ``n`` spanning two decades;
    with exactly two points the standard error is 0.
    """
    pts = [(float(n), float(m)) for n, m in points]
    if any(not (m > 0 and math.isfinite(m)) or n <= 0 for n, m in pts):
        raise ParameterError("exponent fit needs positive n and positive finite means")
    ns = sorted({n for n, _ in pts})
    if len(ns) < 2:
        raise ParameterError("exponent fit needs at least two distinct n")
    if math.log10(ns[-1] / ns[0]) < 2 - 1e-9:
        raise ParameterError("n values must span at least two decades")
    x = np.log([n for n, _ in pts])
    y = np.log([m for _, m in pts])
    if len(pts) == 2:
        return float((y[1] - y[0]) / (x[1] - x[0])), 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def _values(records, n: Optional[int], alpha: Optional[float]) -> np.ndarray:
    if isinstance(records, np.ndarray) or (records and not isinstance(records[0], TrialRecord)):
        return np.asarray(records, dtype=float)
    sel = [r.count_lo for r in records if r.status == "exact" and (n is None or r.n == n)
           and (alpha is None or abs(r.alpha - alpha) < 1e-12)]
    return np.asarray(sel, dtype=float)


def clt_diagnostics(records, n: Optional[int] = None, alpha: Optional[float] = None,
                    min_records: int = 500) -> tuple[float, float, list[tuple[float, float, int]]]:
    """Skewness, excess kurtosis and a 20-bin histogram on [-4, 4] of standardized counts.

    ``records`` is a list of :class:`TrialRecord` (exact ones at ``n`` are used)
    or plain numbers.
    """
    x = _values(records, n, alpha)
    if x.size < min_records:
        raise ParameterError(f"need at least {min_records} exact records, got {x.size}")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise ParameterError("counts have zero variance")
    z = (x - x.mean()) / sd
    counts, edges = np.histogram(z, bins=HIST_BINS, range=HIST_RANGE)
    hist = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(HIST_BINS)]
    return float(stats.skew(x)), float(stats.kurtosis(x)), hist


# -- summaries ---------------------------------------------------------------------------------


@dataclass
class CampaignSummary:
    alpha: float
    n: int
    trials: int
    exact: int
    exact_fraction: float
    tracking_fraction: Optional[float]
    mean_R: Optional[float]
    var_R: Optional[float]
    skewness: Optional[float]
    excess_kurtosis: Optional[float]
    normalized_mean: Optional[float]
    normalized_var: Optional[float]
    mean_predicted: Optional[float]
    theory_mean_R: float
    theory_var_R: float
    c_p: float
    c_p_prime: float
    concentration_fraction: Optional[float]
    j_star: int


def tracking_bound(alpha: float, n: int) -> float:
    return 4.0 * math.log(n) ** (1.0 / alpha) if n > 1 else 0.0


def summarize_point(records: Sequence[TrialRecord], alpha: float, n: int) -> CampaignSummary:
    pts = [r for r in records if r.n == n and abs(r.alpha - alpha) < 1e-12]
    ex = [r for r in pts if r.status == "exact"]
    p = pts[0].p if pts else 0.5
    sched = _schedule(repr(alpha), n)
    N = max(sched.j_star, 1)
    m1, v1 = theory_sign_change_moments(p, N) if 0 < p < 1 else (0.0, 0.0)
    cp, cpp = theory_constants(p) if 0 < p < 1 else (0.0, 0.0)
    scale = (n / 2.0) ** alpha if n > 0 else 1.0
    R = np.array([r.count_lo for r in ex], dtype=float)
    mean = float(R.mean()) if R.size else None
    var = float(R.var(ddof=1)) if R.size > 1 else None
    skew = float(stats.skew(R)) if R.size > 2 and R.std() > 0 else None
    kurt = float(stats.kurtosis(R)) if R.size > 3 and R.std() > 0 else None
    bound = tracking_bound(alpha, n)
    track = (sum(abs(r.count_lo - r.predicted) <= bound for r in ex) / len(ex)) if ex else None
    conc = None
    if ex and cp > 0:
        conc = sum(abs(r.count_lo / (cp * scale) - 1.0) <= CONCENTRATION_DELTA for r in ex) / len(ex)
    return CampaignSummary(
        alpha=alpha, n=n, trials=len(pts), exact=len(ex),
        exact_fraction=(len(ex) / len(pts)) if pts else 0.0,
        tracking_fraction=track, mean_R=mean, var_R=var, skewness=skew, excess_kurtosis=kurt,
        normalized_mean=None if mean is None else mean / scale,
        normalized_var=None if var is None else var / scale,
        mean_predicted=float(np.mean([r.predicted for r in ex])) if ex else None,
        theory_mean_R=2.0 * m1, theory_var_R=4.0 * v1, c_p=cp, c_p_prime=cpp,
        concentration_fraction=conc, j_star=sched.j_star)


def summarize(records: Sequence[TrialRecord]) -> dict:
    """Per-point summaries plus an exponent fit per alpha (when the n grid allows it)."""
    recs = sorted(records, key=TrialRecord.key)
    points = sorted({(r.alpha, r.n) for r in recs})
    per = [summarize_point(recs, a, n) for a, n in points]
    fits = {}
    for a in sorted({a for a, _ in points}):
        pts = [(s.n, s.mean_R) for s in per if s.alpha == a and s.mean_R is not None]
        try:
            ah, se = estimate_exponent(pts)
            fits[repr(a)] = {"alpha_hat": ah, "stderr": se, "points": len(pts)}
        except ParameterError as exc:
            fits[repr(a)] = {"alpha_hat": None, "stderr": None, "note": str(exc)}
    hists = []
    for a, n in points:
        try:
            _, _, h = clt_diagnostics(recs, n, a, min_records=2)
            hists.extend((a, n, lo, hi, c) for lo, hi, c in h)
        except ParameterError:
            pass
    return {"points": [asdict(s) for s in per], "exponent_fits": fits, "histogram": hists}


def write_summary(summary: dict, outdir: Union[str, Path], provenance: dict) -> None:
    out = Path(outdir)
    body = {"provenance": provenance, "points": summary["points"], "exponent_fits": summary["exponent_fits"]}
    (out / SUMMARY_JSON).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    with open(out / HISTOGRAM_CSV, "w", newline="") as fh:
        fh.write(f"# {json.dumps(provenance, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "n", "bin_lo", "bin_hi", "count"])
        for row in summary["histogram"]:
            w.writerow(row)
