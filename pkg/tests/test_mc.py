from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from realroot.config import RunConfig
from realroot.construction import ParameterError
from realroot.mc import (JOURNAL, TRIALS_CSV, TrialRecord, clt_diagnostics, estimate_exponent, read_trials_csv,
                         run_campaign, summarize, theory_constants, theory_sign_change_moments, worker_count)


def _enumerate(p, N):
    """Exact mean and variance of the flip count over all 2**(N+1) sign strings."""
    m1 = m2 = 0.0
    for bits in itertools.product((0, 1), repeat=N + 1):
        k = sum(bits)
        w = p**k * (1 - p) ** (N + 1 - k)
        s = sum(a != b for a, b in zip(bits, bits[1:]))
        m1 += w * s
        m2 += w * s * s
    return m1, m2 - m1 * m1


def test_moments_examples():
    assert theory_sign_change_moments(0.5, 1) == (0.5, 0.25)
    m, v = theory_sign_change_moments(0.5, 100)
    assert m == pytest.approx(50) and v == pytest.approx(25)
    m, v = theory_sign_change_moments(0.9, 100)
    assert m == pytest.approx(18)
    assert v == pytest.approx(26.1648)


@pytest.mark.parametrize("p", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_moments_match_enumeration(p):
    for N in range(1, 13):
        em, ev = _enumerate(p, N)
        m, v = theory_sign_change_moments(p, N)
        assert m == pytest.approx(em, rel=1e-12)
        assert v == pytest.approx(ev, rel=1e-10, abs=1e-12)


def test_moments_simulation():
    rng = np.random.default_rng(0)
    s = rng.random((10**6 // 8, 9)) < 0.75
    flips = np.count_nonzero(s[:, 1:] != s[:, :-1], axis=1)
    m, v = theory_sign_change_moments(0.75, 8)
    assert abs(flips.mean() - m) < 4 * math.sqrt(v / len(flips))
    assert flips.var() == pytest.approx(v, rel=0.02)


def test_moments_errors():
    with pytest.raises(ParameterError):
        theory_sign_change_moments(1.0, 5)
    with pytest.raises(ParameterError):
        theory_sign_change_moments(0.5, 0)


def test_theory_constants_half():
    assert theory_constants(0.5) == (1.0, 1.0)


def test_estimate_exponent():
    ah, se = estimate_exponent([(n, n**0.5) for n in (1e3, 1e4, 1e5)])
    assert ah == pytest.approx(0.5) and se == pytest.approx(0.0, abs=1e-12)
    assert estimate_exponent([(1e2, 10), (1e4, 100)]) == (pytest.approx(0.5), 0.0)
    with pytest.raises(ParameterError):
        estimate_exponent([(1e3, 5), (1e3, 6)])
    with pytest.raises(ParameterError):
        estimate_exponent([(1e3, 5), (1e4, 0)])
    with pytest.raises(ParameterError):
        estimate_exponent([(1e3, 5), (5e3, 8)])


def test_clt_synthetic_normal():
    x = np.random.default_rng(1).standard_normal(10**5)
    s, k, hist = clt_diagnostics(x)
    assert abs(s) <= 0.03 and abs(k) <= 0.06
    assert len(hist) == 20 and hist[0][0] == -4.0 and hist[-1][1] == 4.0
    assert sum(c for _, _, c in hist) <= 10**5


def test_clt_errors():
    with pytest.raises(ParameterError):
        clt_diagnostics(np.ones(1000))
    with pytest.raises(ParameterError):
        clt_diagnostics(np.arange(10.0))


def _cfg(tmp_path, **kw):
    base = dict(alphas=("0.5",), ns=(60, 600), trials=6, master_seed=3, output_dir=str(tmp_path))
    base.update(kw)
    return RunConfig(**base).validate()


def _strip(recs):
    return [{k: v for k, v in r.__dict__.items() if k != "wall_ms"} for r in recs]


def test_campaign_empty(tmp_path):
    assert run_campaign(_cfg(tmp_path, trials=0), workers=1) == []


def test_campaign_determinism_and_csv(tmp_path):
    a = run_campaign(_cfg(tmp_path / "a"), workers=1)
    b = run_campaign(_cfg(tmp_path / "b"), workers=2)
    assert _strip(a) == _strip(b)
    assert len(a) == 12 and all(r.status in ("exact", "bounded", "failed") for r in a)
    ra, ha = read_trials_csv(tmp_path / "a" / TRIALS_CSV)
    assert _strip(ra) == _strip(a)
    assert any("master_seed 3" in h for h in ha)
    # output_dir is not part of the header, so the files agree byte for byte modulo timing
    strip = lambda p: [",".join(l.split(",")[:-1]) for l in p.read_text().splitlines()]  # noqa: E731
    assert strip(tmp_path / "a" / TRIALS_CSV) == strip(tmp_path / "b" / TRIALS_CSV)


def test_common_seeds_across_n(tmp_path):
    recs = run_campaign(_cfg(tmp_path), workers=1)
    by_n = {n: [r.seed for r in recs if r.n == n] for n in (60, 600)}
    assert by_n[60] == by_n[600]


def test_campaign_resume(tmp_path):
    cfg = _cfg(tmp_path, trials=4)
    first = run_campaign(cfg, workers=1)
    journal = (tmp_path / JOURNAL).read_text().splitlines()
    # drop the last two records and a torn line, as after a crash
    (tmp_path / JOURNAL).write_text("\n".join(journal[:-2]) + "\n{\"trial_index\": 9")
    again = run_campaign(cfg, workers=1)
    assert _strip(again) == _strip(first)


def test_campaign_journal_mismatch(tmp_path):
    # a journal from a different configuration is never reused
    run_campaign(_cfg(tmp_path, trials=2), workers=1)
    recs = run_campaign(_cfg(tmp_path, trials=2, master_seed=4), workers=1)
    fresh = run_campaign(_cfg(tmp_path / "x", trials=2, master_seed=4), workers=1)
    assert _strip(recs) == _strip(fresh)


def test_summary(tmp_path):
    recs = run_campaign(_cfg(tmp_path, ns=(50, 5000), trials=8), workers=1)
    summ = summarize(recs)
    assert len(summ["points"]) == 2
    pt = summ["points"][1]
    assert pt["n"] == 5000 and 0 <= pt["exact_fraction"] <= 1
    assert pt["var_R"] is None or pt["var_R"] >= 0
    assert summ["exponent_fits"]["0.5"]["alpha_hat"] is not None
    # arrival order does not matter
    assert summarize(list(reversed(recs))) == summ


def test_trial_record_roundtrip():
    rec = TrialRecord(1, 2, 0.5, 10, "rademacher", 0.5, 1, 1, 2, 2, 2, "exact", 1.2345)
    back = TrialRecord.from_row(dict(zip(TrialRecord.columns(), rec.row())))
    assert back.key() == rec.key() and back.R == 2 and back.wall_ms == pytest.approx(1.2345, abs=1e-3)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("REALROOT_THREADS", "3")
    assert worker_count(8) == 3 and worker_count(2) == 2 and worker_count() == 3


def test_worker_count_explicit_not_capped_by_cpus(monkeypatch):
    monkeypatch.delenv("REALROOT_THREADS", raising=False)
    assert worker_count(8) == 8 and worker_count() >= 1
