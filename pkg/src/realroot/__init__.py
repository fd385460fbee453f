"""Certified real-root counts for random polynomials with block-exponential coefficients."""

from .config import VERSION as __version__
from .config import RunConfig
from .construction import AlphaParams, CoefficientSchedule, ParameterError, Window, make_params
from .logeval import EvalRequest, SignedLogInterval, Weight, dominance_margin, eval_sign
from .mc import (CampaignSummary, TrialRecord, clt_diagnostics, estimate_exponent, run_campaign, summarize,
                 theory_sign_change_moments)
from .noise import NoiseRealization, NoiseSpec, sample, sign_changes, trial_seed
from .rootcount import (CountOptions, RootCountReport, certify_transition, certify_window, count_certified,
                        predict, rouche_bound, t_domain)
from .verify import EventFrequency, IncrementTable, check_increments, event_scan
from .xreal import XReal

__all__ = [
    "__version__", "AlphaParams", "CampaignSummary", "CoefficientSchedule", "CountOptions", "EvalRequest",
    "EventFrequency", "IncrementTable", "NoiseRealization", "NoiseSpec", "ParameterError", "RootCountReport",
    "RunConfig", "SignedLogInterval", "TrialRecord", "Weight", "Window", "XReal", "certify_transition",
    "certify_window", "check_increments", "clt_diagnostics", "count_certified", "dominance_margin",
    "estimate_exponent", "eval_sign", "event_scan", "make_params", "predict", "rouche_bound", "run_campaign",
    "sample", "sign_changes", "summarize", "t_domain", "theory_sign_change_moments", "trial_seed",
]
