"""Coefficient noise with counter-based, platform-deterministic sampling.

Each draw is a pure function of ``(seed, k, attempt)``: a splitmix64-style
avalanche mixer turns the triple into 64 random bits, so any partition of
the index range yields bit-identical realizations.  Gaussian draws go
through the AS241 (PPND16) inverse normal CDF.

The canonical representation of a draw is the pair ``(sign, log|eps|)``;
``eps`` itself is ``sign * exp(logabs)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .construction import CoefficientSchedule, ParameterError

KINDS = ("gaussian", "rademacher", "uniform")
MAX_ATTEMPTS = 8
FORMAT_HEADER = "# realroot-noise v1"

_M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int (reduced mod 2**64)."""
    z = (x + GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * MIX1) & _M64
    z = ((z ^ (z >> 27)) * MIX2) & _M64
    return z ^ (z >> 31)


def _mix64_np(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def trial_seed(master: int, index: int) -> int:
    """Seed of trial ``index`` in a campaign with ``master`` seed."""
    return mix64((int(master) ^ mix64(int(index))) & _M64)


def stream_bits(seed: int, k: np.ndarray, attempt: int = 0) -> np.ndarray:
    """64 random bits for each index in ``k``: ``mix64(mix64(seed) ^ mix64(k*64 + attempt))``."""
    key = np.uint64(mix64(seed & _M64))
    kk = k.astype(np.uint64) * np.uint64(64) + np.uint64(attempt)
    return _mix64_np(key ^ _mix64_np(kk))


def to_unit(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits to a float strictly inside (0, 1), symmetric about 1/2."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# AS241 PPND16 coefficients
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * x + c
    return acc


def ndtri(u: np.ndarray) -> np.ndarray:
    """Inverse standard normal CDF (AS241, about 1e-16 relative accuracy)."""
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    out = np.empty_like(u)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0, u[tail], 1.0 - u[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        rr = np.where(near, r - 1.6, r - 5.0)
        val = np.where(near, _poly(_C, rr) / _poly(_D, rr), _poly(_E, rr) / _poly(_F, rr))
        out[tail] = np.where(qt < 0, -val, val)
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Distribution of the i.i.d. noise ``eps_k``.

    ``p`` is ``P(eps > 0)``; only the rademacher kind accepts ``p != 1/2``.
    ``scale`` multiplies every draw (``scale < 1`` degrades anti-concentration
    and is meant for diagnostic runs only).
    """

    kind: str = "rademacher"
    p: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterError("scale must be positive and finite")
        if self.kind == "rademacher":
            # p = 1 is accepted for generator unit tests (1 - 2**-60 rounds to 1.0)
            if not (0.0 < self.p <= 1.0):
                raise ParameterError("rademacher p must lie in (0, 1]")
        elif self.p != 0.5:
            raise ParameterError(f"{self.kind} noise is symmetric; p must be 1/2")

    @property
    def c0(self) -> float:
        """Constant with ``P(|eps| <= t) <= c0 * t`` for all ``t >= 0``."""
        base = {"gaussian": math.sqrt(2.0 / math.pi), "uniform": 1.0, "rademacher": 1.0}[self.kind]
        return base / self.scale

    @property
    def mean_abs(self) -> float:
        base = {"gaussian": math.sqrt(2.0 / math.pi), "uniform": 0.5, "rademacher": 1.0}[self.kind]
        return base * self.scale


@dataclass
class NoiseRealization:
    n: int
    eps_sign: np.ndarray
    eps_logabs: np.ndarray
    seed: int = 0
    spec: Optional[NoiseSpec] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.eps_sign = np.asarray(self.eps_sign, dtype=np.int8)
        self.eps_logabs = np.asarray(self.eps_logabs, dtype=np.float64)
        if self.eps_sign.shape != (self.n + 1,) or self.eps_logabs.shape != (self.n + 1,):
            raise ParameterError("noise arrays must have length n + 1")
        if not np.all(np.abs(self.eps_sign) == 1):
            raise ParameterError("signs must be +1 or -1")
        if not np.all(np.isfinite(self.eps_logabs)):
            raise ParameterError("log-magnitudes must be finite")

    @classmethod
    def from_values(cls, values, seed: int = 0, spec: Optional[NoiseSpec] = None) -> "NoiseRealization":
        v = np.asarray(values, dtype=np.float64)
        if np.any(v == 0) or not np.all(np.isfinite(v)):
            raise ParameterError("noise values must be finite and nonzero")
        return cls(len(v) - 1, np.sign(v).astype(np.int8), np.log(np.abs(v)), seed, spec)

    def values(self) -> np.ndarray:
        return self.eps_sign * np.exp(self.eps_logabs)

    def same_arrays(self, other: "NoiseRealization") -> bool:
        return (self.n == other.n and np.array_equal(self.eps_sign, other.eps_sign)
                and np.array_equal(self.eps_logabs.view(np.uint64), other.eps_logabs.view(np.uint64)))

    def flipped_negative(self) -> "NoiseRealization":
        """Realization of ``f(-x)``: ``eps_k -> (-1)**k eps_k``."""
        par = np.where(np.arange(self.n + 1) % 2 == 1, -1, 1).astype(np.int8)
        return NoiseRealization(self.n, self.eps_sign * par, self.eps_logabs.copy(), self.seed, self.spec)

    # -- persistence ----------------------------------------------------------

    def dump_csv(self, path: Union[str, Path]) -> None:
        spec = self.spec or NoiseSpec()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{FORMAT_HEADER} kind={spec.kind} p={spec.p!r} scale={spec.scale!r} "
                     f"n={self.n} seed={self.seed}\n")
            fh.write("k,sign,logabs\n")
            for k in range(self.n + 1):
                fh.write(f"{k},{int(self.eps_sign[k])},{float(self.eps_logabs[k])!r}\n")

    @classmethod
    def load_csv(cls, path: Union[str, Path]) -> "NoiseRealization":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith(FORMAT_HEADER):
                raise ParameterError(f"not a realroot noise file (header {header!r})")
            meta = dict(tok.split("=", 1) for tok in header[len(FORMAT_HEADER):].split())
            if fh.readline().strip() != "k,sign,logabs":
                raise ParameterError("missing column header")
            rows = [line.split(",") for line in fh if line.strip()]
        n = int(meta["n"])
        if len(rows) != n + 1 or any(int(r[0]) != i for i, r in enumerate(rows)):
            raise ParameterError("noise file rows do not match n")
        spec = NoiseSpec(meta["kind"], float(meta["p"]), float(meta["scale"]))
        signs = np.array([int(r[1]) for r in rows], dtype=np.int8)
        logs = np.array([float(r[2]) for r in rows], dtype=np.float64)
        return cls(n, signs, logs, int(meta["seed"]), spec)


def _draw(spec: NoiseSpec, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map uniforms to (sign, log|eps|); log is -inf for an exact zero draw."""
    if spec.kind == "rademacher":
        sign = np.where(u < spec.p, 1, -1).astype(np.int8)
        logabs = np.zeros_like(u)
    else:
        x = ndtri(u) if spec.kind == "gaussian" else 2.0 * u - 1.0
        sign = np.where(x < 0, -1, 1).astype(np.int8)
        with np.errstate(divide="ignore"):
            logabs = np.log(np.abs(x))
    if spec.scale != 1.0:
        logabs = logabs + math.log(spec.scale)
    return sign, logabs


def sample(spec: NoiseSpec, n: int, seed: int) -> NoiseRealization:
    if n < 0:
        raise ParameterError("degree n must be nonnegative")
    if not (0 <= seed <= _M64):
        raise ParameterError("seed must be a 64-bit unsigned integer")
    k = np.arange(n + 1, dtype=np.uint64)
    sign, logabs = _draw(spec, to_unit(stream_bits(seed, k, 0)))
    for attempt in range(1, MAX_ATTEMPTS + 1):
        bad = ~np.isfinite(logabs)
        if not bad.any():
            break
        s2, l2 = _draw(spec, to_unit(stream_bits(seed, k[bad], attempt)))
        sign[bad], logabs[bad] = s2, l2
    else:
        if not np.all(np.isfinite(logabs)):
            raise RuntimeError("noise generator produced repeated zero draws")
    return NoiseRealization(n, sign, logabs, seed, spec)


def leader_signs(r: NoiseRealization, sched: CoefficientSchedule, axis: str = "positive") -> np.ndarray:
    """Signs of ``(eps_{m_0}, ..., eps_{m_{j*-1}}, eps_n)`` as seen on ``axis``."""
    if r.n != sched.n:
        raise ParameterError("realization and schedule degrees differ")
    if axis not in ("positive", "negative"):
        raise ParameterError(f"unknown axis {axis!r}")
    idx = np.append(sched.m_array()[: sched.j_star], sched.n)
    seq = r.eps_sign[idx].astype(np.int64)
    if axis == "negative":
        # leaders m_j are even; only eps_n picks up (-1)**n
        seq[-1] *= -1 if sched.n % 2 else 1
    return seq


def sign_changes(r: NoiseRealization, sched: CoefficientSchedule, axis: str = "positive") -> int:
    seq = leader_signs(r, sched, axis)
    return int(np.count_nonzero(seq[1:] != seq[:-1]))
