"""Run configuration shared by the campaign runner and the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Union

from .construction import ParameterError, as_fraction
from .noise import KINDS, NoiseSpec

VERSION = "0.1.0"
DEFAULT_LADDER = (53, 128, 512, 4096)

# fields that change where or how loudly a run happens, not what it computes
_RUN_LOCAL = ("output_dir", "verbosity")


def _split_list(text: str) -> list[str]:
    return [x.strip() for x in str(text).replace(";", ",").split(",") if x.strip()]


@dataclass
class RunConfig:
    alphas: tuple = ("0.5",)
    ns: tuple = (1000,)
    dist: str = "rademacher"
    p: float = 0.5
    trials: int = 100
    master_seed: int = 0
    precision_ladder: tuple = DEFAULT_LADDER
    output_dir: str = "."
    verbosity: int = 0
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.alphas = tuple(str(a) for a in self.alphas)
        self.ns = tuple(int(n) for n in self.ns)
        self.precision_ladder = tuple(int(x) for x in self.precision_ladder)
        self.trials = int(self.trials)
        self.master_seed = int(self.master_seed)
        self.p = float(self.p)
        self.verbosity = int(self.verbosity)

    def validate(self) -> "RunConfig":
        if not self.alphas:
            raise ParameterError("at least one alpha is required")
        for a in self.alphas:
            f = as_fraction(a)
            if not (0 < f < 1):
                raise ParameterError(f"alpha must lie in (0, 1), got {a}")
        if not self.ns or any(n < 0 for n in self.ns):
            raise ParameterError("n values must be nonnegative and at least one is required")
        if self.dist not in KINDS:
            raise ParameterError(f"unknown distribution {self.dist!r}")
        self.noise_spec()
        if self.trials < 0:
            raise ParameterError("trials must be nonnegative")
        if not (0 <= self.master_seed < 2**64):
            raise ParameterError("master seed must be a 64-bit unsigned integer")
        lad = self.precision_ladder
        if not lad or any(b <= a for a, b in zip(lad, lad[1:])) or lad[0] < 53:
            raise ParameterError("precision ladder must be increasing and start at >= 53 bits")
        return self

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.dist, self.p)

    @property
    def max_precision(self) -> int:
        return self.precision_ladder[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d["alphas"] = list(self.alphas)
        d["ns"] = list(self.ns)
        d["precision_ladder"] = list(self.precision_ladder)
        return d

    def provenance(self) -> dict:
        """What determines the results: version plus every non-local field."""
        d = {k: v for k, v in self.to_dict().items() if k not in _RUN_LOCAL}
        return {"tool": "realroot", "version": VERSION, "config": d}

    def header_lines(self) -> list[str]:
        prov = self.provenance()
        return [f"realroot {VERSION}", "config " + json.dumps(prov["config"], sort_keys=True),
                f"master_seed {self.master_seed}"]

    def updated(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)} - {"extra"}
        alias = {"alpha": "alphas", "n": "ns", "seed": "master_seed", "m": "trials", "outdir": "output_dir",
                 "precision": "precision_ladder"}
        kw: dict = {}
        for key, val in data.items():
            k = alias.get(key.strip().lower().replace("-", "_"), key.strip().lower().replace("-", "_"))
            if k not in names:
                raise ParameterError(f"unknown config key {key!r}")
            if k in ("alphas", "ns", "precision_ladder") and isinstance(val, str):
                val = _split_list(val)
            if k == "ns":
                val = [int(float(x)) for x in val]
            kw[k] = val
        return cls(**kw)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Plain ``key = value`` lines; ``#`` starts a comment; lists are comma separated."""
        data: dict = {}
        for num, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{num}: expected key = value")
            k, v = line.split("=", 1)
            data[k.strip()] = v.strip()
        return cls.from_mapping(data)
