"""Campaign configuration: one JSON document per run."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError
from ..groups import PGroupType, is_prime
from ..models import alpha_schedule, beta_schedule

EXPERIMENT_KINDS = ("cok-dist", "rank-dist", "moment", "sandpile", "sharpness", "verify")
MATRIX_KINDS = ("general", "symmetric", "alternating", "graph")


def _group(obj, p: int) -> PGroupType:
    if isinstance(obj, PGroupType):
        return obj
    if isinstance(obj, str):
        obj = json.loads(obj)
    if isinstance(obj, Mapping):
        return PGroupType.from_json({"p": obj.get("p", p), "lambda": obj.get("lambda", [])})
    return PGroupType(p, tuple(obj))


@dataclass
class ExperimentConfig:
    """Everything a campaign needs; ``workers`` is the only field that may not affect results."""

    kind: str
    n: list[int] = field(default_factory=lambda: [400])
    trials: int = 1000
    master_seed: int = 0
    workers: int = 1
    experiment_id: int = 0
    matrix: str = "general"
    p: int = 2
    d: int = 2
    c: float | None = 1.5
    alpha: float | None = None
    distribution: dict = field(default_factory=lambda: {"type": "spike01"})
    beta: float | None = None
    beta_c0: float | None = None
    targets: list[PGroupType] = field(default_factory=list)
    G: PGroupType | None = None
    k: int = 3
    max_corank: int = 6
    connectivity_only: bool = False
    z: float = 3.0
    drift: float | None = None
    inject: dict = field(default_factory=dict)
    checks: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    # -------------------------------------------------------------- parsing

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ExperimentConfig":
        obj = dict(obj)
        p = int(obj.get("p", 2))
        if "H" in obj:
            H = obj.pop("H")
            obj["targets"] = H if isinstance(H, list) else [H]
        if "targets" in obj:
            obj["targets"] = [_group(h, p) for h in obj["targets"]]
        if obj.get("G") is not None:
            obj["G"] = _group(obj["G"], p)
        if isinstance(obj.get("n"), int):
            obj["n"] = [obj["n"]]
        graph = obj.pop("graph", None)
        if graph:
            if "n" in graph:
                obj["n"] = graph["n"] if isinstance(graph["n"], list) else [graph["n"]]
            if "beta" in graph:
                obj["beta"] = float(graph["beta"])
            if "beta_schedule" in graph:
                obj["beta_c0"] = float(graph["beta_schedule"]["c0"])
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        """Config echo for reports; ``workers`` is left out so reports do not depend on it."""
        out = asdict(self)
        out.pop("workers")
        out["targets"] = [h.to_json() for h in self.targets]
        out["G"] = self.G.to_json() if self.G is not None else None
        return out

    # -------------------------------------------------------------- checks

    def validate(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"kind must be one of {EXPERIMENT_KINDS}")
        if self.kind == "verify":
            return
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.n or any(int(n) < 1 for n in self.n):
            raise ConfigError("every n must be at least 1")
        self.n = [int(n) for n in self.n]
        if self.d < 1:
            raise ConfigError("d must be at least 1")
        if not is_prime(self.p):
            raise ConfigError(f"p={self.p} is not prime")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.kind == "sandpile":
            self.matrix = "graph"
        if self.matrix not in MATRIX_KINDS:
            raise ConfigError(f"matrix must be one of {MATRIX_KINDS}")
        if self.matrix == "graph":
            if (self.beta is None) == (self.beta_c0 is None):
                raise ConfigError("graph models need exactly one of beta or beta_c0")
            if self.beta is not None and not 0 < self.beta <= 1:
                raise ConfigError("beta must lie in (0, 1]")
        elif self.kind != "sharpness" and self.alpha is None and (self.c is None or self.c <= 0):
            raise ConfigError("matrix models need alpha or a positive c")
        if self.kind in ("cok-dist", "sandpile"):
            if not self.targets:
                self.targets = [PGroupType(self.p, ())]
            for H in self.targets:
                if H.p != self.p:
                    raise ConfigError("target prime differs from p")
                need = (H.lam.parts[0] if H.rank else 0) + (2 if self.odd_alternating_any else 1)
                if self.d < need:
                    raise ConfigError(f"d={self.d} cannot certify the target {H}; need d >= {need}")
        if self.kind == "moment":
            if self.G is None:
                self.G = PGroupType(self.p, (1,))
            if self.G.p != self.p:
                raise ConfigError("G has the wrong prime")
            if self.G.exponent > self.p**self.d:
                raise ConfigError(f"d={self.d} is too low for Hom into {self.G}")
            if self.G.order > 4096:
                raise ConfigError("G is too large for the subgroup lattice")
        if self.kind == "sharpness" and self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.z <= 0:
            raise ConfigError("z must be positive")

    @property
    def odd_alternating_any(self) -> bool:
        return self.matrix == "alternating" and any(n % 2 for n in self.n)

    @property
    def gate_drift(self) -> float:
        if self.drift is not None:
            return float(self.drift)
        return 0.05 if self.kind == "moment" else 0.02

    @property
    def modulus(self) -> int:
        return self.p**self.d

    def alpha_at(self, n: int) -> float:
        if self.kind == "sharpness":
            return min(math.log(n) / n, 0.5)
        if self.alpha is not None:
            return float(self.alpha)
        return alpha_schedule(float(self.c), n)

    def beta_at(self, n: int) -> float:
        if self.beta is not None:
            return float(self.beta)
        return beta_schedule(float(self.beta_c0), n)
