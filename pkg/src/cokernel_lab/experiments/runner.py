"""Deterministic parallel execution of Monte Carlo campaigns.

Each trial is a pure function of (config, n, trial index): it draws from its
own stream and returns a text key (a cokernel class, a zero-column count, or a
connectivity flag).  Workers tally keys over contiguous trial ranges and the
tallies are summed, so the merged histogram does not depend on how the range
was split or on the number of processes.
"""

from __future__ import annotations

import multiprocessing
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..linalg import cokernel_class, multi_prime_cokernel
from ..models import (
    GraphModel,
    MatrixModel,
    distribution_from_spec,
    sample_graph_connected,
    sample_graph_laplacian,
    sample_entries,
    sparse_positions,
    spike01,
    trial_stream,
)
from .config import ExperimentConfig

DISCONNECTED = "disconnected"
CONNECTED = "connected"


@dataclass
class Campaign:
    """Merged per-n histograms plus timings (timings never enter the report)."""

    config: ExperimentConfig
    histograms: dict[int, Counter] = field(default_factory=dict)
    seconds: dict[int, float] = field(default_factory=dict)


def _matrix_model(cfg: ExperimentConfig, n: int) -> MatrixModel:
    spec = dict(cfg.distribution)
    if "alpha" not in spec and "alpha_c" not in spec and spec.get("type") != "explicit":
        spec["alpha"] = cfg.alpha_at(n)
    D = distribution_from_spec(spec, n=n, m=cfg.modulus)
    if D.m % cfg.modulus:
        raise ValueError(f"entry modulus {D.m} is not divisible by p^d = {cfg.modulus}")
    return MatrixModel(cfg.matrix, n, D)


class TrialClassifier:
    """Maps a trial index to its histogram key for one (config, n)."""

    def __init__(self, cfg: ExperimentConfig, n: int):
        self.cfg = cfg
        self.n = n
        if cfg.kind == "sharpness":
            self._classify = self._zero_columns
            self._q = cfg.alpha_at(n)
        elif cfg.matrix == "graph":
            self.graph = GraphModel(n, cfg.beta_at(n))
            self._classify = self._graph
        else:
            self.model = _matrix_model(cfg, n)
            self._classify = self._matrix

    def __call__(self, trial: int) -> str:
        rng = trial_stream(self.cfg.master_seed, self.cfg.experiment_id, self.n, trial)
        return self._classify(rng)

    def _matrix(self, rng) -> str:
        a = sample_entries(self.model, rng)
        return cokernel_class(a, self.cfg.p, self.cfg.d).key()

    def _graph(self, rng) -> str:
        cfg = self.cfg
        if cfg.connectivity_only:
            return CONNECTED if sample_graph_connected(self.graph, rng) else DISCONNECTED
        sample = sample_graph_laplacian(self.graph, rng)
        if cfg.kind == "sandpile" and not sample.connected:
            return DISCONNECTED
        if sample.reduced_laplacian.size == 0:
            return "|0"
        return multi_prime_cokernel(sample.reduced_laplacian, {cfg.p: cfg.d})[cfg.p].key()

    def _zero_columns(self, rng) -> str:
        # spike01 entries: a column is zero when none of its n entries is hit
        n = self.n
        hits = sparse_positions(self._q, n * n, rng)
        return str(n - len(np.unique(hits % n)))


def zero_column_model(n: int) -> MatrixModel:
    """The dense model behind the sharpness campaign, for small-n cross-checks."""
    return MatrixModel("general", n, spike01(min(np.log(n) / n, 0.5)))


def run_chunk(cfg_json: dict, workers: int, n: int, start: int, stop: int) -> dict[str, int]:
    cfg = ExperimentConfig.from_json({**cfg_json, "workers": workers})
    classify = TrialClassifier(cfg, n)
    counts: Counter = Counter()
    for trial in range(start, stop):
        counts[classify(trial)] += 1
    return dict(counts)


def _chunks(trials: int, pieces: int) -> list[tuple[int, int]]:
    pieces = max(1, min(pieces, trials))
    bounds = np.linspace(0, trials, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def collect(cfg: ExperimentConfig) -> Campaign:
    """Run every trial of every n and merge the histograms."""
    camp = Campaign(cfg)
    cfg_json = cfg.to_json()
    executor = None
    if cfg.workers > 1:
        ctx = multiprocessing.get_context("fork")
        executor = ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx)
    try:
        for n in cfg.n:
            t0 = time.perf_counter()
            merged: Counter = Counter()
            if executor is None:
                merged.update(run_chunk(cfg_json, 1, n, 0, cfg.trials))
            else:
                futures = [
                    executor.submit(run_chunk, cfg_json, 1, n, a, b)
                    for a, b in _chunks(cfg.trials, cfg.workers * 4)
                ]
                for fut in futures:
                    merged.update(fut.result())
            camp.histograms[n] = merged
            camp.seconds[n] = time.perf_counter() - t0
    finally:
        if executor is not None:
            executor.shutdown()
    return camp
