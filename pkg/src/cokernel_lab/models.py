"""Random matrices and graphs.

Entry laws are finite-support distributions on Z/m with exact rational
probabilities, so the same object drives both the samplers and the exact
enumeration oracles.  Every trial draws from its own counter-based stream,
keyed by (master seed, experiment id, n, trial index), which makes campaigns
reproducible at any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .groups import factorize
from .linalg import SYMMETRIES, ModMatrix

# below this nonzero probability, free entries are drawn by geometric skips
SPARSE_THRESHOLD = 0.25


def to_fraction(x) -> Fraction:
    """Exact rational for a probability; floats go through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class EntryDistribution:
    """Finite-support law on Z/m; ``support`` holds (residue, probability) pairs."""

    m: int
    support: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("modulus must be at least 2")
        merged: dict[int, Fraction] = {}
        for r, prob in self.support:
            prob = to_fraction(prob)
            if prob < 0:
                raise ValueError("negative probability")
            if prob:
                merged[int(r) % self.m] = merged.get(int(r) % self.m, Fraction(0)) + prob
        if sum(merged.values()) != 1:
            raise ValueError(f"probabilities sum to {sum(merged.values())}, not 1")
        object.__setattr__(self, "support", tuple(sorted(merged.items())))

    @property
    def residues(self) -> np.ndarray:
        return np.array([r for r, _ in self.support], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([float(q) for _, q in self.support])

    def prob(self, r: int) -> Fraction:
        return dict(self.support).get(int(r) % self.m, Fraction(0))

    @property
    def nonzero_prob(self) -> Fraction:
        return 1 - self.prob(0)

    def reduced(self, m: int) -> "EntryDistribution":
        """Push-forward to Z/m for a divisor m of the modulus."""
        if self.m % m:
            raise ValueError(f"{m} does not divide {self.m}")
        return EntryDistribution(m, tuple((r % m, q) for r, q in self.support))

    def to_json(self) -> dict:
        return {"type": "explicit", "m": self.m, "support": [[r, str(q)] for r, q in self.support]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "EntryDistribution":
        return cls(int(obj["m"]), tuple((int(r), Fraction(str(q))) for r, q in obj["support"]))


def alpha_of(D: EntryDistribution) -> Fraction:
    """Certified balancedness: 1 - max over p | m and a mod p of P(x = a mod p)."""
    worst = Fraction(0)
    for p in factorize(D.m):
        for r, q in D.reduced(p).support:
            worst = max(worst, q)
    return 1 - worst


def alpha_schedule(c: float, n: int) -> float:
    """c ln(n) / n clamped to (0, 1/2]."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if c <= 0:
        raise ValueError("c must be positive")
    return min(c * math.log(n) / n, 0.5)


def spike01(alpha, m: int = 2) -> EntryDistribution:
    """0 with probability 1 - alpha, 1 with probability alpha."""
    alpha = to_fraction(alpha)
    if not 0 < alpha <= Fraction(1, 2):
        raise ValueError("alpha must lie in (0, 1/2]")
    return EntryDistribution(m, ((0, 1 - alpha), (1, alpha)))


def spike_uniform(alpha, m: int) -> EntryDistribution:
    """0 with probability 1 - alpha, the rest spread evenly over nonzero residues.

    The certified balancedness can be smaller than ``alpha`` when m is not
    prime, because nonzero residues may reduce to 0 mod p.
    """
    alpha = to_fraction(alpha)
    if not 0 < alpha <= Fraction(1, 2):
        raise ValueError("alpha must lie in (0, 1/2]")
    if m < 2:
        raise ValueError("modulus must be at least 2")
    rest = alpha / (m - 1)
    return EntryDistribution(m, ((0, 1 - alpha),) + tuple((r, rest) for r in range(1, m)))


def spike_uniform_balanced(alpha, m: int) -> EntryDistribution:
    """spike_uniform rescaled so that alpha_of equals ``alpha`` exactly.

    Residues that vanish mod the smallest prime of m inflate P(x = 0 mod p);
    the nonzero mass is scaled up to compensate.
    """
    alpha = to_fraction(alpha)
    p = min(factorize(m))
    hidden = sum(1 for r in range(1, m) if r % p == 0)
    if not 0 < alpha <= Fraction(1, 2):
        raise ValueError("alpha must lie in (0, 1/2]")
    mass = alpha * (m - 1) / (m - 1 - hidden)
    if mass >= 1:
        raise ValueError(f"alpha={alpha} is not reachable for m={m}")
    rest = mass / (m - 1)
    return EntryDistribution(m, ((0, 1 - mass),) + tuple((r, rest) for r in range(1, m)))


def distribution_from_spec(spec: Mapping, n: int | None = None, m: int = 2) -> EntryDistribution:
    """Build an entry law from a config fragment.

    Accepted forms: ``{"type": "spike01", "alpha": 0.1}``, ``{"type": "spike01",
    "alpha_c": 1.5}`` (needs n), the same for ``spike_uniform`` and
    ``spike_uniform_balanced``, or an explicit ``{"type": "explicit", "m": 4,
    "support": [[0, "1/2"], ...]}``.
    """
    kind = spec.get("type", "spike01")
    if kind == "explicit":
        return EntryDistribution.from_json(spec)
    if "alpha" in spec:
        alpha = to_fraction(spec["alpha"]) if isinstance(spec["alpha"], str) else spec["alpha"]
    elif "alpha_c" in spec:
        if n is None:
            raise ValueError("alpha_c needs the matrix size n")
        alpha = alpha_schedule(float(spec["alpha_c"]), n)
    else:
        raise ValueError("distribution spec needs alpha or alpha_c")
    m = int(spec.get("m", m))
    if kind == "spike01":
        return spike01(alpha, m)
    if kind == "spike_uniform":
        return spike_uniform(alpha, m)
    if kind == "spike_uniform_balanced":
        return spike_uniform_balanced(alpha, m)
    raise ValueError(f"unknown distribution type {kind!r}")


def trial_stream(master_seed: int, experiment_id: int, n: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(experiment_id), int(n), int(trial)))
    return np.random.Generator(np.random.Philox(ss))


def sparse_positions(q: float, total: int, rng: np.random.Generator) -> np.ndarray:
    """Indices in [0, total) hit by independent Bernoulli(q) trials, via geometric gaps."""
    if q <= 0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    out = []
    pos = -1
    batch = max(16, int(total * q * 1.1) + 16)
    while True:
        gaps = rng.geometric(q, size=batch)
        steps = pos + np.cumsum(gaps)
        keep = steps[steps < total]
        out.append(keep)
        if len(keep) < batch:
            break
        pos = int(steps[-1])
    return np.concatenate(out).astype(np.int64)


def draw_sparse(D: EntryDistribution, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray] | None:
    """Positions and values of the nonzero draws, or None if D is not sparse enough."""
    q0 = D.prob(0)
    if not q0 or 1 - q0 > SPARSE_THRESHOLD:
        return None
    pos = sparse_positions(float(1 - q0), size, rng)
    nonzero = [(r, q) for r, q in D.support if r != 0]
    if len(nonzero) == 1:
        return pos, np.full(len(pos), nonzero[0][0], dtype=np.int64)
    w = np.array([float(q) for _, q in nonzero])
    return pos, rng.choice(np.array([r for r, _ in nonzero]), size=len(pos), p=w / w.sum())


def draw_entries(D: EntryDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws from D as an int64 array."""
    sparse = draw_sparse(D, size, rng)
    if sparse is not None:
        out = np.zeros(size, dtype=np.int64)
        out[sparse[0]] = sparse[1]
        return out
    if len(D.support) == 1:
        return np.full(size, D.support[0][0], dtype=np.int64)
    return rng.choice(D.residues, size=size, p=D.probs)


@dataclass(frozen=True)
class MatrixModel:
    """Square matrices over Z/m with independent free entries.

    ``overrides`` maps a free position (i, j) to its own entry law; free
    positions are all (i, j) for general, i <= j for symmetric and i < j for
    alternating matrices.
    """

    kind: str
    n: int
    distribution: EntryDistribution
    overrides: Mapping[tuple[int, int], EntryDistribution] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SYMMETRIES:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        for (i, j), D in self.overrides.items():
            if D.m != self.distribution.m:
                raise ValueError("override modulus differs from the base distribution")
            if not self.is_free(i, j):
                raise ValueError(f"({i}, {j}) is not a free position for {self.kind} matrices")

    @property
    def m(self) -> int:
        return self.distribution.m

    def is_free(self, i: int, j: int) -> bool:
        if not (0 <= i < self.n and 0 <= j < self.n):
            return False
        if self.kind == "symmetric":
            return i <= j
        if self.kind == "alternating":
            return i < j
        return True

    def free_positions(self) -> tuple[np.ndarray, np.ndarray]:
        return self._positions

    @cached_property
    def _positions(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        if self.kind == "general":
            ii, jj = np.indices((n, n))
            return ii.ravel(), jj.ravel()
        return np.triu_indices(n, 0 if self.kind == "symmetric" else 1)

    def entry_distribution(self, i: int, j: int) -> EntryDistribution:
        return self.overrides.get((i, j), self.distribution)


def sample_entries(model: MatrixModel, rng: np.random.Generator) -> np.ndarray:
    """One draw from the model as a plain int64 array of residues."""
    n, m = model.n, model.m
    rows, cols = model.free_positions()
    a = np.zeros((n, n), dtype=np.int64)
    sparse = None if model.overrides else draw_sparse(model.distribution, len(rows), rng)
    if sparse is not None:
        pos, values = sparse
        rows, cols = rows[pos], cols[pos]
    else:
        values = draw_entries(model.distribution, len(rows), rng)
        if model.overrides:
            index = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(rows, cols))}
            for key in sorted(model.overrides):
                values[index[key]] = draw_entries(model.overrides[key], 1, rng)[0]
    a[rows, cols] = values
    if model.kind == "symmetric":
        a[cols, rows] = values
    elif model.kind == "alternating":
        a[cols, rows] = (-values) % m
    return a


def sample_matrix(model: MatrixModel, rng: np.random.Generator) -> ModMatrix:
    """One draw from the model; deterministic given the stream."""
    return ModMatrix(sample_entries(model, rng), model.m, model.kind)


@dataclass(frozen=True)
class GraphModel:
    """Erdos-Renyi graph on n vertices with edge probability beta.

    beta = 0 and beta = 1 are accepted for deterministic checks.
    """

    n: int
    beta: float | Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graphs need at least one vertex")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")

    @property
    def beta_fraction(self) -> Fraction:
        return to_fraction(self.beta)


def beta_schedule(c0: float, n: int) -> float:
    """(ln n + c0) / n, the connectivity window."""
    return min(max((math.log(n) + c0) / n, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class GraphSample:
    adjacency: np.ndarray
    reduced_laplacian: np.ndarray
    connected: bool


def _upper_pairs(n: int, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(i, j), i < j, of positions in the row-major listing of the strict upper triangle."""
    starts = np.arange(n) * (2 * n - np.arange(n) - 1) // 2
    i = np.searchsorted(starts, index, side="right") - 1
    j = index - starts[i] + i + 1
    return i, j


def _sample_edges(model: GraphModel, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = model.n
    total = n * (n - 1) // 2
    beta = float(model.beta)
    if beta <= SPARSE_THRESHOLD:
        hit = sparse_positions(beta, total, rng)
    else:
        hit = np.nonzero(rng.random(total) < beta)[0]
    return _upper_pairs(n, hit)


def _is_connected(n: int, rows: np.ndarray, cols: np.ndarray) -> bool:
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    count, _ = connected_components(graph, directed=False)
    return count == 1


def sample_graph_laplacian(model: GraphModel, rng: np.random.Generator) -> GraphSample:
    """Adjacency, reduced Laplacian (last row and column deleted) and connectivity."""
    n = model.n
    rows, cols = _sample_edges(model, rng)
    adj = np.zeros((n, n), dtype=bool)
    adj[rows, cols] = True
    adj[cols, rows] = True
    lap = np.diag(adj.sum(axis=1)).astype(np.int64) - adj.astype(np.int64)
    return GraphSample(adj, lap[:-1, :-1].copy(), _is_connected(n, rows, cols))


def sample_graph_connected(model: GraphModel, rng: np.random.Generator) -> bool:
    """Connectivity only; never materializes the dense adjacency matrix."""
    rows, cols = _sample_edges(model, rng)
    return _is_connected(model.n, rows, cols)
