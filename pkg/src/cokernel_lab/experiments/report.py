"""Turn merged histograms into estimate rows and write the report files.

Rows are computed from integer histograms in a fixed key order, so the same
histograms always serialize to the same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

from ..groups import Partition, PGroupType, enumerate_subgroups
from ..linalg import CokernelClass
from ..oracle import hom_count_from_class, sur_count, zero_column_bound
from ..universal import (
    cokernel_limit_prob,
    corank_limit_prob,
    corank_tail,
    moment_limit,
    sandpile_limit_prob,
)
from .config import ExperimentConfig
from .runner import CONNECTED, DISCONNECTED, Campaign

ROW_FIELDS = (
    "experiment",
    "n",
    "quantity",
    "estimate",
    "se",
    "ci_low",
    "ci_high",
    "wilson_low",
    "wilson_high",
    "limit",
    "abs_diff",
    "tolerance",
    "relation",
    "pass",
    "trials",
)


def wilson_interval(successes: int, trials: int, z: float) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _finish(row: dict, z: float, drift: float, tolerance: float | None = None) -> dict:
    est, se, limit = row["estimate"], row["se"], row["limit"]
    row["ci_low"] = est - z * se
    row["ci_high"] = est + z * se
    row.setdefault("relation", "approx")
    if limit is None:
        row.update(abs_diff=None, tolerance=None, **{"pass": None})
        return row
    row["abs_diff"] = abs(est - limit)
    if row["relation"] == "above":
        # certify estimate > limit with a z-sigma margin
        row["tolerance"] = z * se
        row["pass"] = est - z * se > limit
    else:
        row["tolerance"] = z * se + drift if tolerance is None else tolerance
        row["pass"] = row["abs_diff"] <= row["tolerance"]
    return row


def proportion_row(experiment, n, quantity, hits, trials, limit, z, drift, tolerance=None, relation="approx"):
    phat = hits / trials
    lo, hi = wilson_interval(hits, trials, z)
    row = {
        "experiment": experiment,
        "n": n,
        "quantity": quantity,
        "estimate": phat,
        "se": math.sqrt(phat * (1 - phat) / trials),
        "wilson_low": lo,
        "wilson_high": hi,
        "limit": limit,
        "trials": trials,
        "relation": relation,
    }
    return _finish(row, z, drift, tolerance)


def mean_row(experiment, n, quantity, values: dict[int, int], limit, z, drift, tolerance=None):
    """Mean of an integer-valued statistic given as value -> count."""
    trials = sum(values.values())
    total = sum(v * c for v, c in sorted(values.items()))
    square = sum(v * v * c for v, c in sorted(values.items()))
    mean = total / trials
    var = (square - total * total / trials) / (trials - 1) if trials > 1 else 0.0
    row = {
        "experiment": experiment,
        "n": n,
        "quantity": quantity,
        "estimate": mean,
        "se": math.sqrt(max(var, 0.0) / trials),
        "wilson_low": None,
        "wilson_high": None,
        "limit": limit,
        "trials": trials,
    }
    return _finish(row, z, drift, tolerance)


def parse_class_key(key: str, p: int, d: int) -> CokernelClass:
    parts, saturated = key.split("|")
    lam = Partition(tuple(int(x) for x in parts.split(",") if x))
    return CokernelClass(p, d, lam, int(saturated))


def matrix_kind(cfg: ExperimentConfig, n: int) -> str:
    if cfg.matrix == "alternating":
        return "alternating-odd" if n % 2 else "alternating-even"
    return cfg.matrix


def _class_counts(cfg: ExperimentConfig, hist) -> list[tuple[CokernelClass, int]]:
    return [(parse_class_key(k, cfg.p, cfg.d), c) for k, c in sorted(hist.items()) if k not in (CONNECTED, DISCONNECTED)]


def _target_hit(cls: CokernelClass, H: PGroupType, kind: str) -> bool:
    if kind == "alternating-odd":
        return cls.is_free_rank_one_plus(H)
    return cls.is_exactly(H)


def rows_cok_dist(cfg: ExperimentConfig, n: int, hist) -> list[dict]:
    kind = matrix_kind(cfg, n)
    classes = _class_counts(cfg, hist)
    rows = []
    for H in cfg.targets:
        hits = sum(c for cls, c in classes if _target_hit(cls, H, kind))
        label = f"P(cok = {'Z_p x ' if kind == 'alternating-odd' else ''}{H})"
        rows.append(
            proportion_row("cok-dist", n, label, hits, cfg.trials, cokernel_limit_prob(kind, H), cfg.z, cfg.gate_drift)
        )
    return rows


def rows_rank_dist(cfg: ExperimentConfig, n: int, hist) -> list[dict]:
    kind = matrix_kind(cfg, n)
    classes = _class_counts(cfg, hist)
    rows = []
    for k in range(cfg.max_corank + 1):
        hits = sum(c for cls, c in classes if cls.corank == k)
        rows.append(
            proportion_row(
                "rank-dist", n, f"P(corank = {k})", hits, cfg.trials, corank_limit_prob(kind, cfg.p, k), cfg.z, cfg.gate_drift
            )
        )
    return rows


def hom_moment_limit(kind: str, G: PGroupType) -> int:
    """Limit of E #Hom = sum over subgroups K of the Sur-moment limit for K."""
    return sum(moment_limit(kind, K.group_type()) for K in enumerate_subgroups(G))


def rows_moment(cfg: ExperimentConfig, n: int, hist) -> list[dict]:
    kind = matrix_kind(cfg, n)
    G = cfg.G
    sur: dict[int, int] = {}
    hom: dict[int, int] = {}
    for cls, c in _class_counts(cfg, hist):
        s = sur_count(cls, G)
        h = hom_count_from_class(cls, G)
        sur[s] = sur.get(s, 0) + c
        hom[h] = hom.get(h, 0) + c
    # the odd alternating cokernel carries a free factor; no limit is tabulated for it
    known = kind != "alternating-odd"
    return [
        mean_row("moment", n, f"E#Sur(cok, {G})", sur, moment_limit(kind, G) if known else None, cfg.z, cfg.gate_drift),
        mean_row("moment", n, f"E#Hom(cok, {G})", hom, hom_moment_limit(kind, G) if known else None, cfg.z, cfg.gate_drift),
    ]


def disconnection_limit(cfg: ExperimentConfig) -> float:
    if cfg.beta_c0 is not None:
        return 1 - math.exp(-math.exp(-cfg.beta_c0))
    return 0.0


def rows_sandpile(cfg: ExperimentConfig, n: int, hist) -> list[dict]:
    rows = []
    disc = hist.get(DISCONNECTED, 0)
    rows.append(
        proportion_row(
            "sandpile", n, "P(disconnected)", disc, cfg.trials, disconnection_limit(cfg), cfg.z, cfg.gate_drift,
            tolerance=0.05 if cfg.beta_c0 is not None else None,
        )
    )
    if cfg.connectivity_only:
        return rows
    classes = _class_counts(cfg, hist)
    for H in cfg.targets:
        hits = sum(c for cls, c in classes if cls.is_exactly(H))
        rows.append(
            proportion_row(
                "sandpile", n, f"P(Sylow-{cfg.p} = {H})", hits, cfg.trials, sandpile_limit_prob(H), cfg.z, cfg.gate_drift
            )
        )
    return rows


def rows_sharpness(cfg: ExperimentConfig, n: int, hist) -> list[dict]:
    counts = {int(k): c for k, c in hist.items()}
    k = cfg.k
    tail = corank_tail("general", cfg.p, k)
    hits = sum(c for v, c in counts.items() if v >= k)
    bound = float(zero_column_bound(k))
    rows = [
        mean_row("sharpness", n, "E(zero columns)", counts, 1.0, cfg.z, cfg.gate_drift, tolerance=0.1),
        proportion_row(
            "sharpness", n, f"P(zero columns >= {k}) vs universal P(corank >= {k})", hits, cfg.trials, tail,
            cfg.z, cfg.gate_drift, relation="above",
        ),
    ]
    rows[1]["bound"] = bound
    return rows


ROW_BUILDERS = {
    "cok-dist": rows_cok_dist,
    "rank-dist": rows_rank_dist,
    "moment": rows_moment,
    "sandpile": rows_sandpile,
    "sharpness": rows_sharpness,
}


def build_report(camp: Campaign, kind: str | None = None) -> dict:
    """Report for the campaign; ``kind`` lets one histogram feed several experiment types."""
    cfg = camp.config
    kind = kind or cfg.kind
    builder = ROW_BUILDERS[kind]
    rows = []
    hist_out = {}
    for n in cfg.n:
        hist = camp.histograms[n]
        if sum(hist.values()) != cfg.trials:
            raise AssertionError("histogram does not partition the trials")
        rows.extend(builder(cfg, n, hist))
        hist_out[str(n)] = {k: hist[k] for k in sorted(hist)}
    config = cfg.to_json()
    config["kind"] = kind
    gated = [r["pass"] for r in rows if r["pass"] is not None]
    return {
        "config": config,
        "seed_lineage": {
            "master_seed": cfg.master_seed,
            "experiment_id": cfg.experiment_id,
            "stream": "Philox(SeedSequence(master_seed, spawn_key=(experiment_id, n, trial)))",
        },
        "rows": rows,
        "histograms": hist_out,
        "all_pass": all(gated),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_rows_csv(rows: Iterable[dict], path: Path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS, extrasaction="ignore", lineterminator="\r\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in ROW_FIELDS})


def write_outputs(report: dict, out_dir: str | Path, seconds: dict | None = None, figure: bool = True) -> dict[str, Path]:
    """report.json, rows.csv, figure.png and (separately) timing.json."""
    from ..plotting import plot_report

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "rows": out / "rows.csv"}
    paths["report"].write_text(dumps_report(report), encoding="utf-8")
    write_rows_csv(report["rows"], paths["rows"])
    if figure:
        paths["figure"] = out / "figure.png"
        plot_report(report, paths["figure"])
    if seconds is not None:
        paths["timing"] = out / "timing.json"
        paths["timing"].write_text(
            json.dumps({str(k): v for k, v in seconds.items()}, indent=2) + "\n", encoding="utf-8"
        )
    return paths
