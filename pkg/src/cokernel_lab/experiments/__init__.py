"""Monte Carlo campaigns, the oracle battery and report writing."""

from .config import ExperimentConfig
from .report import build_report, dumps_report, write_outputs
from .runner import Campaign, collect
from .verify import run_verify


def run_experiment(cfg: ExperimentConfig, kind: str | None = None) -> tuple[dict, Campaign]:
    """Collect the campaign and build its report."""
    camp = collect(cfg)
    return build_report(camp, kind), camp


__all__ = [
    "Campaign",
    "ExperimentConfig",
    "build_report",
    "collect",
    "dumps_report",
    "run_experiment",
    "run_verify",
    "write_outputs",
]
