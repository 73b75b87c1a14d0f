"""Command line entry point: ``cokernel-lab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CokernelLabError
from .experiments.config import ExperimentConfig
from .experiments.report import build_report, dumps_report, write_outputs
from .experiments.runner import collect
from .experiments.verify import BATTERY, run_verify
from .groups import PGroupType
from .universal import KINDS, cokernel_limit, corank_limit_prob, corank_tail, moment_limit, parse_kind, rank_limit

CAMPAIGNS = ("cok-dist", "rank-dist", "moment", "sandpile", "sharpness")


def _load_config(args, kind: str) -> ExperimentConfig:
    obj = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
    obj["kind"] = kind
    if args.seed is not None:
        obj["master_seed"] = args.seed
    if args.workers is not None:
        obj["workers"] = args.workers
    return ExperimentConfig.from_json(obj)


def _run_campaign(args) -> int:
    cfg = _load_config(args, args.command)
    camp = collect(cfg)
    report = build_report(camp)
    paths = write_outputs(report, args.out, seconds=camp.seconds, figure=not args.no_figure)
    for row in report["rows"]:
        status = {True: "PASS", False: "FAIL", None: "----"}[row["pass"]]
        limit = "n/a" if row["limit"] is None else f"{row['limit']:.6f}"
        print(f"{status}  n={row['n']:<6} {row['quantity']:<48} est={row['estimate']:.6f} se={row['se']:.6f} limit={limit}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    if args.strict and not report["all_pass"]:
        return 1
    return 0


def _run_verify(args) -> int:
    cfg = _load_config(args, "verify")
    only = list(args.checks) or cfg.checks or None
    unknown = sorted(set(only or ()) - set(BATTERY))
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(BATTERY)}")
    report = run_verify(cfg.inject, only)
    text = dumps_report(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0 if report["all_pass"] else 1


def _group_arg(text: str) -> PGroupType:
    obj = json.loads(text)
    return PGroupType.from_json(obj)


def _run_formulas(args) -> int:
    kind = parse_kind(args.kind)
    if args.what == "eval":
        H = _group_arg(args.H)
        out = {"kind": kind, "H": H.to_json(), **cokernel_limit(kind, H).to_json()}
    elif args.what == "rank":
        out = {"kind": kind, "p": args.p, "k": args.k, **rank_limit(kind, args.p, args.k).to_json()}
    elif args.what == "corank":
        out = {"kind": kind, "p": args.p, "corank": args.k, "value": corank_limit_prob(kind, args.p, args.k)}
    elif args.what == "tail":
        out = {"kind": kind, "p": args.p, "at_least": args.k, "value": corank_tail(kind, args.p, args.k)}
    else:
        G = _group_arg(args.G)
        out = {"kind": kind, "G": G.to_json(), "value": moment_limit(kind, G)}
    print(json.dumps(out, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cokernel-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="JSON config document")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--out", default=None if not config_required else ".", help="output directory")

    for name in CAMPAIGNS:
        p = sub.add_parser(name, help=f"run a {name} campaign")
        common(p, True)
        p.add_argument("--no-figure", action="store_true", help="skip figure.png")
        p.add_argument("--strict", action="store_true", help="exit 1 if any gated row fails")
        p.set_defaults(func=_run_campaign)

    p = sub.add_parser("verify", help="run the oracle battery")
    p.add_argument("checks", nargs="*", help=f"subset of {', '.join(BATTERY)}")
    common(p, False)
    p.set_defaults(func=_run_verify)

    p = sub.add_parser("formulas", help="evaluate a limit formula")
    p.add_argument("what", choices=("eval", "rank", "corank", "tail", "moment"))
    p.add_argument("--kind", required=True, help=f"one of {KINDS}")
    p.add_argument("--H", help='target group, e.g. {"p":2,"lambda":[1]}')
    p.add_argument("--G", help="moment group, same JSON form")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=_run_formulas)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "formulas":
        need = {"eval": "H", "moment": "G"}.get(args.what)
        if need and getattr(args, need) is None:
            parser.error(f"formulas {args.what} needs --{need}")
    try:
        return args.func(args)
    except (CokernelLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
