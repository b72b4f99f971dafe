"""Command-line surface: oracle suites, bound evaluation, experiments.

Exit codes: 0 success, 1 oracle violation or failed verification, 2 usage
error (bad flags, malformed input files).  Every run writes a manifest
sufficient to reproduce its outputs byte-identically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bounds import CSV_HEADER as BOUND_CSV_HEADER
from .bounds import ModelClass, evaluate_bound
from .errors import EpiboundError
from .experiments import (
    ExperimentConfig,
    monte_carlo_verify,
    run_negative_transfer_experiment,
    run_neighborhood_experiment,
    setup_from_dict,
    write_experiment_output,
)
from .oracle import DEFAULT_ALPHAS, run_suite

USAGE_ERROR = 2
VIOLATION_ERROR = 1


def _parse_alphas(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list: {text!r}")
    if not values or any(a <= 0 for a in values):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return values


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list: {text!r}")


def _parse_n_grid(text: str) -> tuple:
    """Comma list (1,2,5) and/or colon ranges (1:50) of task counts."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n grid: {text!r}")
    if not out or any(n < 0 for n in out):
        raise argparse.ArgumentTypeError("n grid entries must be nonnegative integers")
    return tuple(out)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SystemExit(_usage_fail(f"file not found: {path}"))
    except json.JSONDecodeError as exc:
        raise SystemExit(
            _usage_fail(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        )


def _usage_fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return USAGE_ERROR


def _out_dir(args) -> Path:
    # env override applies to the output directory only
    override = os.environ.get("EPIBOUND_OUT_DIR")
    return Path(override) if override else Path(args.out)


def _write_manifest(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["artifact_version"] = __version__
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_oracle(args) -> int:
    report = run_suite(
        n_instances=args.instances,
        seed=args.seed,
        alphas=args.alphas,
        max_outcomes=args.max_outcomes,
        threads=args.threads,
    )
    for line in report.summary_lines():
        print(line)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.to_json() + "\n")
        _write_manifest(out.with_suffix(".manifest.json"), {
            "command": "oracle",
            "instances": args.instances,
            "seed": args.seed,
            "alphas": list(args.alphas),
            "max_outcomes": args.max_outcomes,
        })
        print(f"report written to {out}")
    return VIOLATION_ERROR if report.total_violations else 0


def _instance_from_dict(data: dict):
    from .distributions import distribution_from_dict, task_distribution_from_dict

    try:
        model = ModelClass.from_dict(data["model"])
        predictor = distribution_from_dict(data["predictor"])
        source = task_distribution_from_dict(data["source"])
        target = task_distribution_from_dict(data["target"])
    except KeyError as exc:
        raise SystemExit(_usage_fail(f"instance file missing key {exc}"))
    extras = {}
    for key in ("param_posterior", "param_best"):
        if data.get(key) is not None:
            raw = data[key]
            if raw.get("kind") == "gaussian_param":
                from .bayes import GaussianParamDist

                extras[key] = GaussianParamDist.from_dict(raw)
            else:
                extras[key] = distribution_from_dict(raw)
    return model, predictor, source, target, extras


def _cmd_bound(args) -> int:
    data = _load_json(args.instance)
    model, predictor, source, target, extras = _instance_from_dict(data)
    report = evaluate_bound(
        args.statement,
        model=model,
        predictor=predictor,
        source=source,
        target=target,
        alpha=args.alpha,
        epsilon=args.epsilon,
        b_source=args.bS,
        b_target=args.bT,
        param_posterior=extras.get("param_posterior"),
        param_best=extras.get("param_best"),
    )
    print(BOUND_CSV_HEADER)
    print(report.to_csv_row())
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        _write_manifest(out.with_suffix(".manifest.json"), {
            "command": "bound",
            "statement": args.statement,
            "instance": str(args.instance),
            "alpha": args.alpha,
            "epsilon": args.epsilon,
            "bS": args.bS,
            "bT": args.bT,
        })
        print(f"report written to {out}")
    return 0


def _cmd_experiment_neighborhood(args) -> int:
    config = ExperimentConfig.neighborhood(
        epsilons=args.epsilons,
        sims=args.sims,
        master_seed=args.seed,
        kl_samples=args.kl_samples,
        n_source_tasks=args.source_tasks,
    )
    records = run_neighborhood_experiment(config, threads=args.threads)
    paths = write_experiment_output(records, config, _out_dir(args), "neighborhood")
    print(f"{len(records)} rows -> {paths[0]}")
    return 0


def _cmd_experiment_negative_transfer(args) -> int:
    config = ExperimentConfig.negative_transfer(
        scenario=args.scenario,
        n_grid=args.n_grid,
        sims=args.sims,
        master_seed=args.seed,
        kl_samples=args.kl_samples,
    )
    records = run_negative_transfer_experiment(config, threads=args.threads)
    name = f"negative_transfer_{args.scenario}"
    paths = write_experiment_output(records, config, _out_dir(args), name)
    print(f"{len(records)} rows -> {paths[0]}")
    return 0


def _cmd_verify(args) -> int:
    raw = _load_json(args.setup)
    setup = setup_from_dict(raw)
    result = monte_carlo_verify(setup, trials=args.trials, seed=args.seed)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0 if result["pass"] else VIOLATION_ERROR


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epibound",
        description="Epistemic error bounds: oracle verification and synthetic experiments.",
    )
    parser.add_argument("--version", action="version", version=f"epibound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_oracle = sub.add_parser("oracle", help="run the exact verification suite")
    p_oracle.add_argument("--instances", type=int, default=1000)
    p_oracle.add_argument("--max-outcomes", type=int, default=6, dest="max_outcomes")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--alphas", type=_parse_alphas, default=DEFAULT_ALPHAS)
    p_oracle.add_argument("--threads", type=int, default=1)
    p_oracle.add_argument("--out", default=None, help="JSON report path")
    p_oracle.set_defaults(fn=_cmd_oracle)

    p_bound = sub.add_parser("bound", help="evaluate one bound statement on an instance file")
    p_bound.add_argument("--statement", required=True)
    p_bound.add_argument("--instance", required=True, help="instance JSON path")
    p_bound.add_argument("--alpha", type=float, required=True)
    p_bound.add_argument("--epsilon", type=float, default=None)
    p_bound.add_argument("--bS", type=float, default=None)
    p_bound.add_argument("--bT", type=float, default=None)
    p_bound.add_argument("--out", default=None, help="JSON report path")
    p_bound.set_defaults(fn=_cmd_bound)

    p_exp = sub.add_parser("experiment", help="run a synthetic experiment")
    exp_sub = p_exp.add_subparsers(dest="experiment", required=True)

    p_nb = exp_sub.add_parser("neighborhood", help="TV-neighborhood sweep")
    p_nb.add_argument("--epsilons", type=_parse_floats, required=True)
    p_nb.add_argument("--sims", type=int, default=500)
    p_nb.add_argument("--seed", type=int, default=0)
    p_nb.add_argument("--kl-samples", type=int, default=400, dest="kl_samples")
    p_nb.add_argument("--source-tasks", type=int, default=10, dest="source_tasks")
    p_nb.add_argument("--threads", type=int, default=1)
    p_nb.add_argument("--out", required=True, help="output directory")
    p_nb.set_defaults(fn=_cmd_experiment_neighborhood)

    p_nt = exp_sub.add_parser("negative-transfer", help="source-size sweep")
    p_nt.add_argument("--scenario", choices=("pos", "neg", "posneg"), required=True)
    p_nt.add_argument("--n-grid", type=_parse_n_grid, required=True, dest="n_grid")
    p_nt.add_argument("--sims", type=int, default=500)
    p_nt.add_argument("--seed", type=int, default=0)
    p_nt.add_argument("--kl-samples", type=int, default=400, dest="kl_samples")
    p_nt.add_argument("--threads", type=int, default=1)
    p_nt.add_argument("--out", required=True, help="output directory")
    p_nt.set_defaults(fn=_cmd_experiment_negative_transfer)

    p_verify = sub.add_parser("verify", help="Monte Carlo exceedance check of a bound")
    p_verify.add_argument("--setup", required=True, help="setup JSON path")
    p_verify.add_argument("--trials", type=int, default=10000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (EpiboundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
