"""Command-line interface: simulate, check, sweep.

Exit codes: 0 success, 1 validation failure, 2 simulation halt, 3 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import engine, report
from .scenario import ScenarioError, config_to_dict, load_scenario, preset_names
from .topology import check_gains, gain_threshold, has_spanning_tree

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_HALT = 2
EXIT_IO = 3

# Shorthand override keys -> dotted document paths.
_OVERRIDE_ALIASES = {
    "alpha": "gains.alpha",
    "beta": "gains.beta",
    "gamma1": "region.gamma1",
    "gamma2": "region.gamma2",
    "hysteresis": "region.hysteresis",
    "dt": "simulation.dt",
    "horizon": "simulation.horizon",
    "seed": "simulation.seed",
    "leader_mode": "simulation.leader_mode",
    "force_mode": "simulation.force_mode",
}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, key: str, value_text: str) -> None:
    """Apply one key=value override to a scenario document (dotted paths)."""
    path = _OVERRIDE_ALIASES.get(key, key)
    parts = path.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ScenarioError(f"override {key}: no section {part!r} in scenario")
        node = node[part]
    if not isinstance(node, dict):
        raise ScenarioError(f"override {key}: {'.'.join(parts[:-1])} is not a section")
    node[parts[-1]] = _parse_value(value_text)


def _load_doc(source: str) -> dict:
    from .scenario import PRESETS

    if source in PRESETS:
        return PRESETS[source]()
    path = Path(source)
    if not path.exists():
        raise ScenarioError(
            f"scenario {source!r} is neither a preset ({', '.join(preset_names())}) "
            "nor an existing file"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a JSON object")
    return doc


def _doc_with_flags(args, extra_overrides=()) -> dict:
    doc = _load_doc(args.scenario)
    if getattr(args, "region", None):
        doc.setdefault("region", {})["enabled"] = args.region == "on"
    if getattr(args, "leader", None):
        doc.setdefault("simulation", {})["leader_mode"] = args.leader
    if getattr(args, "force", None):
        doc.setdefault("simulation", {})["force_mode"] = args.force
    if getattr(args, "dt", None) is not None:
        doc.setdefault("simulation", {})["dt"] = args.dt
    if getattr(args, "horizon", None) is not None:
        doc.setdefault("simulation", {})["horizon"] = args.horizon
    overrides = list(itertools.chain.from_iterable(args.override or []))
    overrides += list(extra_overrides)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r}: expected key=value")
        key, _, value = item.partition("=")
        apply_override(doc, key.strip(), value.strip())
    return doc


def cmd_simulate(args) -> int:
    try:
        doc = _doc_with_flags(args)
        from .scenario import scenario_from_dict

        config = scenario_from_dict(doc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    trace, summary = engine.run(config)
    out_dir = Path(args.out) / config.name if args.per_scenario_dir else Path(args.out)
    try:
        created = report.write_run_outputs(trace, summary, out_dir)
        (out_dir / "scenario.json").write_text(
            json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    print(f"wrote {len(created) + 1} files to {out_dir}")
    if trace.halted:
        print(
            f"simulation halted at t={trace.halt_time:.6g}: {trace.halt_reason}",
            file=sys.stderr,
        )
        return EXIT_HALT
    print(
        f"records={summary.records} max|e|={summary.max_error_total:.6g} "
        f"settling={summary.settling_time} violations={summary.violation_count}"
    )
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        doc = _doc_with_flags(args)
        from .scenario import scenario_from_dict

        config = scenario_from_dict(doc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    top = config.topology
    tree = has_spanning_tree(top)
    threshold = gain_threshold(top)
    ratio = config.gains.alpha**2 / config.gains.beta
    gains_ok = check_gains(config.gains.alpha, config.gains.beta, top)

    print(f"spanning tree rooted at leader: {'yes' if tree else 'NO'}")
    print("eigenvalues of the augmented Laplacian:")
    for lam in top.eigenvalues:
        print(f"  {lam.real:+.12g} {lam.imag:+.12g}j")
    print(f"gain threshold: {threshold:.12g}")
    print(f"alpha^2/beta:   {ratio:.12g}")
    ok = tree and gains_ok
    print(f"result: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_sweep(args) -> int:
    try:
        base_doc = _doc_with_flags(args)
        axes = []
        for spec in args.vary or []:
            if "=" not in spec:
                raise ScenarioError(f"--vary {spec!r}: expected key=v1,v2,...")
            key, _, values = spec.partition("=")
            values = [v for v in values.split(",") if v]
            if not values:
                raise ScenarioError(f"--vary {spec!r}: no values given")
            axes.append((key.strip(), values))
        if not axes:
            raise ScenarioError("sweep needs at least one --vary key=v1,v2,...")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    combos = list(itertools.product(*(vals for _, vals in axes)))
    keys = [key for key, _ in axes]
    out_root = Path(args.out)

    jobs = []
    for combo in combos:
        label = "_".join(f"{k.split('.')[-1]}{v}" for k, v in zip(keys, combo))
        jobs.append((label, list(f"{k}={v}" for k, v in zip(keys, combo))))

    worst = EXIT_OK
    rows = []

    def run_one(label, overrides):
        import copy

        doc = copy.deepcopy(base_doc)
        for item in overrides:
            key, _, value = item.partition("=")
            apply_override(doc, key, value)
        from .scenario import scenario_from_dict

        config = scenario_from_dict(doc)
        trace, summary = engine.run(config)
        run_dir = out_root / label
        report.write_run_outputs(trace, summary, run_dir)
        return label, summary

    try:
        if args.jobs > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
                futures = [pool.submit(run_one, lab, ov) for lab, ov in jobs]
                results = [f.result() for f in futures]
        else:
            results = [run_one(lab, ov) for lab, ov in jobs]
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    for label, summary in results:
        if summary.halted:
            worst = max(worst, EXIT_HALT)
        rows.append(
            f"{label},{summary.settling_time},{summary.max_error_total:.17g},"
            f"{summary.violation_count},{int(summary.halted)}"
        )
        print(f"{label}: settling={summary.settling_time} halted={summary.halted}")
    try:
        out_root.mkdir(parents=True, exist_ok=True)
        (out_root / "sweep_index.csv").write_text(
            "label,settling_time,max_error_total,violation_count,halted\n"
            + "\n".join(rows)
            + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        print(f"error: cannot write sweep index: {exc}", file=sys.stderr)
        return EXIT_IO
    return worst


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        help=f"scenario JSON file or preset name ({', '.join(preset_names())})",
    )
    parser.add_argument("--region", choices=["on", "off"], help="force region constraint on/off")
    parser.add_argument("--leader", choices=["prescribed", "dynamic"], help="leader mode")
    parser.add_argument("--force", choices=["ideal", "actuated"], help="force application mode")
    parser.add_argument("--dt", type=float, help="integration step [s]")
    parser.add_argument("--horizon", type=float, help="simulation horizon [s]")
    parser.add_argument(
        "--override",
        action="append",
        nargs="+",
        metavar="KEY=VALUE",
        help="override scenario values (repeatable; e.g. alpha=2 beta=4 or region.gamma1=3)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gukform",
        description="Formation tracking of wheeled robots with region constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and write outputs")
    _add_common(p_sim)
    p_sim.add_argument("--out", default="out", help="output directory (default: ./out)")
    p_sim.add_argument(
        "--per-scenario-dir",
        action="store_true",
        help="write under <out>/<scenario-name> instead of <out>",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_check = sub.add_parser("check", help="report topology and gain-condition verdicts")
    _add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_sweep = sub.add_parser("sweep", help="run a Cartesian parameter sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--out", default="sweep", help="output root directory")
    p_sweep.add_argument(
        "--vary",
        action="append",
        metavar="KEY=V1,V2",
        help="axis of the sweep (repeatable), e.g. --vary alpha=2,4 --vary beta=1,4",
    )
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
