#!/usr/bin/env python3
"""Command-line front end: quick measurements and scenario verification."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from prettytable import PrettyTable

from core.config import ConfigError, SCENARIOS, ScenarioConfig
from core.czd import check_invariants, cz_decompose, default_base, split
from core.exponents import Exponent
from core.experiments import DEFAULT_AP_MEMBERS, VARIABLE, run_scenario, vector_weight
from core.families import build_exponent, build_functions, build_kernel, build_pairs, build_weight
from core.grid import dyadic_family, translated_families
from core.norms import DEFAULT_TOL, modular, norm
from core.operators import bilinear_maximal, maximal, one_third_domination
from core.sio import DEFAULT_SAMPLES, check_kernel_bounds, sharp_domination_test
from core.weights import ap_constant, vec_ap_constant
from utils.helpers import configure_logging, to_jsonable

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

DEFAULT_CONFIGS = {
    "norm": "norm-sanity",
    "apconst": "ap-sweep",
    "maxop": "one-third",
    "czd": "czd-verify",
    "sio": "sio-domination",
}

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def load_config(args: argparse.Namespace, default_name: str) -> ScenarioConfig:
    path = Path(args.config) if args.config else CONFIG_DIR / f"{default_name}.json"
    config = ScenarioConfig.from_json(path)
    return config.with_overrides(seed=args.seed, threads=args.threads, out=args.out)


def _exponent(config: ScenarioConfig, grid, role: str = "p") -> Exponent:
    return build_exponent(grid, config.exponents.get(role, VARIABLE))


def cmd_norm(config: ScenarioConfig) -> Dict[str, Any]:
    grid = config.grid.build()
    p = _exponent(config)
    tol = config.op("tol", DEFAULT_TOL)
    rows = []
    for i, f in enumerate(build_functions(grid, config.functions, config.seed)):
        rows.append({"function": i, "exponent": p.name, "norm": norm(f, p, tol), "modular": modular(f, p)})
    return {"columns": ["function", "exponent", "norm", "modular"], "rows": rows, "passed": True}


def cmd_apconst(config: ScenarioConfig) -> Dict[str, Any]:
    domains = config.domains or (config.grid.half_width,)
    tol = config.op("tol", DEFAULT_TOL)
    rows = []
    for member in config.cases or DEFAULT_AP_MEMBERS:
        weights = member.get("weights", {})
        exponents = member.get("exponents", {})
        for L in domains:
            grid = config.grid.build(half_width=L)
            fams = translated_families(grid) if config.translated else [dyadic_family(grid)]
            row: Dict[str, Any] = {"case": member["id"], "L": L, "ap": None, "vec_ap": None}
            if "w" in weights:
                p = build_exponent(grid, exponents.get("p", config.exponents.get("p", {"kind": "constant", "value": 2.0})))
                row["ap"] = ap_constant(build_weight(grid, weights["w"]), p, fams, tol=tol)
            if "w1" in weights or "w2" in weights:
                vw = vector_weight(config, grid, member)
                row["vec_ap"] = vec_ap_constant(vw, vw.p1, vw.p2, fams, tol=tol)
            rows.append(row)
    return {"columns": ["case", "L", "ap", "vec_ap"], "rows": rows, "passed": True}


def cmd_maxop(config: ScenarioConfig) -> Dict[str, Any]:
    grid = config.grid.build()
    family = dyadic_family(grid)
    rows = []
    for i, (f1, f2) in enumerate(build_pairs(grid, config.functions, config.seed)):
        bilinear = bilinear_maximal(f1, f2, family).values
        product = maximal(f1, family).values * maximal(f2, family).values
        row = {
            "pair": i,
            "max_M": float(bilinear.max()),
            "max_Mf1_Mf2": float(product.max()),
            "pointwise_ok": bool((bilinear <= product).all()),
            "one_third": one_third_domination(f1, f2),
        }
        rows.append(row)
    passed = all(r["pointwise_ok"] for r in rows)
    return {"columns": ["pair", "max_M", "max_Mf1_Mf2", "pointwise_ok", "one_third"], "rows": rows, "passed": passed}


def cmd_czd(config: ScenarioConfig) -> Dict[str, Any]:
    grid = config.grid.build()
    vw = vector_weight(config, grid)
    a = config.op("a", default_base(grid.dim))
    rows = []
    for i, (f1, f2) in enumerate(build_pairs(grid, config.functions, config.seed)):
        parts = split(f1, f2)
        g1 = parts.h1 * vw.sigma1.samples
        g2 = parts.h3 * vw.sigma2.samples
        dec = cz_decompose(g1, g2, a)
        checks = check_invariants(dec, g1, g2)
        rows.append(
            {
                "input": i,
                "cubes": len(dec.selected()),
                "thresholds": len(dec.levels),
                "alpha": dec.alpha,
                "invariants": "ok" if all(checks.values()) else ",".join(k for k, v in checks.items() if not v),
            }
        )
    passed = all(r["invariants"] == "ok" for r in rows)
    return {"columns": ["input", "cubes", "thresholds", "alpha", "invariants"], "rows": rows, "passed": passed}


def cmd_sio(config: ScenarioConfig) -> Dict[str, Any]:
    grid = config.grid.build()
    kernel = build_kernel(grid.dim, config.kernel)
    report = check_kernel_bounds(kernel, int(config.op("samples", DEFAULT_SAMPLES)), seed=config.seed)
    delta = config.op("delta", 0.25)
    rows = []
    for i, (f1, f2) in enumerate(build_pairs(grid, config.functions, config.seed)):
        rows.append({"pair": i, "kernel": kernel.name, "sharp_ratio": sharp_domination_test(kernel, f1, f2, delta)})
    return {
        "columns": ["pair", "kernel", "sharp_ratio"],
        "rows": rows,
        "kernel_check": report._asdict(),
        "passed": report.passed,
    }


COMMANDS = {
    "norm": cmd_norm,
    "apconst": cmd_apconst,
    "maxop": cmd_maxop,
    "czd": cmd_czd,
    "sio": cmd_sio,
}


def _print_table(columns: List[str], rows: List[Dict[str, Any]]) -> None:
    table = PrettyTable(columns)
    table.align = "l"
    for r in rows:
        table.add_row(["-" if r.get(c) is None else (f"{r[c]:.6g}" if isinstance(r.get(c), float) else r[c]) for c in columns])
    print(table)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario config (JSON); defaults to the shipped one")
    common.add_argument("--out", help="Report directory (overrides output.directory)")
    common.add_argument("--seed", type=int, help="Seed override")
    common.add_argument("--threads", type=int, help="Worker threads for independent cases")
    common.add_argument("--json", action="store_true", help="Emit JSON output")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(description="Bilinear weighted variable-exponent toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("norm", parents=[common], help="Luxemburg norms of the configured test functions")
    sub.add_parser("apconst", parents=[common], help="Scalar and vector weight constants per domain")
    sub.add_parser("maxop", parents=[common], help="Bilinear maximal function and one-third comparison")
    sub.add_parser("czd", parents=[common], help="Calderon-Zygmund decomposition with invariant checks")
    sub.add_parser("sio", parents=[common], help="Kernel bounds and sharp-function domination")
    verify = sub.add_parser("verify", parents=[common], help="Run a scenario and write CSV/JSON reports")
    verify.add_argument("scenario", choices=SCENARIOS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = load_config(args, args.scenario if args.command == "verify" else DEFAULT_CONFIGS[args.command])
        if args.command == "verify" and config.scenario != args.scenario:
            raise ConfigError("scenario", f"config is for {config.scenario!r}, not {args.scenario!r}")
        logger.debug("Loaded %s config (seed %d, grid %s)", config.scenario, config.seed, config.grid.to_dict())
    except ConfigError as exc:
        if args.json:
            print(json.dumps({"error": str(exc), "field": exc.path}))
        else:
            print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "verify":
        try:
            report = run_scenario(config)
        except ValueError as exc:
            if args.json:
                print(json.dumps({"error": str(exc)}))
            else:
                print(f"Config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.json:
            print(json.dumps(report.to_dict(), indent=2))
        else:
            summary = report.summary["assertions"]
            _print_table(
                ["assertion", "rows", "max", "median", "verdict"],
                [
                    {"assertion": name, "rows": s["rows"], "max": s["max"], "median": s["median"], "verdict": "pass" if s["passed"] else "FAIL"}
                    for name, s in summary.items()
                ],
            )
            print(f"{report.scenario}: {'PASS' if report.passed else 'FAIL'}")
        return EXIT_PASS if report.passed else EXIT_FAIL

    try:
        result = COMMANDS[args.command](config)
    except ValueError as exc:
        if args.json:
            print(json.dumps({"error": str(exc)}))
        else:
            print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.json:
        print(json.dumps(to_jsonable(result), indent=2))
    else:
        _print_table(result["columns"], result["rows"])
        if "kernel_check" in result:
            check = result["kernel_check"]
            print(f"kernel size {check['size_ratio']:.6g}  smoothness {check['smoothness_ratio']:.6g}  {'pass' if check['passed'] else 'FAIL'}")
    return EXIT_PASS if result["passed"] else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
