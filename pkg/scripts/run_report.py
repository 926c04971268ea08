#!/usr/bin/env python3
"""Batch scenario runner: one config path per line, one verdict row per config."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from core.config import ConfigError, ScenarioConfig
from core.experiments import run_scenario
from utils.helpers import configure_logging


def load_paths(path: Path) -> list[Path]:
    lines = [l.strip() for l in path.read_text(encoding="utf-8", errors="ignore").splitlines()]
    return [path.parent / l for l in lines if l and not l.startswith("#")]


def main() -> int:
    parser = argparse.ArgumentParser(description="Run a batch of scenario configs")
    parser.add_argument("-f", "--file", required=True, help="Input file with one config path per line")
    parser.add_argument("--out", help="Root report directory; each scenario writes to <out>/<scenario>")
    parser.add_argument("--json", action="store_true", help="Emit JSON output")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    args = parser.parse_args()
    configure_logging(args.verbose)

    path = Path(args.file)
    if not path.exists():
        print(f"Input file not found: {path}", file=sys.stderr)
        return 2

    results = []
    exit_code = 0
    for config_path in load_paths(path):
        try:
            config = ScenarioConfig.from_json(config_path)
            if args.out:
                config = config.with_overrides(out=str(Path(args.out) / config.scenario))
            report = run_scenario(config)
            failed = [name for name, ok in report.verdicts.items() if not ok]
            results.append(
                {
                    "config": str(config_path),
                    "scenario": config.scenario,
                    "status": "pass" if report.passed else "fail",
                    "failed": failed,
                    "rows": len(report.rows),
                }
            )
            if not report.passed:
                exit_code = max(exit_code, 1)
        except ConfigError as exc:
            results.append({"config": str(config_path), "status": "error", "error": str(exc)})
            exit_code = 2
        except Exception as exc:
            results.append({"config": str(config_path), "status": "error", "error": f"{type(exc).__name__}: {exc}"})
            exit_code = 2

    if args.json:
        print(json.dumps(results, indent=2))
        return exit_code

    print("Config\tScenario\tStatus\tRows\tFailed")
    for r in results:
        print(
            f"{r.get('config')}\t{r.get('scenario','-')}\t{r.get('status')}\t{r.get('rows','-')}\t{','.join(r.get('failed', [])) or r.get('error','-')}"
        )

    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())
