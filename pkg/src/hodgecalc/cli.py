"""Command-line entry point: run a scenario file or the regression suite."""
from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from .ext import ResourceError
from .scenario import (
    PreconditionError,
    ScenarioError,
    diff_reports,
    load_scenario,
    run_scenario,
    to_csv,
    to_json,
    write_atomic,
)
from .spectral import AbutmentUnreachable

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_RESOURCE = 4
EXIT_UNREACHABLE = 5


def data_dir() -> Path:
    return Path(str(resources.files("hodgecalc") / "data"))


def run_file(path, out_dir: Path | None, budget_cells: int, budget_branches: int) -> tuple[int, dict | None]:
    """Run one scenario; returns (exit code, report)."""
    try:
        scn = load_scenario(path)
        t0 = time.perf_counter()
        report = run_scenario(scn, budget_cells, budget_branches)
        elapsed = time.perf_counter() - t0
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE, None
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION, None
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE, None
    except AbutmentUnreachable as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNREACHABLE, None
    if out_dir is not None:
        write_atomic(out_dir / f"{scn.name}.json", to_json(report))
        write_atomic(out_dir / f"{scn.name}.csv", to_csv(report))
        stats = {"seconds": round(elapsed, 3), "budget_cells": budget_cells, "budget_branches": budget_branches}
        for i, s in enumerate(report.get("search", [])):
            stats[f"search_{i}"] = s.get("stats", {})
        write_atomic(out_dir / f"{scn.name}.stats.json", json.dumps(stats, indent=1, sort_keys=True) + "\n")
    return EXIT_OK, report


def regression_suite(primes=(2, 3), scenarios: Path | None = None, fixtures: Path | None = None,
                     budget_cells: int = 10**6, budget_branches: int = 100_000, verbose: bool = True) -> dict:
    """Replay stored scenarios and compare reports byte for byte with fixtures."""
    scenarios = scenarios or data_dir() / "scenarios"
    fixtures = fixtures or data_dir() / "fixtures"
    results = {}
    for path in sorted(scenarios.glob("*.ini")):
        scn = load_scenario(path)
        if scn.p not in primes:
            continue
        t0 = time.perf_counter()
        code, report = run_file(path, None, budget_cells, budget_branches)
        problems = []
        if code != EXIT_OK:
            problems.append(f"exit code {code}")
        else:
            for ext, render in (("json", to_json), ("csv", to_csv)):
                fixture = fixtures / f"{scn.name}.{ext}"
                if not fixture.exists():
                    problems.append(f"missing fixture {fixture.name}")
                    continue
                stored = fixture.read_text(encoding="utf-8")
                fresh = render(report)
                if stored != fresh:
                    if ext == "json":
                        problems += diff_reports(json.loads(stored), report) or ["json bytes differ"]
                    else:
                        problems.append("csv bytes differ")
        results[scn.name] = problems
        if verbose:
            status = "ok" if not problems else "FAIL"
            print(f"{status:4} {scn.name} ({time.perf_counter() - t0:.2f}s)")
            for line in problems:
                print(f"     {line}")
    return results


def write_fixtures(primes, scenarios: Path, fixtures: Path, budget_cells: int, budget_branches: int) -> int:
    code = EXIT_OK
    for path in sorted(scenarios.glob("*.ini")):
        scn = load_scenario(path)
        if scn.p not in primes:
            continue
        c, report = run_file(path, None, budget_cells, budget_branches)
        if c != EXIT_OK:
            code = c
            continue
        write_atomic(fixtures / f"{scn.name}.json", to_json(report))
        write_atomic(fixtures / f"{scn.name}.csv", to_csv(report))
        print(f"wrote {scn.name}")
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hodgecalc", description=__doc__)
    ap.add_argument("--scenario", type=Path, help="scenario file (.ini)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory for reports")
    ap.add_argument("--budget-cells", type=int, default=10**6)
    ap.add_argument("--budget-branches", type=int, default=100_000)
    ap.add_argument("--regress", action="store_true", help="replay the bundled scenarios against fixtures")
    ap.add_argument("--primes", default="2,3", help="primes for --regress (comma separated)")
    ap.add_argument("--scenarios", type=Path, help="scenario directory for --regress")
    ap.add_argument("--fixtures", type=Path, help="fixture directory for --regress")
    ap.add_argument("--write-fixtures", action="store_true", help="regenerate fixtures instead of comparing")
    args = ap.parse_args(argv)

    if args.regress or args.write_fixtures:
        try:
            primes = tuple(int(x) for x in args.primes.split(","))
        except ValueError:
            ap.error("--primes must be a comma separated list of integers")
        scen = args.scenarios or data_dir() / "scenarios"
        fix = args.fixtures or data_dir() / "fixtures"
        if args.write_fixtures:
            return write_fixtures(primes, scen, fix, args.budget_cells, args.budget_branches)
        results = regression_suite(primes, scen, fix, args.budget_cells, args.budget_branches)
        failed = [k for k, v in results.items() if v]
        print(f"{len(results) - len(failed)}/{len(results)} scenarios match")
        return EXIT_OK if not failed else 1
    if args.scenario is None:
        ap.error("give --scenario PATH or --regress")
    code, report = run_file(args.scenario, args.out, args.budget_cells, args.budget_branches)
    if code == EXIT_OK:
        print(f"wrote {args.out / (report['scenario']['name'] + '.json')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
