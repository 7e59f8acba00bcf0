#!/usr/bin/env python3
"""Run the test suite with coverage and list the weakest modules.

Usage: ``python scripts/coverage_report.py [--target 70] [--fast]``
"""

import argparse
import json
from pathlib import Path
import subprocess
import sys

REPORTS = [("HTML", "htmlcov/index.html"), ("XML", "coverage.xml"), ("JSON", "coverage.json")]


def run_suite(target: int, fast: bool) -> tuple[int, float | None]:
    """
    Run pytest with coverage; return the exit code and the TOTAL percentage.
    """
    command = [
        "pytest",
        "--cov=src/epibif",
        "--cov-report=html",
        "--cov-report=xml",
        "--cov-report=json",
        "--cov-report=term-missing",
        f"--cov-fail-under={target}",
    ]
    if fast:
        command += ["-m", "not slow"]
    print(f"📊 Running {' '.join(command)}")
    result = subprocess.run(command, capture_output=True, text=True, check=False)
    output = result.stdout + result.stderr
    print(output)

    percentage = None
    for line in output.splitlines():
        if line.startswith("TOTAL") and "%" in line:
            try:
                percentage = float(line.split()[-1].rstrip("%"))
            except ValueError:
                pass
    return result.returncode, percentage


def weakest_modules(path: Path, threshold: float = 60.0) -> list[tuple[str, float]]:
    if not path.exists():
        return []
    files = json.loads(path.read_text()).get("files", {})
    low = [(name, data["summary"]["percent_covered"]) for name, data in files.items()]
    return sorted((item for item in low if item[1] < threshold), key=lambda item: item[1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", type=int, default=70, help="minimum total coverage")
    parser.add_argument("--fast", action="store_true", help="skip tests marked slow")
    args = parser.parse_args()

    if not Path("pyproject.toml").exists():
        print("❌ pyproject.toml not found; run from the repository root.")
        sys.exit(1)

    code, percentage = run_suite(args.target, args.fast)
    print("=" * 60)
    if percentage is None:
        print("⚠️  Could not parse the coverage total")
    else:
        status = "✅ met" if percentage >= args.target else "❌ missed"
        print(f"Coverage {percentage:.2f}% (target {args.target}%): {status}")
    for name, path in REPORTS:
        print(f"  {name}: {path}{'' if Path(path).exists() else ' (not found)'}")
    for name, percent in weakest_modules(Path("coverage.json")):
        print(f"  📉 {name}: {percent:.1f}%")
    print("=" * 60)

    sys.exit(0 if code == 0 and (percentage or 0) >= args.target else 1)


if __name__ == "__main__":
    main()
