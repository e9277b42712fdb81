"""Run the acceptance suite and print one PASS/FAIL line per criterion."""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    cmd = [sys.executable, "-m", "pytest", str(ROOT / "tests" / "test_acceptance.py"), "-q", "-rxX"]
    return subprocess.call(cmd + sys.argv[1:], cwd=ROOT)


if __name__ == "__main__":
    sys.exit(main())
