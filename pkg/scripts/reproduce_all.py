"""Run every bundled scenario and print the acceptance summary.

    python3 scripts/reproduce_all.py [--out-dir out] [--threads 4]
"""
import argparse
import subprocess
import sys
import time
from pathlib import Path

from cvqnet.cli import main as cli_main
from cvqnet.scenario import list_examples

ROOT = Path(__file__).resolve().parents[1]


def run_examples(out_dir, threads):
    failed = []
    for name in list_examples():
        t0 = time.perf_counter()
        rc = cli_main(["run", name, "--out-dir", str(Path(out_dir) / name),
                       "--threads", str(threads)])
        print(f"# {name}: rc={rc} ({time.perf_counter() - t0:.2f} s)", flush=True)
        if rc:
            failed.append(name)
    return failed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--skip-acceptance", action="store_true")
    args = ap.parse_args(argv)
    failed = run_examples(args.out_dir, args.threads)
    if not args.skip_acceptance:
        # the acceptance module prints one PASS/FAIL line per criterion
        subprocess.run([sys.executable, str(ROOT / "tests" / "test_acceptance.py")],
                       cwd=ROOT, check=False)
    if failed:
        print("failed scenarios: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
