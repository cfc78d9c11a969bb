"""Run every experiment with its default configuration and write the reports.

Usage: python3 scripts/run_all.py [OUTDIR]  (default: results/)
Each experiment produces NAME.json, NAME.csv and NAME.tsv; a one-line
summary per experiment goes to stdout.  Exit status is 1 if any verdict failed.
"""

import sys
from pathlib import Path

from orlicz_lab.experiments import EXPERIMENTS


def main(argv: list[str]) -> int:
    out = Path(argv[0] if argv else "results")
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name, fn in EXPERIMENTS.items():
        rep = fn()
        for fmt, ext in (("json", "json"), ("csv", "csv"), ("tsv-plot", "tsv")):
            (out / f"{name}.{ext}").write_text(rep.render(fmt))
        status = "ok" if rep.passed else "FAILED"
        print(f"{name:26s} {status:6s} {rep.runtime_ms / 1000:7.2f}s  "
              + ", ".join(f"{v.name}={v.empirical_constant:.4g}" for v in rep.verdicts))
        failed += not rep.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
