"""Command line entry point: run a study from a JSON config.

Usage: study {h,p,mesh,dim} --config FILE --out CSV [--threads N] [--seed S]

Exit codes: 0 all checks passed, 2 at least one check failed, 1 bad input.
"""

import argparse
import json
import sys

from .studies import StudyResult, run_dim_bound_check, run_h_study, run_mesh_report, run_p_study

_DRIVERS = {
    "h": run_h_study,
    "p": run_p_study,
    "mesh": run_mesh_report,
    "dim": run_dim_bound_check,
}


class _Parser(argparse.ArgumentParser):
    # bad flags are input errors, and those exit with 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv=None):
    ap = _Parser(prog="study", description="Run a convergence study or mesh audit.")
    ap.add_argument("kind", choices=sorted(_DRIVERS), help="study type")
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--out", required=True, help="output CSV path")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValueError("config must be a JSON object")
        cfg["threads"] = max(1, args.threads)
        cfg.setdefault("seed", args.seed)
        result: StudyResult = _DRIVERS[args.kind](cfg)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"study: error: {exc}", file=sys.stderr)
        return 1

    from .studies import write_csv

    try:
        write_csv(args.out, result)
    except OSError as exc:
        print(f"study: error: {exc}", file=sys.stderr)
        return 1

    for key, val in result.summary.items():
        print(f"{key}: {val}" if isinstance(val, str) else f"{key}: {val:.6g}")
    for label, passed in result.checks:
        print(("pass: " if passed else "FAIL: ") + label)
    print(f"wrote {args.out} ({len(result.rows)} rows)")
    return 0 if result.ok else 2


if __name__ == "__main__":
    sys.exit(main())
