#!/usr/bin/env python3
"""Validate an experiment output directory against the summary schema."""
import argparse
import csv
import json
import pathlib
import sys

import jsonschema


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", type=pathlib.Path)
    ap.add_argument("--schema", type=pathlib.Path, required=True)
    args = ap.parse_args()

    summary = json.loads((args.outdir / "summary.json").read_text())
    jsonschema.validate(summary, json.loads(args.schema.read_text()))

    for v in summary["variants"]:
        with open(args.outdir / v["scores_file"], newline="") as f:
            rows = list(csv.reader(f))
        if rows[0][:2] != ["replication", "cpt_score"]:
            sys.exit(f"{v['scores_file']}: unexpected header {rows[0]}")
        if len(rows) - 1 != v["test_replications_completed"]:
            sys.exit(f"{v['scores_file']}: {len(rows) - 1} rows, summary says {v['test_replications_completed']}")
        with open(args.outdir / v["trace_file"], newline="") as f:
            trace = list(csv.reader(f))
        if len(trace) - 1 != v["train_iterations_completed"]:
            sys.exit(f"{v['trace_file']}: {len(trace) - 1} rows, summary says {v['train_iterations_completed']}")
    print(f"{args.outdir / 'summary.json'}: ok ({len(summary['variants'])} variants)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
