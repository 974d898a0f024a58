#!/usr/bin/env python3
"""Runs the nmdecide binary end to end, checks exit codes, and validates every
report against docs/report-schema.json. Exit 77 when jsonschema is missing."""

import json
import pathlib
import subprocess
import sys
import tempfile

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)

exe, data_dir, schema_path = sys.argv[1], pathlib.Path(sys.argv[2]), sys.argv[3]
validator = jsonschema.Draft202012Validator(json.loads(pathlib.Path(schema_path).read_text()))
failures = []


def run(args, expect_code):
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    label = " ".join(args)
    if proc.returncode != expect_code:
        failures.append(f"{label}: exit {proc.returncode}, expected {expect_code}\n{proc.stderr}")
        return None
    if expect_code == 1 or not proc.stdout:
        return None
    report = json.loads(proc.stdout)
    for error in validator.iter_errors(report):
        failures.append(f"{label}: schema violation at {list(error.path)}: {error.message}")
    if report["exit_code"] != expect_code:
        failures.append(f"{label}: report exit_code {report['exit_code']} != {expect_code}")
    return report


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    split, nested, marginal = (str(data_dir / n) for n in ("split.csv", "nested.csv", "marginal.csv"))
    (tmp / "order.txt").write_text("3\n1\n2\n")
    (tmp / "d.txt").write_text("1\n0\n1\n")
    (tmp / "r.txt").write_text("1\n0\n0\n")

    run(["decide", "--samples", marginal, "--criterion", "marginal", "--lambda", "1"], 0)
    run(["decide", "--samples", split, "--lambda", "1", "--out", "-"], 0)
    run(["decide", "--samples", nested, "--criterion", "ordered", "--lambda", "1", "--order", "bf"], 0)
    run(["decide", "--samples", nested, "--alpha", "0.3", "--truth", str(tmp / "r.txt")], 0)
    run(["decide", "--samples", marginal, "--criterion", "marginal", "--alpha", "0.5"], 0)
    run(["decide", "--samples", nested, "--criterion", "ordered", "--lambda", "1",
         "--order", f"file:{tmp / 'order.txt'}"], 2)
    run(["decide", "--samples", split, "--lambda", "0.5"], 1)
    run(["decide", "--samples", str(data_dir / "bad.csv"), "--lambda", "1"], 1)
    run(["decide", "--samples", split, "--lambda", "1", "--alpha", "0.2"], 1)

    run(["chain", "--samples", split, "--lambda", "1"], 0)
    run(["chain", "--samples", nested, "--criterion", "ordered", "--lambda", "1.5"], 0)
    run(["chain", "--samples", nested, "--lambda", "1", "--max-m-states", "2"], 1)

    a, b = tmp / "a.csv", tmp / "b.csv"
    run(["simulate", "--config", str(data_dir / "dependent.cfg"), "--out-samples", str(a), "--probe", "1,50"], 0)
    run(["simulate", "--config", str(data_dir / "dependent.cfg"), "--out-samples", str(b)], 0)
    if a.read_bytes() != b.read_bytes():
        failures.append("simulate: identical seeds produced different sample files")

    run(["decompose", "--decisions", str(tmp / "d.txt"), "--truth", str(tmp / "r.txt")], 0)
    run(["decompose", "--decisions", str(tmp / "d.txt"), "--truth", str(tmp / "r.txt"), "--mode", "ordered"], 0)

    report_file = tmp / "report.json"
    run(["decide", "--samples", split, "--lambda", "1", "--out", str(report_file)], 0)
    for error in validator.iter_errors(json.loads(report_file.read_text())):
        failures.append(f"--out file: schema violation: {error.message}")

for f in failures:
    print("FAIL", f)
print(f"{len(failures)} failures")
sys.exit(1 if failures else 0)
