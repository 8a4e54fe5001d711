"""Runs `evostab analyze` on every corpus member and a kernel config, then
validates each report against the shipped schema and checks that a re-run
with the same seed is byte-identical."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

CORPUS = ["uniform_growth", "stable", "nonuniform_spikes", "planar_rotation", "planar_rotation_ode"]


def run(exe, args):
    proc = subprocess.run([exe, "analyze", *args], capture_output=True, text=True)
    return proc.returncode, proc.stdout + proc.stderr


def main():
    exe, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        cfg = tmp / "kernel.cfg"
        cfg.write_text("kernel.knots = 0:0, 3:2, 4:0\nkernel.rate = 0.5\ndimension = 2\nprobes = 3\nseed = 11\n")
        jobs = [(name, ["--op", name, "--seed", "7"]) for name in CORPUS]
        jobs.append(("kernel", ["--config", str(cfg), "--p", "2", "--horizon", "8"]))
        for name, args in jobs:
            out = tmp / name
            code, log = run(exe, [*args, "--out", str(out)])
            if code != 0:
                print(f"FAIL {name}: exit {code}\n{log}")
                failures += 1
                continue
            report = json.loads((out / "report.json").read_text())
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for e in errors:
                print(f"FAIL {name}: {list(e.path)}: {e.message}")
            failures += bool(errors)
            if not errors:
                print(f"ok   {name}")
        again = tmp / "planar_again"
        run(exe, ["--op", "planar_rotation", "--seed", "7", "--out", str(again)])
        if (again / "report.json").read_bytes() != (tmp / "planar_rotation" / "report.json").read_bytes():
            print("FAIL re-run with the same seed changed report.json")
            failures += 1
        else:
            print("ok   deterministic re-run")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
