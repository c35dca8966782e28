"""Batch runs through the command-line harness.

Runs the bundled sum-separable config, rebuilds the summary from the stored
runs and writes plot-ready CSV series. Output goes to a temporary directory.
"""
import csv
import json
import tempfile
from pathlib import Path

from rcsn.harness import main

out = Path(tempfile.mkdtemp(prefix="rcsn-demo-"))
main(["run", "--config", "separable_kinks.json", "--out-dir", str(out)])
main(["summarize", "--out-dir", str(out)])
main(["plotdata", "--out-dir", str(out), "--kind", "objective"])

rows = list(csv.DictReader(open(out / "summary.csv")))
kinds = {}
for row in rows:
    kinds[row["rate_class"]] = kinds.get(row["rate_class"], 0) + 1
print(f"{len(rows)} runs, rate classes {kinds}")
manifest = json.loads((out / "manifest.json").read_text())
print(f"manifest lists {len(manifest['files'])} files with SHA-256 hashes")
