"""Shared helpers for the experiment scripts: output directory and CSV writing."""
import os
import sys

from heatpot.cli import RunManifest, write_csv

OUT = os.environ.get("HEATPOT_RESULTS", os.path.join(os.path.dirname(__file__), "..", "results"))


def save(name, params, columns, data, results=None):
    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, name)
    m = RunManifest(os.path.basename(sys.argv[0]), sys.argv[1:], params, out=path,
                    results=results or {})
    write_csv(path, m, columns, data)
    print(f"wrote {path}")
