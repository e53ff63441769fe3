"""Small helpers shared by the experiment scripts."""

import json
from pathlib import Path

import numpy as np


def save_table(path: Path, columns: dict, header: dict | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={json.dumps(v)}\n")
        fh.write(",".join(columns) + "\n")
        for row in zip(*columns.values()):
            fh.write(",".join(f"{float(v):.10g}" for v in row) + "\n")
    print(f"wrote {path}")


def pyplot():
    """matplotlib.pyplot with a non-interactive backend, or None if unavailable."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping plots")
        return None
    return plt


def steps(est):
    """x, y arrays that draw a histogram as a step curve."""
    return est.bin_edges, np.append(est.heights, est.heights[-1])
