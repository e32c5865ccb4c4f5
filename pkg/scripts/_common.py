"""Shared plumbing for the experiment scripts: flags, CSV and manifest output."""
import argparse
import json
import platform
import time
from pathlib import Path

import numpy as np
import scipy

from optmed import __version__
from optmed import simulate as sm


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results", help="output directory")
    return p


def save(rows, cells, name, args, started):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    csv_path.write_text(sm.rows_to_csv(rows), encoding="utf-8")
    manifest = {
        "command": name, "seed": args.seed, "scale": args.scale, "workers": args.workers,
        "elapsedSeconds": time.perf_counter() - started,
        "versions": {"optmed": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "cells": sm.config_echo(cells),
    }
    (out / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {csv_path} ({len(rows)} rows)")
