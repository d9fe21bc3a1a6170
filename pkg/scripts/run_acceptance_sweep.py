#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
run_acceptance_sweep.py

Description:
    Validity map of the spin-j latitude formula p = (1/N)[1 + a(d-1) sin(theta)].
    For j in {1/2, 1, 3/2}, five values of a in [0, 1/(2j)], theta in
    {pi/6, pi/3, pi/2} and N in {2, 3, 4} it records the formula, the
    certified closed form (if any) and the oracle, then prints the certified
    fraction per j. Output:
        data/sweeps/latitude_validity.csv

Usage:
    python3 scripts/run_acceptance_sweep.py
"""

import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from med_lab.med_cli import run_sweep  # noqa: E402

OUTPUT_PATH = Path(__file__).resolve().parents[1] / "data" / "sweeps" / "latitude_validity.csv"
THETAS = [math.pi / 6, math.pi / 3, math.pi / 2]
COUNTS = [2, 3, 4]


def sweep_spin(two_j):
    a_values = [float(a) for a in np.linspace(0.0, 1.0 / two_j, 5)]
    body = {"two_j": two_j, "a": 0.0, "theta": 0.0, "phi": 0.0, "n": 2}
    grid = {"a": a_values, "theta": THETAS, "n": COUNTS}
    table = run_sweep(body, grid)
    table.insert(0, "two_j", two_j)
    return table


if __name__ == "__main__":
    tables = []
    for two_j in (1, 2, 3):
        table = sweep_spin(two_j)
        certified = table[table["certified"] == 1]
        worst = (certified["p_closed"] - certified["p_oracle"]).abs().max() if len(certified) else float("nan")
        print(f"🧾 j={two_j / 2:g}: {len(certified)}/{len(table)} certified, max |p_closed - p_oracle| = {worst:.3e}")
        tables.append(table)

    OUTPUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    pd.concat(tables, ignore_index=True).to_csv(OUTPUT_PATH, index=False)
    print(f"✅ Saved: {OUTPUT_PATH}")
