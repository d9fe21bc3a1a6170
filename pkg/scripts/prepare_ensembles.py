#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
prepare_ensembles.py

Description:
    Writes the example ensemble files used by the README and the acceptance
    suite into:
        data/ensembles/{name}.json

Usage:
    python3 scripts/prepare_ensembles.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from med_lab.config import DATA_DIR  # noqa: E402
from med_lab.med_cli import gen_document  # noqa: E402

# name -> (kind, params)
EXAMPLES = {
    "trine": ("trine", {}),
    "orthogonal_pair": ("pair", {"a": 1.0}),
    "equatorial_pair": ("pair", {"a": 0.6}),
    "latitude_a06_n3": ("latitude", {"a": 0.6, "theta": 0.7853981633974483, "n": 3}),
    "spin1_a03_n4": ("spin", {"two_j": 2, "a": 0.3, "theta": 1.0472, "n": 4}),
}


def write_example(name, kind, params, out_dir):
    document = gen_document(kind, **params)
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


if __name__ == "__main__":
    out_dir = Path(__file__).resolve().parents[1] / DATA_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (kind, params) in EXAMPLES.items():
        try:
            path = write_example(name, kind, params, out_dir)
            print(f"✅ Saved: {path}")
        except Exception as e:
            print(f"❌ Failed to write {name}: {e}")
