#!/usr/bin/env python3
"""Fetch the public benchmark CSVs and normalize them to (smiles, target).

Files land in data/ as <name>.csv with a two-column header, ready for
`molfuse --dataset data/<name>.csv ...`. Sources are the MoleculeNet
mirrors; they require network access and are therefore not bundled.

  delaney        aqueous solubility, log(mol/L), 1128 molecules
  sampl          hydration free energy / logP benchmark (FreeSolv), 642
  lipophilicity  octanol/water logD at pH 7.4, 4200
  bace           beta-secretase inhibition pIC50, 1513
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import urllib.request
from pathlib import Path

MIRROR = "https://deepchemdata.s3-us-west-1.amazonaws.com/datasets"

SOURCES = {
    "delaney": (f"{MIRROR}/delaney-processed.csv", "smiles", "measured log solubility in mols per litre"),
    "sampl": (f"{MIRROR}/SAMPL.csv", "smiles", "expt"),
    "lipophilicity": (f"{MIRROR}/Lipophilicity.csv", "smiles", "exp"),
    "bace": (f"{MIRROR}/bace.csv", "mol", "pIC50"),
}


def fetch(name: str, outdir: Path) -> Path:
    url, smiles_col, target_col = SOURCES[name]
    print(f"fetching {name} from {url}")
    raw = urllib.request.urlopen(url, timeout=60).read().decode("utf-8")
    reader = csv.DictReader(io.StringIO(raw))
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / f"{name}.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["smiles", "target"])
        n = 0
        for row in reader:
            writer.writerow([row[smiles_col].strip(), row[target_col].strip()])
            n += 1
    print(f"wrote {out} ({n} rows)")
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("datasets", nargs="*", default=[], help="subset to fetch (default: all)")
    parser.add_argument("--outdir", default="data", type=Path)
    args = parser.parse_args()
    names = args.datasets or list(SOURCES)
    for name in names:
        if name not in SOURCES:
            print(f"unknown dataset {name!r}; choose from {sorted(SOURCES)}", file=sys.stderr)
            return 2
        fetch(name, args.outdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
