"""Regenerate the synthetic material files and virtual test data in data/.

The files are deterministic: rerunning this script reproduces them byte for
byte. Run from the repository root:

    python3 demos/make_synthetic_data.py
"""
import os

from hipvp.fileio import write_dataset, write_mccp, write_tables
from hipvp.synthetic import synthetic_dataset, synthetic_mccp, synthetic_tables

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "data")


def main(out=HERE):
    os.makedirs(out, exist_ok=True)
    tables = synthetic_tables()
    write_tables(os.path.join(out, "tables.yaml"), tables)
    write_mccp(os.path.join(out, "mccp.yaml"), synthetic_mccp())
    paths = write_dataset(os.path.join(out, "dataset"), synthetic_dataset(tables))
    for p in sorted(paths.values()):
        print("wrote", os.path.relpath(p))


if __name__ == "__main__":
    main()
