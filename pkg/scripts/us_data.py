"""Filter the US investment / change in inventory series.

The data are not bundled.  Supply a CSV with one header row and two value
columns (investment, change in inventory), optionally plus a time column:

    python scripts/us_data.py data/us_investment.csv [--time-column year]
"""

import argparse
import sys
from pathlib import Path

from pspp.cli import main

PRIORS = ["--b", "[[1.0, 0.0], [0.0, 1.0]]", "--c", "[[1.0, 1.0], [0.0, 1.0]]",
          "--discounts", "0.2,0.4", "--m0", "80.622,4.047",
          "--p0", "[[1000.0, 0.0], [0.0, 1000.0]]",
          "--v0", "[[66.403, 22.239], [22.239, 46.547]]", "--eta0", "1.0"]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("csv", type=Path)
    ap.add_argument("--time-column")
    ap.add_argument("--out", default="out/us")
    a = ap.parse_args()
    argv = ["filter", "--data", str(a.csv), "--out", a.out, "--format", "both", *PRIORS]
    if a.time_column:
        argv += ["--time-column", a.time_column]
    sys.exit(main(argv))
