"""Replication study behind the forecast-accuracy and V-estimate tables.

    python scripts/reproduce_tables.py                  # 200 series, length 500
    python scripts/reproduce_tables.py --n-series 1000 --workers 4

Extra flags are passed to ``pspp reproduce-tables``.
"""

import sys

from pspp.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce-tables", "--out", "out/tables", "--format", "both",
                   *sys.argv[1:]]))
