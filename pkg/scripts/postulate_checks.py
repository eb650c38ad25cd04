"""Monte Carlo checks of the t, inverted t and Wishart examples, the
linear-mean property suite and the SOP vs conjugate comparison.

    python scripts/postulate_checks.py [--seed N] [--draws N]
"""

import sys

from pspp.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    rc = main(["postulate-check", "--out", "out/postulates", *args])
    # sop-compare ignores draws and bins
    keep, skip = [], False
    for a in args:
        if skip or a.split("=")[0] in ("--draws", "--bins"):
            skip = not skip and "=" not in a
            continue
        keep.append(a)
    rc = rc or main(["sop-compare", "--out", "out/sop_compare", *keep])
    sys.exit(rc)
