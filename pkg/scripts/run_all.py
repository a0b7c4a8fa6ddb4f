#!/usr/bin/env python3
"""Run all four experiment types on the default symmetric scenario.

Writes JSON summaries and CSV detail files under --out (default ./out),
ready for the frontend renderer.
"""

import argparse
import sys

from qwedge import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    ap.add_argument("--config", default=None)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    base = []
    if args.config:
        base += ["--config", args.config]
    rc = 0
    for sub in ("histories", "bridge", "bohm", "detector"):
        argv = [sub, *base, "--out", args.out]
        if sub in ("bohm", "detector"):
            argv += ["--n", str(args.n), "--seed", str(args.seed)]
        print(f"== qwedge {' '.join(argv)}")
        code = cli.main(argv)
        rc = rc or code
    return rc


if __name__ == "__main__":
    sys.exit(main())
