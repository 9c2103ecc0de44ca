#!/usr/bin/env python3
"""Wall-clock of the critical-curve scan versus worker count."""

import argparse
import os
import time

import numpy as np

from rydsr.phasemap import critical_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=8)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    args = ap.parse_args()

    rhos = np.geomspace(1.0, 1e3, args.points)
    critical_curve(rhos[:1])
    base = None
    for w in args.workers:
        t = time.perf_counter()
        critical_curve(rhos, workers=w)
        dt = time.perf_counter() - t
        base = base or dt
        print(f"workers {w}: {dt:.2f} s, speed-up {base / dt:.2f}x ({os.cpu_count()} CPUs visible)")


if __name__ == "__main__":
    main()
