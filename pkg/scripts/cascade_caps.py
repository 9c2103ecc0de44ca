#!/usr/bin/env python3
"""Detected-signal decay of the cascade for several channel caps."""

import argparse

import numpy as np

from rydsr.atomic import LevelRef, QuantumDefectTable
from rydsr.cascade import build_network, evolve, max_relative_deviation
from rydsr.dynamics import EXPERIMENT_GEOMETRY


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--initial", default="40p")
    ap.add_argument("--floor", type=int, default=27)
    ap.add_argument("--caps", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    table = QuantumDefectTable()
    runs = {}
    for cap in args.caps:
        net = build_network(table, EXPERIMENT_GEOMETRY, cap=cap, initial=LevelRef.parse(args.initial),
                            detection_floor=args.floor, absorb_below=args.floor,
                            workers=args.workers)
        tr = evolve(net, 1400.0, 6e-6, 36e-6)
        runs[cap] = tr
        marks = [f"{tr.detected[i]:.0f}" for i in range(0, len(tr.times), 100)]
        print(f"cap {cap}: {len(net.levels)} levels, e-folding {tr.e_folding_time() * 1e6:.3g} us, "
              f"N(6, 11, ..., 36 us) = {' '.join(marks)}")
        first = net.edges[net.initial]
        print("   out of", net.initial.label, [(e.lower.label, f"{e.tau_eff * 1e6:.3g} us") for e in first])
    caps = sorted(runs)
    for a, b in zip(caps, caps[1:]):
        dev = max_relative_deviation(runs[a], runs[b])
        absdev = np.max(np.abs(runs[a].detected - runs[b].detected)) / 1400.0
        print(f"cap {a} vs {b}: max deviation {dev:.2%} of signal, {absdev:.2%} of N0")


if __name__ == "__main__":
    main()
