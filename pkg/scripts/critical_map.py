#!/usr/bin/env python3
"""Critical cooperative parameter over a sample-size grid, with physical channels."""

import argparse

from rydsr.atomic import LevelRef, QuantumDefectTable, downward_channels
from rydsr.dynamics import EXPERIMENT_GEOMETRY
from rydsr.phasemap import critical_curve, default_rho_grid, map_channels


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    curve = critical_curve(default_rho_grid(args.points), workers=args.workers, verify=True)
    for r, c, f in zip(curve.rho, curve.C_crit, curve.flips):
        print(f"rho {r:10.4g}  C_crit {c:10.4g}  flips {f}")
    chans = [c for c in downward_channels(LevelRef(40, 1), QuantumDefectTable()) if c.lower.l == 0]
    for p in map_channels(chans, EXPERIMENT_GEOMETRY):
        side = "above" if p.C > curve.interpolate(p.rho) else "below"
        print(f"{p.channel.label:>10}  C {p.C:10.4g}  rho {p.rho:9.4g}  {p.regime.value:>12}  ({side} curve)")


if __name__ == "__main__":
    main()
