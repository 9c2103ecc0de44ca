#!/usr/bin/env python3
"""Dense vs vacuum decay times for every channel out of one level.

Prints one row per ns target plus the harmonic totals over all channels.
"""

import argparse

from rydsr.atomic import LevelRef, QuantumDefectTable, downward_channels
from rydsr.dynamics import (EXPERIMENT_ATOMS, SampleGeometry, classify, effective_decay_time, simulate,
                            total_lifetime)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--initial", default="40p")
    ap.add_argument("--density-cm3", type=float, default=5e8)
    ap.add_argument("--atoms", type=float, default=EXPERIMENT_ATOMS)
    args = ap.parse_args()

    table = QuantumDefectTable()
    geom = SampleGeometry.from_atom_count(args.density_cm3 * 1e6, args.atoms)
    dense, vac = [], []
    print(f"{'channel':>12} {'lambda (m)':>11} {'tau_vac (s)':>12} {'tau_dense (s)':>13} "
          f"{'speed-up':>9}  class")
    for ch in downward_channels(LevelRef.parse(args.initial), table):
        tr = simulate(ch, geom)
        tau = effective_decay_time(tr)
        dense.append(tau)
        vac.append(1 / ch.einstein_A)
        if ch.lower.l == 0:
            print(f"{ch.label:>12} {ch.wavelength:11.4g} {1 / ch.einstein_A:12.4g} {tau:13.4g} "
                  f"{1 / (ch.einstein_A * tau):9.3g}  {classify(tr).value}")
    print(f"total over {len(dense)} channels: dense {total_lifetime(dense) * 1e6:.4g} us, "
          f"vacuum {total_lifetime(vac) * 1e6:.4g} us")


if __name__ == "__main__":
    main()
