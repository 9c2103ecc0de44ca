#!/usr/bin/env python3
"""Compare candidate decay-time read-outs on the dense 40p channels.

emitted-1/e : time for the released population to reach 1 - 1/e of its final value
mean        : mean emission time, integral of t * rate over integral of rate
rho_ee 1/e  : first time rho_ee itself drops to 1/e (undefined when it stalls near 1/2)
"""

import math

import numpy as np
from scipy.integrate import trapezoid

from rydsr.atomic import LevelRef, QuantumDefectTable, downward_channels
from rydsr.dynamics import (EXPERIMENT_GEOMETRY, TruncationError, effective_decay_time,
                            population_crossing_time, simulate, total_lifetime)


def mean_emission_time(tr):
    rate = tr.rate_per_atom
    return trapezoid(tr.t * rate, tr.t) / trapezoid(rate, tr.t)


def main():
    totals = {"emitted-1/e": [], "mean": [], "rho_ee 1/e": []}
    for ch in downward_channels(LevelRef(40, 1), QuantumDefectTable()):
        tr = simulate(ch, EXPERIMENT_GEOMETRY)
        a = effective_decay_time(tr)
        m = mean_emission_time(tr)
        try:
            p = population_crossing_time(tr)
        except TruncationError:
            p = math.inf
        totals["emitted-1/e"].append(a)
        totals["mean"].append(m)
        totals["rho_ee 1/e"].append(p)
        if ch.lower.l == 0 and ch.lower.n >= 30:
            print(f"{ch.label:>10}  1/A {1 / ch.einstein_A:9.3g}  emitted-1/e {a:9.3g}  mean {m:9.3g}  "
                  f"rho_ee 1/e {p:9.3g}  final rho_ee {tr.rho_ee[-1]:.4f}")
    for k, v in totals.items():
        print(f"tau_total ({k}): {total_lifetime(v) * 1e6:.4g} us")


if __name__ == "__main__":
    main()
