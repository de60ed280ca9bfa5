#!/usr/bin/env python3
"""Print fitted symbol orders for a caustic family and for a perturbed circle.

The perturbed circle r = 1 + 0.01 cos 3t has six nondegenerate 3-periodic
orbits.  Two windows are shown for it: the default one covering all critical
lengths [t_j, T_j] (where the max and min lengths interfere) and narrow
windows that see only the longest orbit.
"""
import math

from convex_billiards.geometry import Ellipse, FourierRadial, circle
from convex_billiards.trace_check import Window, symbol_samples, trace_pipeline
from convex_billiards.verify import localized_windows


def show(label, rep):
    f = rep.fit
    print(f"{label:<34} slope {f.fitted_slope:+.4f} +- {f.slope_stderr:.4f}  ({rep.verdict})")


def main():
    for name, d in (("circle j=10", circle(1.0)), ("ellipse 2:1 j=10", Ellipse(2.0, 1.0))):
        show(name, trace_pipeline(d, 10, grid_n=64))
    d = FourierRadial(1.0, (0.0, 0.0, 0.01))
    samples = symbol_samples(d, 3, 128)
    T = float(samples[1].max())
    print(f"trefoil j=3: t_j={samples[1].min():.6f} T_j={T:.6f}")
    for r in (0.2, 0.3):
        show(f"  full window, roll-off {r}", trace_pipeline(d, 3, rolloff=r, samples=samples))
    for w in localized_windows(T):
        show(f"  near T_j, roll-off {w.rolloff}", trace_pipeline(d, 3, window=w, samples=samples))


if __name__ == "__main__":
    main()
