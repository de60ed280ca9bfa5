#!/usr/bin/env python3
"""List the eight j-link orbits joining two points close to the boundary of an ellipse."""
import argparse

from convex_billiards.geometry import BoundaryNormalCoords, Ellipse
from convex_billiards.orbits import find_eight_orbits, resimulate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--a", type=float, default=1.5)
ap.add_argument("--j", type=int, default=20)
ap.add_argument("--mu", type=float, default=1e-6, help="distance of both points to the boundary")
ap.add_argument("--s0", type=float, default=0.3, help="foot point of the first point")
args = ap.parse_args()

d = Ellipse(args.a, 1.0)
x = d.from_boundary_normal(BoundaryNormalCoords(args.mu, args.s0))
y = d.from_boundary_normal(BoundaryNormalCoords(args.mu, args.s0 + 2 * args.mu))
for ob in find_eight_orbits(d, x, y, args.j):
    print(f"{ob.config:<4} {ob.direction:<4} length {ob.length:.12f}  resimulation error {resimulate(d, ob):.2e}")
