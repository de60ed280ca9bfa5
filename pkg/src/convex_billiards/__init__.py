"""Billiards in smooth strictly convex planar domains: orbits, loop functions,
wave-trace invariants and an elliptic-integral oracle for ellipses."""

from .errors import BilliardError
from .geometry import ConvexDomain, Ellipse, FourierRadial, circle, from_spec, load_domain

__all__ = ["BilliardError", "ConvexDomain", "Ellipse", "FourierRadial", "circle", "from_spec", "load_domain"]
__version__ = "0.1.0"
