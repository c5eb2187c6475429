"""Numerical toolkit for relative Schottky sets in planar Jordan domains.

Subpackages cover the exact-formula geometry layer, scene validation and
reflection-group orbits, curve rerouting with its length guarantee, conformal
and transboundary modulus solvers, Koebe circle-domain uniformization, and a
quantitative verification harness.  The ``sforge`` command line fronts the
same operations.
"""

__version__ = "0.1.0"
