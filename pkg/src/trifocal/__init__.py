"""Numerical algebraic geometry for calibrated three-view minimal problems.

Builds trifocal tensors from camera triples, computes pseudo-witness sets
for the calibrated trifocal variety by monodromy with trace-test
certification, moves them to correspondence-constraint slices by parameter
homotopy, and filters endpoints to count and emit solutions of the 66
calibrated minimal problems.
"""

__version__ = "0.1.0"
