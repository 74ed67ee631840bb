"""qel: a desk-scale laboratory for interior quadrupole packet amplification
in axisymmetric Euler flow with swirl.

Grids and fields, 5D-reduced elliptic velocity recovery with far-field
boundary data, explicit quadrupole initial data, tracked-packet diagnostics,
static kernel verifications, short-time semi-Lagrangian evolution, and the
Riccati comparison system.
"""

__version__ = "0.1.0"

from qel import fields  # noqa: F401  (re-export for qualified access)
