"""Profile matching toolkit.

Decides whether two social-network profiles belong to the same user:
six field-level similarity metrics feed a per-pair score vector, which
trains classifiers, scores feature discriminativity, and ranks candidate
profiles for a query profile.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: F401
