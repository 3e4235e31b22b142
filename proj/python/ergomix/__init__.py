"""Spread-out random walks on torus and lattice cover models.

Exact finite kernels, Doeblin/drift mixing certificates, Chebyshev-based
return-probability lower bounds, recurrence classification, and
limit-theorem experiments. The heavy lifting lives in the C++ extension
module `_ergomix`.
"""

from ._ergomix import *  # noqa: F401,F403
from ._ergomix import __version__  # noqa: F401
