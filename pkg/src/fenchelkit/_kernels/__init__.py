"""Kernel backend selection.

Imports the compiled Cython extension when it is available and falls back to
the pure-numpy twin otherwise.  Both expose the same five routines with
identical numerics; ``BACKEND`` records which one is active.  Setting the
environment variable ``FENCHELKIT_FORCE_FALLBACK`` (to any nonempty value)
skips the extension, which is how the fallback path gets exercised end to
end on machines that have the extension built.
"""

import os

from . import _fallback

if os.environ.get("FENCHELKIT_FORCE_FALLBACK"):
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

SIMPLEX_OPTIMAL = _fallback.SIMPLEX_OPTIMAL
SIMPLEX_UNBOUNDED = _fallback.SIMPLEX_UNBOUNDED
SIMPLEX_PIVOT_LIMIT = _fallback.SIMPLEX_PIVOT_LIMIT

lower_hull = _impl.lower_hull
legendre_transform = _impl.legendre_transform
minplus_convolve = _impl.minplus_convolve
simplex_pivot_loop = _impl.simplex_pivot_loop
dijkstra_grid = _impl.dijkstra_grid
