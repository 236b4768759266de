"""Kernel backend selection.

Imports the compiled Cython core when present; otherwise (or when
``EXACTMRF_NO_EXT=1``) the numpy/pure-Python fallback.  Both expose the same
functions; ``HAVE_EXT``/``BACKEND`` report which one is active.
"""
import os

from . import pure

_force_pure = os.environ.get("EXACTMRF_NO_EXT", "").strip() not in ("", "0")

if not _force_pure:
    try:
        from . import _ckern as _impl
        HAVE_EXT = True
    except ImportError:
        _impl = pure
        HAVE_EXT = False
else:
    _impl = pure
    HAVE_EXT = False

BACKEND = "compiled" if HAVE_EXT else "pure"

STATUS_OK = pure.STATUS_OK
STATUS_NEGATIVE = pure.STATUS_NEGATIVE

binary_forward = _impl.binary_forward
binary_remove = _impl.binary_remove
plan_remove = _impl.plan_remove
gibbs_complete = _impl.gibbs_complete
gibbs_bipartite = _impl.gibbs_bipartite
