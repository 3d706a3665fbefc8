"""Backend dispatch for the hot numeric kernels.

The numba-jitted backend is the default whenever numba imports cleanly.
Set ``MCMIMO_BACKEND=numpy`` to force the pure-numpy fallback (useful on
platforms without a working JIT, or to benchmark one against the other),
or ``MCMIMO_BACKEND=numba`` to fail loudly if numba is unavailable.
"""

import os

from . import numpy_backend

_CHOICE = os.environ.get("MCMIMO_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"MCMIMO_BACKEND={_CHOICE!r} not recognized; use 'numba', 'numpy' or 'auto'"
    )

if _CHOICE == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        if _CHOICE == "numba":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"

pilot_alpha_sq = _impl.pilot_alpha_sq
sinr_pilotwise = _impl.sinr_pilotwise
ber_pilotwise = _impl.ber_pilotwise
interference_pilotwise = _impl.interference_pilotwise
score_permutations = _impl.score_permutations

__all__ = [
    "BACKEND",
    "pilot_alpha_sq",
    "sinr_pilotwise",
    "ber_pilotwise",
    "interference_pilotwise",
    "score_permutations",
    "numpy_backend",
]
