"""Backend selection for the RK4 hot loop.

The compiled extension (``pairwalk._rk4``) is used when it imports; otherwise
the numpy fallback takes over. Set ``PAIRWALK_BACKEND`` to ``compiled`` or
``python`` to force a choice.
"""

import os

import numpy as np

from pairwalk import _fallback

try:
    from pairwalk import _rk4 as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends():
    return sorted(_BACKENDS)


def _select(name):
    if name in ("", "auto"):
        return "compiled" if _compiled is not None else "python"
    if name not in _BACKENDS:
        raise ImportError(
            f"PAIRWALK_BACKEND={name!r} is not available "
            f"(have: {', '.join(available_backends())})"
        )
    return name


BACKEND = _select(os.environ.get("PAIRWALK_BACKEND", "auto").strip().lower())


def rk4_advance(f, onsite, hopping, interaction, origin, dt, fields, backend=None):
    """Advance the complex grid ``f`` in place by ``len(fields)`` RK4 steps.

    Parameters
    ----------
    f : ndarray, complex128, shape (N, N), C-contiguous
    onsite : ndarray, float64, shape (N,)
    hopping : float
    interaction : float
        Hubbard U.
    origin : float
        Site index where the field potential vanishes.
    dt : float
    fields : ndarray, shape (nsteps, 3)
        Field at t, t + dt/2 and t + dt for each step.
    backend : str, optional
        Override the module-level choice.
    """
    impl = _BACKENDS[_select(backend) if backend else BACKEND]
    fields = np.ascontiguousarray(fields, dtype=np.float64).reshape(-1, 3)
    onsite = np.ascontiguousarray(onsite, dtype=np.float64)
    impl.rk4_advance(f, onsite, float(hopping), float(interaction), float(origin), float(dt), fields)
