"""Pure numpy implementation of the RK4 core.

Numerically equivalent to the compiled extension (same stage ordering and
field sampling); used when the extension is unavailable or when
``PAIRWALK_BACKEND=python`` is set.
"""

import numpy as np


def _hamiltonian(src, out, onsite, hopping, interaction, origin, field):
    out[...] = 0.0
    out[1:, :] += src[:-1, :]
    out[:-1, :] += src[1:, :]
    out[:, 1:] += src[:, :-1]
    out[:, :-1] += src[:, 1:]
    if hopping != 1.0:
        out *= hopping
    if field == 0.0:
        pot = onsite
    else:
        pot = onsite - field * (np.arange(src.shape[0]) - origin)
    out += (pot[:, None] + pot[None, :]) * src
    diag = np.einsum("ii->i", out)
    diag += interaction * np.diagonal(src)
    return out


def rk4_advance(f, onsite, hopping, interaction, origin, dt, fields, work=None):
    """Advance ``f`` in place by ``len(fields)`` RK4 steps."""
    n = f.shape[0]
    fields = np.asarray(fields, dtype=np.float64).reshape(-1, 3)
    onsite = np.asarray(onsite, dtype=np.float64)
    if f.shape != (n, n) or onsite.shape != (n,):
        raise ValueError("grid and onsite energies disagree on lattice size")
    h = np.empty_like(f)
    stage = np.empty_like(f)
    acc = np.empty_like(f)
    # k = -i H y, so y + c k = y - i c H y
    for f0, fh, f1 in fields:
        _hamiltonian(f, h, onsite, hopping, interaction, origin, f0)
        np.multiply(h, -1j * dt / 6.0, out=acc)
        acc += f
        np.multiply(h, -0.5j * dt, out=stage)
        stage += f
        _hamiltonian(stage, h, onsite, hopping, interaction, origin, fh)
        acc += (-1j * dt / 3.0) * h
        np.multiply(h, -0.5j * dt, out=stage)
        stage += f
        _hamiltonian(stage, h, onsite, hopping, interaction, origin, fh)
        acc += (-1j * dt / 3.0) * h
        np.multiply(h, -1j * dt, out=stage)
        stage += f
        _hamiltonian(stage, h, onsite, hopping, interaction, origin, f1)
        acc += (-1j * dt / 6.0) * h
        f[...] = acc
