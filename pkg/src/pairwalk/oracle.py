"""Dense exact-diagonalization backend for validating the RK4 engine.

Field-free only. Basis ordering matches ``amplitudes.ravel()``: the state
|n1, n2> sits at index ``n1 * N + n2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pairwalk.errors import BadSpec, NoBoundBand, TooLarge
from pairwalk.lattice import LatticeSpec, Wavefunction

MAX_DENSE_SITES = 64
BOUND_THRESHOLD = 0.5


def _chain(n, hopping, periodic):
    t = np.zeros((n, n))
    idx = np.arange(n - 1)
    t[idx, idx + 1] = hopping
    t[idx + 1, idx] = hopping
    if periodic and n > 2:
        t[0, n - 1] = t[n - 1, 0] = hopping
    return t


@dataclass
class DenseHamiltonian:
    """Field-free pair Hamiltonian as an N^2 x N^2 Hermitian matrix."""

    matrix: np.ndarray
    lattice: LatticeSpec
    periodic: bool = False
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvector columns (cached)."""
        if self._eig is None:
            m = self.matrix
            if np.all(m.imag == 0):
                vals, vecs = np.linalg.eigh(m.real)
            else:
                vals, vecs = np.linalg.eigh(m)
            self._eig = (vals, vecs)
        return self._eig

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        n = self.lattice.n_sites
        return (self.matrix @ np.asarray(amplitudes).ravel()).reshape(n, n)


def build_dense(lattice: LatticeSpec, periodic: bool = False) -> DenseHamiltonian:
    """Assemble hopping (J on every bond, each particle), on-site energies and
    the Hubbard diagonal.

    Raises
    ------
    TooLarge
        ``n_sites`` above 64.
    """
    n = lattice.n_sites
    if n > MAX_DENSE_SITES:
        raise TooLarge(f"dense path limited to {MAX_DENSE_SITES} sites, got {n}")
    t = _chain(n, lattice.hopping, periodic)
    eye = np.eye(n)
    h = np.kron(t, eye) + np.kron(eye, t)
    eps = lattice.onsite
    diag = (eps[:, None] + eps[None, :]).ravel()
    diag[:: n + 1] += lattice.interaction
    h[np.diag_indices_from(h)] += diag
    return DenseHamiltonian(h.astype(np.complex128), lattice, periodic)


def exact_propagate(state, hamiltonian: DenseHamiltonian, t: float) -> Wavefunction:
    """exp(-i H t) applied through the eigendecomposition."""
    amps = state.amplitudes if isinstance(state, Wavefunction) else np.asarray(state)
    t0 = state.time if isinstance(state, Wavefunction) else 0.0
    n = hamiltonian.lattice.n_sites
    vals, vecs = hamiltonian.eigensystem()
    coeffs = vecs.conj().T @ amps.ravel()
    out = vecs @ (np.exp(-1j * vals * t) * coeffs)
    return Wavefunction(out.reshape(n, n), t0 + t)


def single_particle_energies(n_sites: int, hopping: float = 1.0, periodic: bool = False) -> np.ndarray:
    """Chain spectrum: 2J cos(pi m / (N + 1)) (open) or 2J cos(2 pi m / N) (ring)."""
    m = np.arange(n_sites)
    if periodic:
        return np.sort(2.0 * hopping * np.cos(2.0 * np.pi * m / n_sites))
    return np.sort(2.0 * hopping * np.cos(np.pi * (m + 1) / (n_sites + 1)))


def pair_weights(vecs: np.ndarray, n_sites: int, width: int = 1) -> np.ndarray:
    """Weight of each eigenvector column on |n1 - n2| <= width."""
    idx = np.arange(n_sites)
    mask = (np.abs(idx[:, None] - idx[None, :]) <= width).ravel()
    return np.sum(np.abs(vecs[mask]) ** 2, axis=0)


@dataclass(frozen=True)
class BandState:
    momentum: float  # NaN on the open chain
    energy: float
    pair_weight: float


def _ring_blocks(lattice: LatticeSpec):
    """Yield (k, energies, pair weights) per centre-of-mass momentum on a ring.

    Basis |P, r> = N^-1/2 sum_n exp(iPn) |n, n + r mod N>, P = 2 pi m / N,
    k = P / 2. Each block is a ring in the relative coordinate r with hopping
    J (1 + exp(iP)) and U on r = 0.
    """
    n = lattice.n_sites
    jh = lattice.hopping
    r = np.arange(n)
    near = (r == 0) | (r == 1) | (r == n - 1)
    for m in range(n):
        p = 2.0 * math.pi * m / n
        block = np.zeros((n, n), dtype=np.complex128)
        amp = jh * (1.0 + np.exp(1j * p))
        block[(r + 1) % n, r] += amp
        block[r, (r + 1) % n] += np.conj(amp)
        block[0, 0] += lattice.interaction
        vals, vecs = np.linalg.eigh(block)
        weights = np.sum(np.abs(vecs[near]) ** 2, axis=0)
        yield p / 2.0, vals, weights


def classify_spectrum(lattice: LatticeSpec, periodic: bool = False,
                      threshold: float = BOUND_THRESHOLD) -> tuple[list[BandState], list[BandState]]:
    """Split eigenstates into (bound, unbound) by pair weight on |n1 - n2| <= 1."""
    n = lattice.n_sites
    if n > MAX_DENSE_SITES:
        raise TooLarge(f"dense path limited to {MAX_DENSE_SITES} sites, got {n}")
    bound, unbound = [], []
    if periodic:
        if np.any(lattice.onsite != 0):
            raise BadSpec("the momentum-resolved ring needs zero on-site energies")
        for k, vals, weights in _ring_blocks(lattice):
            for e, w in zip(vals, weights):
                (bound if w > threshold else unbound).append(BandState(k, float(e), float(w)))
    else:
        vals, vecs = build_dense(lattice).eigensystem()
        weights = pair_weights(vecs, n)
        for e, w in zip(vals, weights):
            (bound if w > threshold else unbound).append(BandState(math.nan, float(e), float(w)))
    return bound, unbound


def bound_band(lattice: LatticeSpec, periodic: bool = False,
               threshold: float = BOUND_THRESHOLD) -> list[tuple[float, float]]:
    """(k, E) of the bound-pair eigenstates, sorted by energy.

    ``k`` is NaN on the open chain. Classification is unreliable for
    0 < U < 1, where pairs are barely bound on small lattices.

    Raises
    ------
    NoBoundBand
        ``U = 0`` (no pairing; degenerate eigenvectors would make the weight
        test arbitrary) or no eigenstate carries more than ``threshold`` pair
        weight.
    """
    if lattice.interaction <= 0:
        raise NoBoundBand("no bound pairs without interaction (U = 0)")
    bound, _ = classify_spectrum(lattice, periodic, threshold)
    if not bound:
        raise NoBoundBand(f"no bound-pair states at U={lattice.interaction:g}")
    return sorted(((s.momentum, s.energy) for s in bound), key=lambda kv: kv[1])
