"""Two-particle state on an open 1D chain and its equation of motion.

Units throughout: hbar = e = a = 1, energies in units of the hopping J.
The state is the Wannier amplitude grid ``f[n1, n2]`` for two particles
distinguished by a spin label; no (anti)symmetrization is imposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pairwalk.errors import BadSpec, EdgeOverlap

GAUGES = ("centered", "absolute")

EDGE_OVERLAP_LIMIT = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Chain parameters.

    Parameters
    ----------
    n_sites : int
        Lattice length N (at least 8).
    hopping : float
        Nearest-neighbour amplitude J. The natural units fix it
        to 1; other values are supported everywhere.
    interaction : float
        On-site Hubbard repulsion U >= 0.
    onsite_energy : tuple of float, optional
        Per-site potential; ``None`` means all zero.
    gauge : {"centered", "absolute"}
        Where the field potential vanishes: at N/2 (default) or at site 0.
        The two differ by a global phase only.
    """

    n_sites: int
    hopping: float = 1.0
    interaction: float = 0.0
    onsite_energy: tuple[float, ...] | None = None
    gauge: str = "centered"

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 8:
            raise BadSpec(f"n_sites must be an integer >= 8, got {self.n_sites}", "lattice.n_sites")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if not np.isfinite(self.hopping):
            raise BadSpec("hopping must be finite", "lattice.hopping")
        if not np.isfinite(self.interaction) or self.interaction < 0:
            raise BadSpec(
                f"interaction must be >= 0 (repulsive only), got {self.interaction}",
                "lattice.interaction",
            )
        if self.onsite_energy is not None:
            eps = tuple(float(e) for e in self.onsite_energy)
            if len(eps) != self.n_sites:
                raise BadSpec(
                    f"onsite_energy has {len(eps)} entries for {self.n_sites} sites",
                    "lattice.onsite_energy",
                )
            object.__setattr__(self, "onsite_energy", eps)
        if self.gauge not in GAUGES:
            raise BadSpec(f"gauge must be one of {GAUGES}", "lattice.gauge")

    @property
    def onsite(self) -> np.ndarray:
        if self.onsite_energy is None:
            return np.zeros(self.n_sites)
        return np.array(self.onsite_energy, dtype=np.float64)

    @property
    def origin(self) -> float:
        """Site index at which the field potential is zero."""
        return 0.5 * self.n_sites if self.gauge == "centered" else 0.0

    def replace(self, **changes) -> "LatticeSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class Wavefunction:
    """Amplitude grid ``f[n1, n2]`` at a given simulation time."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise BadSpec(f"amplitudes must be a square grid, got shape {a.shape}")
        self.amplitudes = a

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        a = self.amplitudes
        return float(np.vdot(a, a).real)

    def copy(self) -> "Wavefunction":
        return Wavefunction(self.amplitudes.copy(), self.time)

    def exchange_asymmetry(self) -> float:
        """max |f(n1, n2) - f(n2, n1)|."""
        a = self.amplitudes
        return float(np.max(np.abs(a - a.T)))


@dataclass(frozen=True)
class InitialStateSpec:
    """Gaussian product state.

    Centres default to (N/2 - offset, N/2 + offset); explicit ``center_1`` and
    ``center_2`` override them.
    """

    width: float
    offset: int = 0
    center_1: int | None = None
    center_2: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.width) or self.width <= 0:
            raise BadSpec(f"width must be > 0, got {self.width}", "init.width")

    def centers(self, lattice: LatticeSpec) -> tuple[int, int]:
        mid = lattice.n_sites // 2
        c1 = mid - self.offset if self.center_1 is None else self.center_1
        c2 = mid + self.offset if self.center_2 is None else self.center_2
        return int(c1), int(c2)


def _gaussian_profile(n_sites, center, width):
    """Return the in-lattice profile and the weight fraction lying outside."""
    reach = int(np.ceil(40 * width)) + 10
    full = np.arange(min(0, center - reach), max(n_sites, center + reach + 1))
    g_full = np.exp(-((full - center) ** 2) / (4.0 * width**2))
    inside = (full >= 0) & (full < n_sites)
    total = np.sum(g_full**2)
    outside = np.sum(g_full[~inside] ** 2) / total
    return g_full[inside], outside


def build_initial_state(lattice: LatticeSpec, init: InitialStateSpec) -> Wavefunction:
    """Normalized product of two Gaussians exp(-(n - c)^2 / (4 width^2)).

    Raises
    ------
    BadSpec
        Width not positive or a centre outside the lattice.
    EdgeOverlap
        More than 1e-12 of the untruncated Gaussian weight falls off the chain.
    """
    n = lattice.n_sites
    c1, c2 = init.centers(lattice)
    for name, c in (("center_1", c1), ("center_2", c2)):
        if not 0 <= c < n:
            raise BadSpec(f"{name}={c} lies outside [0, {n})", f"init.{name}")
    g1, out1 = _gaussian_profile(n, c1, init.width)
    g2, out2 = _gaussian_profile(n, c2, init.width)
    lost = out1 + out2 - out1 * out2
    if lost >= EDGE_OVERLAP_LIMIT:
        raise EdgeOverlap(
            f"Gaussian tails put {lost:.3e} of the weight outside the lattice "
            f"(limit {EDGE_OVERLAP_LIMIT:g}); enlarge n_sites or narrow the width",
            "init.width",
        )
    amps = np.outer(g1, g2).astype(np.complex128)
    amps /= np.sqrt(np.vdot(amps, amps).real)
    return Wavefunction(amps, 0.0)


def potential(lattice: LatticeSpec, field_value: float) -> np.ndarray:
    """Single-index potential eps_n - F (n - origin); the pair potential is
    ``potential[n1] + potential[n2]``."""
    sites = np.arange(lattice.n_sites)
    return lattice.onsite - field_value * (sites - lattice.origin)


def apply_hamiltonian(amplitudes: np.ndarray, lattice: LatticeSpec, field_value: float = 0.0) -> np.ndarray:
    """H f for the Hubbard pair Hamiltonian with open boundaries."""
    f = np.asarray(amplitudes)
    if f.shape != (lattice.n_sites, lattice.n_sites):
        raise BadSpec(f"grid shape {f.shape} does not match n_sites={lattice.n_sites}")
    out = np.zeros(f.shape, dtype=np.result_type(f, np.complex128))
    out[1:, :] += f[:-1, :]
    out[:-1, :] += f[1:, :]
    out[:, 1:] += f[:, :-1]
    out[:, :-1] += f[:, 1:]
    out *= lattice.hopping
    pot = potential(lattice, field_value)
    out += (pot[:, None] + pot[None, :]) * f
    idx = np.arange(lattice.n_sites)
    out[idx, idx] += lattice.interaction * f[idx, idx]
    return out


def apply_rhs(state, lattice: LatticeSpec, field_value: float) -> np.ndarray:
    """Time derivative df/dt = -i H(t) f.

    ``state`` may be a :class:`Wavefunction` or a bare amplitude grid.
    """
    amps = state.amplitudes if isinstance(state, Wavefunction) else state
    return -1j * apply_hamiltonian(amps, lattice, field_value)
