"""Measured quantities of the two-particle amplitude grid.

All functions take a :class:`~pairwalk.lattice.Wavefunction` or a bare
``(N, N)`` complex grid and assume nothing beyond that.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg.blas import zherk
from scipy.signal import find_peaks

from pairwalk.errors import BadSpec, InsufficientSamples
from pairwalk.pulse import as_pulses

DEFAULT_BOUND_WIDTH = 1

SCALAR_FIELDS = (
    "t",
    "centroid_1",
    "centroid_2",
    "norm",
    "purity",
    "double_occ",
    "bound_fraction",
    "left_frac",
    "right_frac",
    "bound_centroid",
    "unbound_centroid",
)


def _grid(state) -> np.ndarray:
    return getattr(state, "amplitudes", state)


def probability(state) -> np.ndarray:
    a = _grid(state)
    return a.real**2 + a.imag**2


def centroid(state) -> tuple[float, float]:
    """Mean positions (sum n1 |f|^2, sum n2 |f|^2)."""
    return _centroid(probability(state))


def _centroid(p):
    sites = np.arange(p.shape[0])
    return float(p.sum(axis=1) @ sites), float(p.sum(axis=0) @ sites)


def marginal_density(state, particle: int = 1) -> np.ndarray:
    """One-particle density P_i(n), the other particle traced out."""
    if particle not in (1, 2):
        raise BadSpec(f"particle must be 1 or 2, got {particle}")
    return probability(state).sum(axis=1 if particle == 1 else 0)


def purity(state) -> float:
    """tr(rho_1^2) with rho_1 = M M^dagger / tr(M M^dagger), M the amplitude grid.

    Unit-trace normalisation keeps integrator norm drift out of the result;
    the drift is reported separately. Computed from the Gram matrix; ``zherk``
    fills only its upper triangle.
    """
    m = np.asarray(_grid(state), dtype=np.complex128)
    gram = zherk(1.0, m)
    upper = np.triu(gram)
    diag = np.diagonal(gram).real
    off = np.abs(upper) ** 2
    return float((2.0 * off.sum() - np.sum(diag**2)) / diag.sum() ** 2)


def double_occupancy(state) -> float:
    """Probability that both particles sit on the same site."""
    d = np.diagonal(_grid(state))
    return float(np.sum(d.real**2 + d.imag**2))


@lru_cache(maxsize=8)
def _pair_geometry(n, width):
    """Bound-region mask and pair-centre coordinate for an n x n grid."""
    idx = np.arange(n)
    mask = np.abs(np.subtract.outer(idx, idx)) <= width
    center = 0.5 * (idx[:, None] + idx[None, :])
    return mask, center


def bound_fraction(state, w_bound: int = DEFAULT_BOUND_WIDTH) -> float:
    """Probability with |n1 - n2| <= w_bound."""
    return _bound_fraction(probability(state), w_bound)


def _bound_fraction(p, w_bound):
    total = 0.0
    for k in range(-w_bound, w_bound + 1):
        total += np.trace(p, offset=k)
    return float(total)


def branch_centroids(state, w_bound: int = DEFAULT_BOUND_WIDTH) -> tuple[float, float]:
    """Pair centre (n1 + n2) / 2 averaged separately over the bound region
    (|n1 - n2| <= w_bound) and its complement. NaN for an empty region."""
    return _branch_centroids(probability(state), w_bound)


def _branch_centroids(p, w_bound):
    mask, center = _pair_geometry(p.shape[0], w_bound)
    out = []
    for region in (mask, ~mask):
        weight = p[region].sum()
        out.append(float((p[region] * center[region]).sum() / weight) if weight > 0 else math.nan)
    return out[0], out[1]


def branch_split(marginal, reference: float) -> tuple[float, float]:
    """Probability left and right of ``reference``.

    A site exactly at ``reference`` contributes half its weight to each side.
    """
    density = np.asarray(marginal, dtype=np.float64)
    sites = np.arange(density.size)
    left = density[sites < reference].sum()
    right = density[sites > reference].sum()
    at = density[sites == reference].sum()
    return float(left + 0.5 * at), float(right + 0.5 * at)


def edge_probability(state, width: int = 3) -> float:
    """Probability that either particle lies within ``width`` sites of an edge."""
    return _edge_probability(probability(state), width)


def _edge_probability(p, width):
    n = p.shape[0]
    w = min(width, n // 2)
    strips = p[:w].sum() + p[n - w:].sum()
    strips += p[w:n - w, :w].sum() + p[w:n - w, n - w:].sum()
    return float(strips)


def density_peaks(density, min_height: float = 0.05, min_separation: int = 5) -> np.ndarray:
    """Sites of local maxima whose height and prominence exceed ``min_height``
    times the global maximum."""
    density = np.asarray(density, dtype=np.float64)
    top = density.max()
    if top <= 0:
        return np.array([], dtype=int)
    padded = np.concatenate(([0.0], density, [0.0]))
    peaks, _ = find_peaks(padded, height=min_height * top, prominence=min_height * top,
                          distance=min_separation)
    return peaks - 1


@dataclass
class ObservableRecord:
    """Scalar observables at one instant (plus an optional marginal)."""

    t: float
    centroid_1: float
    centroid_2: float
    norm: float
    purity: float
    double_occ: float
    bound_fraction: float
    left_frac: float
    right_frac: float
    bound_centroid: float
    unbound_centroid: float
    marginal_1: np.ndarray | None = field(default=None, repr=False)

    def scalars(self) -> dict:
        d = asdict(self)
        d.pop("marginal_1")
        return d


def measure(state, reference: float, w_bound: int = DEFAULT_BOUND_WIDTH,
            with_marginal: bool = False) -> ObservableRecord:
    """Evaluate every recorded observable on one snapshot."""
    p = probability(state)
    c1, c2 = _centroid(p)
    marginal = p.sum(axis=1)
    left, right = branch_split(marginal, reference)
    b_c, u_c = _branch_centroids(p, w_bound)
    return ObservableRecord(
        t=float(getattr(state, "time", math.nan)),
        centroid_1=c1,
        centroid_2=c2,
        norm=float(p.sum()),
        purity=purity(state),
        double_occ=float(np.trace(p)),
        bound_fraction=_bound_fraction(p, w_bound),
        left_frac=left,
        right_frac=right,
        bound_centroid=b_c,
        unbound_centroid=u_c,
        marginal_1=marginal if with_marginal else None,
    )


class ObservableRecorder:
    """Sink for :func:`pairwalk.integrator.evolve`.

    Scalars are stored at every call; the particle-1 marginal only when at
    least ``marginal_interval`` has elapsed since the last stored snapshot.
    ``reference`` (for the left/right split) defaults to the first centroid.
    """

    def __init__(self, reference: float | None = None, w_bound: int = DEFAULT_BOUND_WIDTH,
                 marginal_interval: float | None = 1.0):
        self.reference = reference
        self.w_bound = w_bound
        self.marginal_interval = marginal_interval
        self.records: list[ObservableRecord] = []
        self.snapshots: list[tuple[float, np.ndarray]] = []
        self._next_marginal = None

    def record(self, state) -> ObservableRecord:
        if self.reference is None:
            self.reference = centroid(state)[0]
        t = state.time
        want = False
        if self.marginal_interval is not None:
            if self._next_marginal is None or t >= self._next_marginal - 1e-9:
                want = True
                base = t if self._next_marginal is None else self._next_marginal
                self._next_marginal = base + self.marginal_interval
        rec = measure(state, self.reference, self.w_bound, with_marginal=want)
        self.records.append(rec)
        if want:
            self.snapshots.append((t, rec.marginal_1))
        return rec

    __call__ = record

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.series("t")

    @property
    def last(self) -> ObservableRecord:
        return self.records[-1]


@dataclass(frozen=True)
class VelocityEstimate:
    """Least-squares drift of a centroid series over ``fit_window``."""

    impulse: float
    mean_velocity: float
    fit_window: tuple[float, float]
    fit_residual: float
    intercept: float = 0.0
    n_samples: int = 0


def mean_velocity(times, positions, window=None, impulse: float = math.nan,
                  pulse=None, min_samples: int = 10) -> VelocityEstimate:
    """Slope of a straight-line fit to ``positions(times)`` inside ``window``.

    ``window`` defaults to [tau + 5 rho, last time] when ``pulse`` is given,
    else the whole series. The residual is the RMS deviation from the line.

    Raises
    ------
    InsufficientSamples
        Fewer than ``min_samples`` points inside the window.
    BadSpec
        The window opens before tau + 5 rho of ``pulse``.
    """
    t = np.asarray(times, dtype=np.float64)
    x = np.asarray(positions, dtype=np.float64)
    if window is None:
        start = t.min() if pulse is None else _settled(pulse)
        window = (start, t.max())
    t_start, t_end = float(window[0]), float(window[1])
    if pulse is not None and t_start < _settled(pulse) - 1e-9:
        raise BadSpec(f"velocity window starts at {t_start:g}, before the pulse settles "
                      f"at {_settled(pulse):g}")
    sel = (t >= t_start - 1e-9) & (t <= t_end + 1e-9) & np.isfinite(x)
    if sel.sum() < min_samples:
        raise InsufficientSamples(
            f"{int(sel.sum())} samples in [{t_start:g}, {t_end:g}], need {min_samples}")
    ts, xs = t[sel], x[sel]
    design = np.column_stack([ts - ts.mean(), np.ones_like(ts)])
    coef, *_ = np.linalg.lstsq(design, xs, rcond=None)
    slope, offset = coef
    resid = xs - design @ coef
    return VelocityEstimate(
        impulse=float(impulse),
        mean_velocity=float(slope),
        fit_window=(t_start, t_end),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        intercept=float(offset - slope * ts.mean()),
        n_samples=int(sel.sum()),
    )


def _settled(pulse) -> float:
    return max(p.settled for p in as_pulses(pulse))
