"""One linearly sloped level crossing n flat levels.

The Hamiltonian is the (n+1) x (n+1) real symmetric arrowhead

    H(t) = [[t + a00, v_1 .. v_n],
            [v_1,     a_1        ],
            [ ...         ...    ],
            [v_n,            a_n ]]

whose instantaneous eigenpairs are available in closed form once the entries
are written in solvability coordinates (gamma, epsilon):

    v_i = gamma_0 gamma_i / (eps_0 - eps_i),   a_i = gamma_0^2 / (eps_i - eps_0),
    a00 = sum_i gamma_i^2 / (eps_i - eps_0).

Eigenvalues are E = gamma_0^2 / (x - eps_0) with x any root of the rational
secular equation  t = sum_k gamma_k^2 / (x - eps_k); the matching eigenvector
has components gamma_k / (x - eps_k).  Roots interlace the poles eps_k, with
one extra exterior root on the sign(t) side that escapes to infinity at t = 0.

The bow-tie variant (all diagonal slopes distinct, one common crossing point)
reuses the same entries with the flat diagonal replaced by (r_i + 1) t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import frozen_float_array, require_distinct
from .errors import DegenerateSpectralError, NoRealShiftError, NumericalError
from .propagator import AffineHamiltonian

__all__ = [
    "DOParams",
    "DOHamiltonianEntries",
    "SpectralFlow",
    "build_do_hamiltonian",
    "entries_from_gamma",
    "gamma_from_entries",
    "spectral_roots",
    "eigenpair",
    "bow_tie_entries",
    "do_sweep",
    "bow_tie_sweep",
    "track_spectral_flow",
]

#: roots closer than this (relative to the pole scale) to a decoupled pole
#: are treated as exactly frozen there
_FROZEN_TOL = 1e-9


@dataclass(frozen=True)
class DOParams:
    """Solvability coordinates: couplings gamma_0..gamma_n and pairwise
    distinct pole positions epsilon_0..epsilon_n.

    gamma_0 must be non-zero (it carries every coupling).  gamma_k = 0 for
    k >= 1 is accepted as a degenerate reduction: level k decouples, its pole
    hosts a frozen root, and reports flag the index via `decoupled_levels`.
    """

    gamma: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        gamma = frozen_float_array(self.gamma, "gamma")
        epsilon = frozen_float_array(self.epsilon, "epsilon")
        if gamma.shape != epsilon.shape or gamma.size < 2:
            raise ValueError("gamma and epsilon must have equal length >= 2")
        if gamma[0] == 0.0:
            raise DegenerateSpectralError("gamma_0 = 0 decouples the sloped level entirely")
        require_distinct(epsilon, "epsilon")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "epsilon", epsilon)

    @property
    def n(self) -> int:
        return self.gamma.size - 1

    @property
    def decoupled_levels(self) -> tuple:
        return tuple(int(k) for k in range(1, self.gamma.size) if self.gamma[k] == 0.0)


@dataclass(frozen=True)
class DOHamiltonianEntries:
    """Raw Hamiltonian entries: corner a00, flat diagonal a0[i], couplings v0[i].

    Entries produced by :func:`entries_from_gamma` satisfy
    a00 = sum v0^2 / a0 (see `consistency_defect`); entries produced by
    :func:`bow_tie_entries` generally do not, and may carry coincident
    diagonals (degenerate flat levels) -- see `min_diagonal_gap`.
    """

    a00: float
    a0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        a0 = frozen_float_array(self.a0, "a0")
        v0 = frozen_float_array(self.v0, "v0")
        if a0.shape != v0.shape or a0.size < 1:
            raise ValueError("a0 and v0 must have equal length >= 1")
        object.__setattr__(self, "a00", float(self.a00))
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "v0", v0)

    @property
    def n(self) -> int:
        return self.a0.size

    def consistency_defect(self) -> float:
        """|a00 - sum_i v0_i^2 / a0_i|; zero when a diagonal shift is not needed."""
        if np.any(self.a0 == 0.0):
            return np.inf
        return abs(self.a00 - float(np.sum(self.v0**2 / self.a0)))

    def min_diagonal_gap(self) -> float:
        if self.n < 2:
            return np.inf
        diff = np.abs(self.a0[:, None] - self.a0[None, :])
        return float(diff[~np.eye(self.n, dtype=bool)].min())


def build_do_hamiltonian(entries: DOHamiltonianEntries, t: float) -> np.ndarray:
    """(n+1) x (n+1) real symmetric matrix at sweep time t."""
    n = entries.n
    h = np.zeros((n + 1, n + 1))
    h[0, 0] = t + entries.a00
    h[0, 1:] = entries.v0
    h[1:, 0] = entries.v0
    h[np.arange(1, n + 1), np.arange(1, n + 1)] = entries.a0
    return h


def do_sweep(entries: DOHamiltonianEntries) -> AffineHamiltonian:
    """The sweep H(t) = A + t D with only the corner level sloped."""
    a = build_do_hamiltonian(entries, 0.0)
    d = np.zeros_like(a)
    d[0, 0] = 1.0
    return AffineHamiltonian(a, d)


def bow_tie_entries(r, base: DOHamiltonianEntries, t: float) -> DOHamiltonianEntries:
    """Entries with the flat diagonal replaced by (r_i + 1) t; couplings kept."""
    r = np.asarray(r, dtype=float)
    if r.shape != base.a0.shape:
        raise ValueError(f"expected {base.n} slopes, got shape {r.shape}")
    return DOHamiltonianEntries(a00=base.a00, a0=(r + 1.0) * t, v0=base.v0)


def bow_tie_sweep(r, base: DOHamiltonianEntries) -> AffineHamiltonian:
    """All-levels-sloped sweep: diagonal slopes (1, r_1 + 1, ..., r_n + 1)."""
    r = np.asarray(r, dtype=float)
    if r.shape != base.a0.shape:
        raise ValueError(f"expected {base.n} slopes, got shape {r.shape}")
    a = build_do_hamiltonian(DOHamiltonianEntries(base.a00, np.zeros(base.n), base.v0), 0.0)
    d = np.diag(np.concatenate([[1.0], r + 1.0]))
    return AffineHamiltonian(a, d)


def entries_from_gamma(p: DOParams) -> DOHamiltonianEntries:
    """Map solvability coordinates to Hamiltonian entries.

    The output satisfies a00 = sum v0^2/a0 identically and the sign identity
    v0_i / a0_i = -gamma_i / gamma_0.
    """
    g = p.gamma
    e = p.epsilon
    v0 = g[0] * g[1:] / (e[0] - e[1:])
    a0 = g[0] ** 2 / (e[1:] - e[0])
    a00 = float(np.sum(g[1:] ** 2 / (e[1:] - e[0])))
    return DOHamiltonianEntries(a00=a00, a0=a0, v0=v0)


def _shift_polynomial(entries: DOHamiltonianEntries) -> np.ndarray:
    """Coefficients (highest first) of the degree-(n+1) polynomial in the
    shift a whose roots make the shifted entries consistent:

        (a00 + a) prod_i (a0_i + a) - sum_i v0_i^2 prod_{j != i} (a0_j + a).
    """
    coeffs = np.atleast_1d(np.poly(-np.concatenate([[entries.a00], entries.a0])))
    for i in range(entries.n):
        rest = entries.v0[i] ** 2 * np.atleast_1d(np.poly(-np.delete(entries.a0, i)))
        coeffs = coeffs - np.pad(rest, (len(coeffs) - len(rest), 0))
    return coeffs


def gamma_from_entries(
    entries: DOHamiltonianEntries, shift_search: tuple = (-1e6, 1e6)
) -> tuple:
    """Invert :func:`entries_from_gamma` up to gauge, returning (params, shift).

    A constant `shift` is added to the whole diagonal so the consistency
    relation a00 = sum v0^2/a0 holds, then gamma and epsilon are read off in
    the gauge eps_0 = 0, gamma_0 = 1 (a one-parameter rescaling gauge makes
    gamma_0 a free choice; the Hamiltonian is unchanged).  The real shift of
    smallest magnitude inside `shift_search` is selected.
    """
    if np.any(entries.v0 == 0.0):
        raise DegenerateSpectralError("zero coupling: the inverse map needs v0_i != 0")
    coeffs = _shift_polynomial(entries)
    roots = np.roots(coeffs)
    scale = max(1.0, abs(entries.a00), float(np.abs(entries.a0).max()))
    real = np.sort(roots[np.abs(roots.imag) < 1e-8 * scale].real)
    lo, hi = min(shift_search), max(shift_search)
    real = real[(real >= lo) & (real <= hi)]
    # Newton polish on f(a) = (a00+a) - sum v^2/(a0+a); f is strictly increasing
    polished = []
    for a in real:
        for _ in range(4):
            den = entries.a0 + a
            if np.any(den == 0.0):
                break
            f = (entries.a00 + a) - np.sum(entries.v0**2 / den)
            fp = 1.0 + np.sum(entries.v0**2 / den**2)
            a = a - f / fp
        polished.append(a)
    polished = [a for a in polished if lo <= a <= hi and np.all(entries.a0 + a != 0.0)]
    if not polished:
        raise NoRealShiftError(
            f"no real diagonal shift in [{lo:g}, {hi:g}] makes the entries consistent"
        )
    shift = min(polished, key=abs)
    a0 = entries.a0 + shift
    require_distinct(a0, "shifted diagonal a0")
    epsilon = np.concatenate([[0.0], 1.0 / a0])
    gamma = np.concatenate([[1.0], -entries.v0 / a0])
    return DOParams(gamma=gamma, epsilon=epsilon), float(shift)


def _secular_polynomial(p: DOParams, t: float) -> np.ndarray:
    """Coefficients of t * prod_j (x - eps_j) - sum_i g_i^2 prod_{j != i} (x - eps_j)."""
    g2 = p.gamma**2
    e = p.epsilon
    coeffs = t * np.atleast_1d(np.poly(e))
    for i in range(e.size):
        rest = g2[i] * np.atleast_1d(np.poly(np.delete(e, i)))
        coeffs = coeffs - np.pad(rest, (len(coeffs) - len(rest), 0))
    return coeffs


def spectral_roots(p: DOParams, t: float) -> np.ndarray:
    """All n+1 roots of  t = sum_k gamma_k^2 / (x - eps_k), sorted ascending.

    At t = 0 the exterior root is at infinity; it is reported as +inf (the
    t -> 0+ limit).  Roots frozen at decoupled poles (gamma_k = 0) are exact.
    Companion-matrix roots are polished by Newton iteration on the rational
    form, which restores full precision near the poles.
    """
    e = p.epsilon
    g2 = p.gamma**2
    active = g2 > 0.0
    coeffs = _secular_polynomial(p, t)
    if t == 0.0:
        coeffs = coeffs[1:]  # degree drops by one; exterior root escapes
    roots = np.roots(coeffs).real.astype(float)

    scale = max(1.0, float(np.abs(e).max()))
    frozen_poles = e[~active]
    for _ in range(3):
        frozen = np.zeros(roots.shape, dtype=bool)
        for pole in frozen_poles:
            near = np.abs(roots - pole) < _FROZEN_TOL * scale
            roots[near] = pole
            frozen |= near
        live = ~frozen
        d = roots[live, None] - e[None, active]
        f = (g2[None, active] / d).sum(axis=1) - t
        fp = -(g2[None, active] / d**2).sum(axis=1)
        roots[live] = roots[live] - f / fp

    roots = np.sort(roots)
    if t == 0.0:
        roots = np.append(roots, np.inf)
    return roots


def eigenpair(p: DOParams, t: float, branch: int):
    """(eigenvalue, eigenvector) for one root branch at time t.

    Branches index the ascending-sorted output of :func:`spectral_roots`.
    The eigenvector components are gamma_k / (x - eps_k); at a root frozen on
    a decoupled pole the limit is the bare basis vector of that level, and at
    the t = 0 exterior root (x at infinity) the limit is the coupling vector
    gamma itself with eigenvalue exactly 0.
    """
    roots = spectral_roots(p, t)
    x = roots[branch]
    e = p.epsilon
    g = p.gamma
    if np.isinf(x):
        vec = g / np.linalg.norm(g)
        return 0.0, vec
    frozen = np.abs(x - e) < _FROZEN_TOL * max(1.0, float(np.abs(e).max()))
    if np.any(frozen):
        k = int(np.argmax(frozen))
        if g[k] != 0.0:
            raise DegenerateSpectralError(f"root collides with coupled pole eps_{k}")
        vec = np.zeros(e.size)
        vec[k] = 1.0
        return float(g[0] ** 2 / (x - e[0])), vec
    vec = g / (x - e)
    vec = vec / np.linalg.norm(vec)
    return float(g[0] ** 2 / (x - e[0])), vec


@dataclass(frozen=True)
class SpectralFlow:
    """Continuously labelled root branches over a time grid.

    branches[k, m] is branch m at t_grid[k]; energies holds the matching
    eigenvalues gamma_0^2 / (x - eps_0).  Branch labels record the spectral
    interval each branch occupies ("interval:i" below the (i+1)-th active
    pole, "exterior" outside the pole hull, "frozen:k" at a decoupled pole);
    columns are ordered by ascending root value at the first grid point.
    """

    t_grid: np.ndarray
    branches: np.ndarray
    energies: np.ndarray
    labels: tuple
    decoupled: tuple


def _classify_roots(roots: np.ndarray, active_poles: np.ndarray, frozen_poles: np.ndarray, t: float, scale: float):
    """Assign each root a stable label; raises NumericalError on failure."""
    labels = [None] * roots.size
    used = np.zeros(roots.size, dtype=bool)
    for pole in frozen_poles:
        hits = np.where(~used & (np.abs(roots - pole) <= _FROZEN_TOL * scale))[0]
        if hits.size != 1:
            raise NumericalError(f"expected one frozen root at pole {pole:g}, found {hits.size}")
        labels[hits[0]] = "frozen:%g" % pole
        used[hits[0]] = True
    boundary_tol = 1e-12 * scale
    for idx in np.where(~used)[0]:
        x = roots[idx]
        if np.isinf(x) or x > active_poles[-1] + boundary_tol or x < active_poles[0] - boundary_tol:
            label = "exterior"
        else:
            side = np.searchsorted(active_poles, x)
            if np.any(np.abs(x - active_poles) <= boundary_tol):
                raise NumericalError(f"root {x!r} ambiguous: within 1e-12 of an active pole")
            label = f"interval:{side - 1}"
        if label in labels:
            raise NumericalError(f"two roots claim label {label} at t={t!r}")
        labels[idx] = label
    if "exterior" not in labels:
        raise NumericalError(f"missing exterior root at t={t!r}")
    for i in range(active_poles.size - 1):
        if f"interval:{i}" not in labels:
            raise NumericalError(f"interlacing violated at t={t!r}: empty interval {i}")
    return labels


def track_spectral_flow(p: DOParams, t_grid) -> SpectralFlow:
    """Follow every root branch across a monotone time grid.

    Interlacing pins each interior branch to its spectral interval for all t,
    so branch identity is the interval label; the single exterior branch
    switches sides through +-infinity at t = 0.  On a classification failure
    the offending step is bisected up to 10 times before giving up.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or not np.all(np.diff(t_grid) > 0):
        raise ValueError("t_grid must be strictly increasing with >= 2 points")
    active = p.gamma**2 > 0.0
    active_poles = np.sort(p.epsilon[active])
    frozen_poles = p.epsilon[~active]
    scale = max(1.0, float(np.abs(p.epsilon).max()))

    def roots_and_labels(t, depth=0):
        roots = spectral_roots(p, t)
        try:
            labels = _classify_roots(roots, active_poles, frozen_poles, t, scale)
        except NumericalError:
            if depth >= 10:
                raise
            # re-polish from a nearby time to nudge the root off the boundary
            return roots_and_labels(np.nextafter(t, t + 1.0), depth + 1)
        return roots, labels

    first_roots, first_labels = roots_and_labels(t_grid[0])
    order = np.argsort(first_roots)
    column_labels = tuple(first_labels[i] for i in order)

    nb = first_roots.size
    branches = np.empty((t_grid.size, nb))
    for k, t in enumerate(t_grid):
        roots, labels = roots_and_labels(t)
        lookup = dict(zip(labels, roots))
        for m, lab in enumerate(column_labels):
            branches[k, m] = lookup[lab]

    with np.errstate(divide="ignore"):
        energies = p.gamma[0] ** 2 / (branches - p.epsilon[0])
    energies[np.isinf(branches)] = 0.0
    return SpectralFlow(
        t_grid=t_grid.copy(),
        branches=branches,
        energies=energies,
        labels=column_labels,
        decoupled=p.decoupled_levels,
    )
