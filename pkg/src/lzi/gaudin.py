"""Commuting one-parameter families of spin operators and flat-connection checks.

For distinct spectral parameters w_l, the exchange operators

    G_l = sum_{m != l}  S_l . S_m / (w_l - w_m)

commute pairwise, and so do their extensions R_l = lam * Sz_l + G_l.  The
R_l also satisfy a zero-curvature identity in the w parameters,

    d_{w_l} R_m - d_{w_m} R_l - [R_l, R_m] / level_shift = 0,

which :func:`kz_flatness_residual` evaluates with analytic derivatives (the
only w dependence is through 1/(w_l - w_m) factors, so no step size enters).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._util import require_distinct
from .errors import SameSiteError
from .spin import SiteSystem, commutator, dot_coupling, embed, max_abs, spin_generators

__all__ = [
    "SpectralConfig",
    "CommutativityReport",
    "gaudin_integral",
    "richardson_integral",
    "richardson_derivative",
    "gaudin_hamiltonian",
    "verify_commuting",
    "kz_flatness_residual",
]


@dataclass(frozen=True)
class SpectralConfig:
    """Spectral parameters w (one per site, pairwise distinct), the Sz
    coefficient `lam`, and the non-zero connection normalisation `level_shift`.

    Complex w are accepted (the operators are then non-Hermitian); Hermiticity
    holds for real configurations only.
    """

    w: tuple
    lam: float = 0.0
    level_shift: float = 3.0

    def __post_init__(self):
        w = tuple(complex(x) for x in self.w)
        if not w:
            raise ValueError("need at least one spectral parameter")
        require_distinct(np.asarray(w), "spectral parameters w")
        if self.level_shift == 0:
            raise ValueError("level_shift must be non-zero")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "level_shift", float(self.level_shift))

    @property
    def n_sites(self) -> int:
        return len(self.w)

    @property
    def is_real(self) -> bool:
        return all(x.imag == 0.0 for x in self.w)


def _weights(cfg: SpectralConfig) -> np.ndarray:
    w = np.asarray(cfg.w)
    return w.real if cfg.is_real else w


def _check_site(cfg: SpectralConfig, system: SiteSystem, site: int) -> None:
    if cfg.n_sites != system.n_sites:
        raise ValueError(
            f"config has {cfg.n_sites} parameters but system has {system.n_sites} sites"
        )
    if not 0 <= site < system.n_sites:
        raise IndexError(f"site {site} outside 0..{system.n_sites - 1}")


def gaudin_integral(site: int, cfg: SpectralConfig, system: SiteSystem) -> np.ndarray:
    """G_site = sum over other sites of S(site).S(other) / (w_site - w_other)."""
    _check_site(cfg, system, site)
    w = _weights(cfg)
    dim = system.total_dim
    out = np.zeros((dim, dim), dtype=complex)
    for other in range(system.n_sites):
        if other == site:
            continue
        out += dot_coupling(site, other, system) / (w[site] - w[other])
    return out


def richardson_integral(site: int, cfg: SpectralConfig, system: SiteSystem) -> np.ndarray:
    """R_site = lam * Sz(site) + G_site; reduces to G_site bitwise at lam = 0."""
    g = gaudin_integral(site, cfg, system)
    if cfg.lam == 0.0:
        return g
    sz = spin_generators(system.reps[site])[2]
    return cfg.lam * embed(sz, site, system) + g


def richardson_derivative(
    site: int, cfg: SpectralConfig, system: SiteSystem, wrt: int
) -> np.ndarray:
    """Analytic d R_site / d w_wrt.

    Only the 1/(w_site - w_other) factors depend on w, so the derivative is a
    sum of exchange operators with squared-denominator weights.
    """
    _check_site(cfg, system, site)
    _check_site(cfg, system, wrt)
    w = _weights(cfg)
    if wrt == site:
        dim = system.total_dim
        out = np.zeros((dim, dim), dtype=complex)
        for other in range(system.n_sites):
            if other == site:
                continue
            out -= dot_coupling(site, other, system) / (w[site] - w[other]) ** 2
        return out
    return dot_coupling(site, wrt, system) / (w[site] - w[wrt]) ** 2


def gaudin_hamiltonian(cfg: SpectralConfig, system: SiteSystem) -> np.ndarray:
    """2 * sum_l w_l G_l; commutes with every G_l."""
    w = _weights(cfg)
    dim = system.total_dim
    out = np.zeros((dim, dim), dtype=complex)
    for site in range(system.n_sites):
        out += 2.0 * w[site] * gaudin_integral(site, cfg, system)
    return out


@dataclass(frozen=True)
class CommutativityReport:
    """Worst pairwise commutator defect of a family of operators."""

    n_operators: int
    max_defect: float
    worst_pair: tuple
    tolerance: float
    passed: bool


def verify_commuting(ops, tol: float = 1e-12) -> CommutativityReport:
    """Max pairwise commutator norm of `ops`, compared against `tol`."""
    ops = [np.asarray(op) for op in ops]
    worst = 0.0
    worst_pair = (0, 0)
    for i, j in itertools.combinations(range(len(ops)), 2):
        defect = max_abs(commutator(ops[i], ops[j]))
        if defect > worst:
            worst, worst_pair = defect, (i, j)
    return CommutativityReport(
        n_operators=len(ops),
        max_defect=worst,
        worst_pair=worst_pair,
        tolerance=float(tol),
        passed=worst < tol,
    )


def kz_flatness_residual(
    cfg: SpectralConfig, system: SiteSystem, site_a: int, site_b: int
) -> float:
    """Zero-curvature residual for the pair (site_a, site_b):

    || d_{w_a} R_b - d_{w_b} R_a - [R_a, R_b] / level_shift ||
    """
    if site_a == site_b:
        raise SameSiteError("flatness residual needs two distinct sites")
    d_ab = richardson_derivative(site_b, cfg, system, wrt=site_a)
    d_ba = richardson_derivative(site_a, cfg, system, wrt=site_b)
    r_a = richardson_integral(site_a, cfg, system)
    r_b = richardson_integral(site_b, cfg, system)
    return max_abs(d_ab - d_ba - commutator(r_a, r_b) / cfg.level_shift)
