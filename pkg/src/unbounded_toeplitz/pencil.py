"""The linear pencil L(lambda, z) and the essential spectrum.

    L(lambda, z) = [[zA - I, 0,         B         ],
                    [0,      alpha - zI, beta      ],
                    [zC,     gamma,      R0 - lambda I]]

``Omega(z) - lambda I`` is the Schur complement of the upper-left block, so
the essential spectrum is the set of ``lambda`` with ``det L(lambda, nu) = 0``
for some ``nu`` on the unit circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .config import RunConfig, resolve
from .errors import DegenerateDet, IllConditioned, PoleHit
from .ratsym import Realization, cluster_roots, eval_realization

__all__ = [
    "PencilL", "BivariatePoly", "NuSample", "EssCloud", "assemble_L",
    "detL_coeffs", "compute_E", "ess_points_at", "ess_spectrum_sweep",
    "relative_det",
]

_INF_TOL = 1e-10
_SINGULAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PencilL:
    """``L(lambda, z) = P0 + z P1 - lambda E_hat``."""

    m: int
    n_plus: int
    n_minus: int
    P0: np.ndarray
    P1: np.ndarray
    E_hat: np.ndarray

    @property
    def size(self) -> int:
        return self.n_plus + self.n_minus + self.m

    def __call__(self, lam: complex, z: complex) -> np.ndarray:
        return self.P0 + z * self.P1 - lam * self.E_hat

    def M(self, nu: complex) -> np.ndarray:
        return self.P0 + nu * self.P1

    def blocks(self, lam: complex, z: complex):
        """``(A_hat(z), B_hat, C_hat(z), D_hat_lambda)`` of the Schur split."""
        L = self(lam, z)
        k = self.n_plus + self.n_minus
        return L[:k, :k], L[:k, k:], L[k:, :k], L[k:, k:]


def assemble_L(real: Realization) -> PencilL:
    m, npl, nmi = real.m, real.n_plus, real.n_minus
    N = npl + nmi + m
    P0 = np.zeros((N, N), dtype=complex)
    P1 = np.zeros((N, N), dtype=complex)
    a, b = npl, npl + nmi
    P0[:a, :a] = -np.eye(npl)
    P0[:a, b:] = real.B
    P0[a:b, a:b] = real.alpha
    P0[a:b, b:] = real.beta
    P0[b:, a:b] = real.gamma
    P0[b:, b:] = real.R0
    P1[:a, :a] = real.A
    P1[a:b, a:b] = -np.eye(nmi)
    P1[b:, :a] = real.C
    E = np.zeros((N, N), dtype=complex)
    E[b:, b:] = np.eye(m)
    for X in (P0, P1, E):
        X.flags.writeable = False
    return PencilL(m, npl, nmi, P0, P1, E)


def relative_det(L: np.ndarray) -> float:
    """``|det L|`` divided by the Hadamard bound (product of column norms)."""
    norms = np.linalg.norm(L, axis=0)
    if np.any(norms == 0):
        return 0.0
    sign, logdet = np.linalg.slogdet(L)
    if sign == 0:
        return 0.0
    return float(np.exp(logdet - np.sum(np.log(norms))))


@dataclass(frozen=True, eq=False)
class BivariatePoly:
    """``sum_{k,l} coeffs[k, l] lambda^k z^l``."""

    coeffs: np.ndarray

    def __call__(self, lam: complex, z: complex) -> complex:
        c = self.coeffs
        lp = lam ** np.arange(c.shape[0])
        zp = z ** np.arange(c.shape[1])
        return complex(lp @ c @ zp)

    def d(self, l: int) -> np.ndarray:
        """Ascending coefficients in lambda of the ``z^l`` coefficient."""
        return self.coeffs[:, l]


def _vandermonde_solve(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    V = np.vander(nodes, increasing=True)
    if np.linalg.cond(V) > 1e12:
        raise IllConditioned("Vandermonde interpolation is ill-conditioned")
    return np.linalg.solve(V, values)


def detL_coeffs(pl: PencilL) -> BivariatePoly:
    """Coefficients of ``det L(lambda, z)`` by tensor-grid interpolation.

    Nodes are roots of unity scaled by 1.37, ``m + 1`` in lambda and
    ``n_plus + n_minus + 1`` in z.
    """
    dl, dz = pl.m + 1, pl.n_plus + pl.n_minus + 1
    lam_nodes = 1.37 * np.exp(2j * np.pi * np.arange(dl) / dl)
    z_nodes = 1.37 * np.exp(2j * np.pi * np.arange(dz) / dz)
    vals = np.array([[np.linalg.det(pl(lam, z)) for z in z_nodes] for lam in lam_nodes])
    tmp = _vandermonde_solve(lam_nodes, vals)          # coefficients in lambda, values in z
    coeffs = _vandermonde_solve(z_nodes, tmp.T).T
    return BivariatePoly(coeffs)


def _poly_roots(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    big = np.max(np.abs(c))
    if big == 0:
        return np.zeros(0, dtype=complex)
    keep = np.flatnonzero(np.abs(c) > 1e-13 * big)
    c = c[: keep[-1] + 1]
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(c[::-1])


def compute_E(bp: BivariatePoly, tol: float = 1e-8) -> list[complex]:
    """The exceptional set: common roots in lambda of every ``z^l`` coefficient.

    Raises
    ------
    DegenerateDet
        If every coefficient polynomial vanishes numerically.
    """
    c = bp.coeffs
    col_norms = np.linalg.norm(c, axis=0)
    if np.all(col_norms <= 1e-14 * max(1.0, np.max(np.abs(c)))):
        raise DegenerateDet("det L vanishes identically")
    l_star = int(np.argmax(col_norms))
    cand = _poly_roots(c[:, l_star])
    hits = []
    for lam in cand:
        powers = np.abs(lam) ** np.arange(c.shape[0])
        scale = np.max(np.abs(c).T @ powers)
        vals = np.abs(np.power(lam, np.arange(c.shape[0])) @ c)
        if np.max(vals) < tol * scale:
            hits.append(lam)
    if not hits:
        return []
    out = [lam for lam, _ in cluster_roots(np.array(hits), 1e-6)]
    return out[: bp.coeffs.shape[0] - 1]


@dataclass(frozen=True, eq=False)
class NuSample:
    """Essential-spectrum candidates at one point ``nu`` of the circle."""

    nu: complex
    points: np.ndarray
    pencil_points: np.ndarray
    singular: bool
    from_symbol: bool


def _probes(pl: PencilL, real: Realization, rng_seed: int = 12345) -> np.ndarray:
    count = 5 if pl.m <= 3 else pl.m + 2
    rng = np.random.default_rng(rng_seed)
    radius = 1.0 + np.linalg.norm(real.R0, 2)
    return radius * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def _finite_gen_eigs(M: np.ndarray, E: np.ndarray) -> np.ndarray:
    w = sla.eigvals(M, E, homogeneous_eigvals=True)
    a, b = w[0], w[1]
    mag = np.hypot(np.abs(a), np.abs(b))
    finite = np.abs(b) > _INF_TOL * mag
    return a[finite] / b[finite]


def ess_points_at(pl: PencilL, real: Realization, nu: complex,
                  eig_tol: float = 1e-9, check_singular: bool = True) -> NuSample:
    """Points ``lambda`` with ``det L(lambda, nu) = 0``.

    Off the spectrum of ``alpha`` the eigenvalues of ``Omega(nu)`` are
    returned (checked against the pencil); on it the finite generalized
    eigenvalues of ``(M(nu), E_hat)`` are used.  If ``det L(., nu)`` vanishes
    identically the sample is flagged ``singular`` and carries no points.
    """
    if abs(abs(nu) - 1.0) > 1e-12:
        raise ValueError(f"nu={nu} is not on the unit circle")
    M = pl.M(nu)
    if check_singular and all(relative_det(M - lam * pl.E_hat) < _SINGULAR_TOL for lam in _probes(pl, real)):
        empty = np.zeros(0, dtype=complex)
        return NuSample(nu, empty, empty, True, False)
    near_alpha = real.n_minus > 0 and np.min(
        np.abs(np.linalg.eigvals(real.alpha) - nu)) <= eig_tol
    if not near_alpha:
        try:
            pts = np.linalg.eigvals(eval_realization(real, nu))
            pencil_pts = _finite_gen_eigs(M, pl.E_hat) if check_singular else pts
            return NuSample(nu, pts, pencil_pts, False, True)
        except PoleHit:
            pass
    pencil_pts = _finite_gen_eigs(M, pl.E_hat)
    return NuSample(nu, pencil_pts, pencil_pts, False, False)


@dataclass(frozen=True, eq=False)
class EssCloud:
    thetas: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    whole_plane: bool
    degenerate_nus: tuple
    e_set: tuple = ()

    @property
    def points(self) -> list[tuple[float, complex]]:
        return list(zip(self.theta.tolist(), self.lam.tolist()))

    def finite(self) -> np.ndarray:
        return self.lam[np.isfinite(self.lam)]


def circle_eigen_angles(real: Realization, eps_circle: float = 1e-9) -> list[float]:
    if real.n_minus == 0:
        return []
    eigs = np.linalg.eigvals(real.alpha)
    return sorted(float(np.angle(e) % (2 * np.pi))
                  for e in eigs if abs(abs(e) - 1.0) <= max(eps_circle, 1e-7))


def ess_spectrum_sweep(real: Realization, n_theta: int = 720,
                       cfg: RunConfig | None = None) -> EssCloud:
    """Sample the essential spectrum on ``theta_k = 2 pi k / n_theta``.

    Angles of on-circle eigenvalues of ``alpha`` are added to the grid and
    points of the exceptional set are appended with ``theta = nan``.
    """
    cfg = resolve(cfg)
    if n_theta < 8:
        raise ValueError("n_theta must be at least 8")
    pl = assemble_L(real)
    grid = 2 * np.pi * np.arange(n_theta) / n_theta
    extra = circle_eigen_angles(real, cfg.eps_circle)
    thetas = np.unique(np.concatenate([grid, extra]))
    th_out, lam_out, degenerate = [], [], []
    for th in thetas:
        nu = np.exp(1j * th)
        s = ess_points_at(pl, real, nu)
        if s.singular:
            degenerate.append(complex(nu))
            continue
        th_out.extend([th] * s.points.size)
        lam_out.extend(s.points.tolist())
    e_set = tuple(compute_E(detL_coeffs(pl)))
    for lam in e_set:
        th_out.append(np.nan)
        lam_out.append(lam)
    return EssCloud(thetas=thetas, theta=np.array(th_out, dtype=float),
                    lam=np.array(lam_out, dtype=complex),
                    whole_plane=bool(degenerate), degenerate_nus=tuple(degenerate),
                    e_set=e_set)
