"""Rational matrix symbols and their state-space realizations.

A symbol is an m x m grid of scalar rational functions, each stored as
ascending coefficient arrays.  :func:`split_and_realize` separates the part
with poles in the closed unit disc from the part analytic there and returns
the realization

    Omega(z) = R0 + z C (I - z A)^{-1} B + gamma (z I - alpha)^{-1} beta

with ``A`` stable and ``alpha`` semi-stable, both triples minimal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from . import hokalman
from .config import RunConfig, resolve
from .errors import IllConditioned, PoleHit, RankUndetermined

__all__ = [
    "RationalScalar", "RationalMatrix", "PoleSet", "Realization",
    "PoleTerm", "PartialFraction", "eval_rational_matrix",
    "partial_fractions", "classify_poles", "split_and_realize",
    "eval_realization", "cluster_roots",
]

_POLE_HIT_TOL = 1e-12
_COND_LIMIT = 1e12


def _frozen(a, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1]


def cluster_roots(roots, tol: float) -> list[tuple[complex, int]]:
    """Group numerically coincident roots.

    Roots closer than ``tol * max(1, |r|)`` to a running cluster mean are
    merged; the cluster is reported by its mean and its size.
    """
    clusters: list[list[complex]] = []
    for r in sorted(np.atleast_1d(roots), key=lambda x: (abs(x), np.angle(x))):
        for cl in clusters:
            c = np.mean(cl)
            if abs(r - c) <= tol * max(1.0, abs(c)):
                cl.append(r)
                break
        else:
            clusters.append([r])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


@dataclass(frozen=True, eq=False)
class RationalScalar:
    """``num(z) / den(z)`` with ascending coefficients.

    ``den_factored`` optionally gives the denominator exactly as
    ``(lead, [(pole, multiplicity), ...])``; poles are then read from it
    instead of being computed as companion eigenvalues.
    """

    num: np.ndarray
    den: np.ndarray
    den_factored: tuple | None = None
    cluster_tol: float = 1e-7

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if not np.any(den):
            raise ValueError("denominator is the zero polynomial")
        object.__setattr__(self, "num", _frozen(num))
        object.__setattr__(self, "den", _frozen(den))
        if self.den_factored is not None:
            lead, poles = self.den_factored
            poles = tuple((complex(p), int(k)) for p, k in poles)
            if any(k < 1 for _, k in poles):
                raise ValueError("pole multiplicities must be positive")
            object.__setattr__(self, "den_factored", (complex(lead), poles))
            expanded = _expand_factored(complex(lead), poles)
            if expanded.size != den.size or not np.allclose(
                    expanded, den, rtol=1e-10,
                    atol=1e-10 * np.max(np.abs(den))):
                raise ValueError("den_factored does not expand to den")
        if num.size > 1 and self.poles:
            zeros = np.roots(num[::-1])
            for p, _ in self.poles:
                if np.any(np.abs(zeros - p) <= self.cluster_tol * max(1.0, abs(p))):
                    raise ValueError(
                        f"numerator and denominator share the root {p:.6g}")

    @cached_property
    def poles(self) -> tuple[tuple[complex, int], ...]:
        if self.den_factored is not None:
            return self.den_factored[1]
        if self.den.size == 1:
            return ()
        return tuple(cluster_roots(np.roots(self.den[::-1]), self.cluster_tol))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.num)

    def __call__(self, z: complex) -> complex:
        for p, _ in self.poles:
            if abs(z - p) <= _POLE_HIT_TOL * max(1.0, abs(p)):
                raise PoleHit(f"z={z} is a pole")
        d = P.polyval(z, self.den)
        if d == 0:
            raise PoleHit(f"z={z} is a root of the denominator")
        return complex(P.polyval(z, self.num) / d)


def _expand_factored(lead: complex, poles) -> np.ndarray:
    c = np.array([lead], dtype=complex)
    for p, k in poles:
        for _ in range(k):
            c = P.polymul(c, [-p, 1.0])
    return _trim(c)


@dataclass(frozen=True, eq=False)
class RationalMatrix:
    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("symbol must be a nonempty square grid")
        for r in rows:
            for e in r:
                if not isinstance(e, RationalScalar):
                    raise TypeError("entries must be RationalScalar")
        object.__setattr__(self, "entries", rows)

    @property
    def m(self) -> int:
        return len(self.entries)

    @classmethod
    def from_coeffs(cls, nums, dens, cluster_tol: float = 1e-7) -> "RationalMatrix":
        """Build from nested lists of ascending numerator/denominator coefficients."""
        return cls(tuple(
            tuple(RationalScalar(n, d, cluster_tol=cluster_tol) for n, d in zip(nr, dr))
            for nr, dr in zip(nums, dens)))

    @classmethod
    def constant(cls, R0) -> "RationalMatrix":
        R0 = np.atleast_2d(np.asarray(R0, dtype=complex))
        return cls(tuple(tuple(RationalScalar([v], [1.0]) for v in row) for row in R0))

    def __call__(self, z: complex) -> np.ndarray:
        return eval_rational_matrix(self, z)


def eval_rational_matrix(sym: RationalMatrix, z: complex) -> np.ndarray:
    """Evaluate the symbol entrywise; raises :class:`PoleHit` at a pole."""
    return np.array([[e(z) for e in row] for row in sym.entries], dtype=complex)


@dataclass(frozen=True)
class PoleTerm:
    pole: complex
    order: int
    residue: np.ndarray


@dataclass(frozen=True, eq=False)
class PartialFraction:
    """``sum_j poly_part[j] z^j + sum R (z - pole)^{-order}``."""

    m: int
    poly_part: tuple
    terms: tuple

    def __call__(self, z: complex) -> np.ndarray:
        out = np.zeros((self.m, self.m), dtype=complex)
        for j, c in enumerate(self.poly_part):
            out += c * z ** j
        for t in self.terms:
            out += t.residue * (z - t.pole) ** (-t.order)
        return out

    def poles(self) -> list[tuple[complex, int]]:
        """Distinct poles with their highest order."""
        best: dict[complex, int] = {}
        for t in self.terms:
            best[t.pole] = max(best.get(t.pole, 0), t.order)
        return list(best.items())


@dataclass(frozen=True)
class PoleSet:
    inside: tuple
    on_circle: tuple
    outside: tuple
    eps_circle: float


def _taylor_shift(c: np.ndarray, p: complex) -> np.ndarray:
    """Coefficients of c(z) in powers of (z - p), by repeated synthetic division."""
    c = np.array(c, dtype=complex)[::-1]  # descending
    n = c.size
    out = np.empty(n, dtype=complex)
    for k in range(n):
        for i in range(1, n - k):
            c[i] += p * c[i - 1]
        out[k] = c[n - k - 1]
    return out


def _entry_terms(e: RationalScalar, clusters_tol: float):
    """Polynomial part and principal parts of one scalar entry."""
    if e.is_zero:
        return np.zeros(1, dtype=complex), []
    quot, rem = P.polydiv(e.num, e.den)
    quot = _trim(quot)
    terms = []
    if e.den.size == 1:
        return quot, terms
    lead = e.den[-1] if e.den_factored is None else e.den_factored[0]
    poles = e.poles
    for idx, (p, k) in enumerate(poles):
        g = np.array([lead], dtype=complex)
        for jdx, (q, kq) in enumerate(poles):
            if jdx != idx:
                for _ in range(kq):
                    g = P.polymul(g, [-q, 1.0])
        gs = _taylor_shift(g, p)
        rs = _taylor_shift(_trim(rem), p)
        scale = np.max(np.abs(gs))
        if abs(gs[0]) < scale / _COND_LIMIT:
            raise IllConditioned(f"poles too close to {p:.6g} for a residue solve")
        rs = np.concatenate([rs, np.zeros(max(0, k - rs.size), dtype=complex)])
        gs = np.concatenate([gs, np.zeros(max(0, k - gs.size), dtype=complex)])
        h = np.zeros(k, dtype=complex)
        for j in range(k):
            acc = rs[j] - sum(gs[i] * h[j - i] for i in range(1, j + 1))
            h[j] = acc / gs[0]
        # h[j] multiplies (z - p)^{-(k - j)}
        for j in range(k):
            terms.append((p, k - j, h[j]))
    return quot, terms


def partial_fractions(sym: RationalMatrix, cfg: RunConfig | None = None) -> PartialFraction:
    """Entrywise residue decomposition merged into matrix-valued terms.

    Poles from different entries that agree within ``cluster_tol`` are
    identified; the matrix residue of order ``k`` at such a pole collects the
    scalar residues of every entry.
    """
    cfg = resolve(cfg)
    m = sym.m
    per_entry = {}
    all_poles = []
    for i, row in enumerate(sym.entries):
        for j, e in enumerate(row):
            quot, terms = _entry_terms(e, cfg.cluster_tol)
            per_entry[i, j] = (quot, terms)
            all_poles.extend(p for p, _, _ in terms)
    centers = [c for c, _ in cluster_roots(all_poles, cfg.cluster_tol)] if all_poles else []

    def center_of(p):
        return min(centers, key=lambda c: abs(c - p))

    deg = max(q.size for q, _ in per_entry.values())
    poly = np.zeros((deg, m, m), dtype=complex)
    res: dict[tuple[complex, int], np.ndarray] = {}
    for (i, j), (quot, terms) in per_entry.items():
        poly[: quot.size, i, j] = quot
        for p, k, r in terms:
            key = (center_of(p), k)
            res.setdefault(key, np.zeros((m, m), dtype=complex))[i, j] += r
    poly_part = tuple(_frozen(c) for c in poly)
    if len(poly_part) > 1 and not np.any(poly_part[-1]):
        poly_part = poly_part[:-1]
    terms = tuple(PoleTerm(p, k, _frozen(r)) for (p, k), r in
                  sorted(res.items(), key=lambda kv: (abs(kv[0][0]), np.angle(kv[0][0]), kv[0][1])))
    return PartialFraction(m=m, poly_part=poly_part, terms=terms)


def classify_poles(pf: PartialFraction, eps_circle: float = 1e-9) -> PoleSet:
    """Split poles into inside / on / outside the unit circle.

    Poles with ``||p| - 1| <= eps_circle`` count as on the circle; their
    values are not moved.
    """
    inside, on, outside = [], [], []
    for p, k in pf.poles():
        r = abs(p)
        if abs(r - 1.0) <= eps_circle:
            on.append((p, k))
        elif r < 1.0:
            inside.append((p, k))
        else:
            outside.append((p, k))
    return PoleSet(tuple(inside), tuple(on), tuple(outside), eps_circle)


@dataclass(frozen=True, eq=False)
class Realization:
    """Septuple ``(R0, A, B, C, alpha, beta, gamma)``; empty blocks allowed."""

    R0: np.ndarray
    A: np.ndarray = None
    B: np.ndarray = None
    C: np.ndarray = None
    alpha: np.ndarray = None
    beta: np.ndarray = None
    gamma: np.ndarray = None

    def __post_init__(self):
        R0 = np.atleast_2d(np.asarray(self.R0, dtype=complex))
        m = R0.shape[0]
        if R0.shape != (m, m):
            raise ValueError("R0 must be square")

        def block(x, shape_if_none):
            if x is None:
                return np.zeros(shape_if_none, dtype=complex)
            x = np.asarray(x, dtype=complex)
            if x.ndim == 0:
                x = x.reshape(1, 1)
            return x

        A = block(self.A, (0, 0))
        n_p = A.shape[0]
        B = block(self.B, (n_p, m)).reshape(n_p, m)
        C = block(self.C, (m, n_p)).reshape(m, n_p)
        al = block(self.alpha, (0, 0))
        n_m = al.shape[0]
        be = block(self.beta, (n_m, m)).reshape(n_m, m)
        ga = block(self.gamma, (m, n_m)).reshape(m, n_m)
        if A.shape != (n_p, n_p) or al.shape != (n_m, n_m):
            raise ValueError("A and alpha must be square")
        for name, val in zip(("R0", "A", "B", "C", "alpha", "beta", "gamma"),
                             (R0, A, B, C, al, be, ga)):
            object.__setattr__(self, name, _frozen(val, 2))

    @property
    def m(self) -> int:
        return self.R0.shape[0]

    @property
    def n_plus(self) -> int:
        return self.A.shape[0]

    @property
    def n_minus(self) -> int:
        return self.alpha.shape[0]

    def __call__(self, z: complex) -> np.ndarray:
        return eval_realization(self, z)

    def spectral_radius_A(self) -> float:
        return _spectral_radius(self.A)

    def is_stable(self) -> bool:
        return _spectral_radius(self.A) < 1.0

    def is_semistable(self, eps_circle: float = 1e-9) -> bool:
        return _spectral_radius(self.alpha) <= 1.0 + eps_circle

    def is_minimal(self, rank_tol: float = 1e-9) -> bool:
        return (
            _numerical_rank(_ctrb(self.A, self.B), rank_tol) == self.n_plus
            and _numerical_rank(_obsv(self.C, self.A), rank_tol) == self.n_plus
            and _numerical_rank(_ctrb(self.alpha, self.beta), rank_tol) == self.n_minus
            and _numerical_rank(_obsv(self.gamma, self.alpha), rank_tol) == self.n_minus)


def _spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _numerical_rank(M: np.ndarray, rank_tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def _ctrb(F, G):
    n = F.shape[0]
    cols, X = [], G
    for _ in range(n):
        cols.append(X)
        X = F @ X
    return np.hstack(cols) if cols else np.zeros((0, G.shape[1]))


def _obsv(H, F):
    n = F.shape[0]
    rows, X = [], H
    for _ in range(n):
        rows.append(X)
        X = X @ F
    return np.vstack(rows) if rows else np.zeros((H.shape[0], 0))


def _checked_solve(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if M.shape[0] == 0:
        return np.zeros((0, rhs.shape[1]), dtype=complex)
    if np.linalg.cond(M) > _COND_LIMIT:
        raise PoleHit(f"{what} is numerically singular")
    return np.linalg.solve(M, rhs)


def eval_realization(real: Realization, z: complex) -> np.ndarray:
    """``R0 + z C (I - zA)^{-1} B + gamma (zI - alpha)^{-1} beta``."""
    out = real.R0.copy()
    if real.n_plus:
        X = _checked_solve(np.eye(real.n_plus) - z * real.A, real.B, "I - zA")
        out += z * real.C @ X
    if real.n_minus:
        X = _checked_solve(z * np.eye(real.n_minus) - real.alpha, real.beta, "zI - alpha")
        out += real.gamma @ X
    return out


def _orth(M: np.ndarray, rank_tol: float, scale: float) -> np.ndarray:
    """Orthonormal basis of the range of ``M``; singular values are judged
    against ``scale`` and must not straddle the threshold."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    rel = sv / scale
    if np.any((rel > rank_tol / 10) & (rel < rank_tol * 10)):
        raise RankUndetermined("singular values straddle rank_tol in a principal part")
    return U[:, rel > rank_tol]


def _principal_part_triple(p: complex, res: dict, m: int, rank_tol: float):
    """Minimal ``(gamma, alpha, beta)`` for ``sum_k res[k] (z - p)^{-k}``.

    ``alpha = p I + N`` with ``N`` exactly strictly upper triangular, so the
    eigenvalue ``p`` and its Jordan structure survive rounding.  Built from the
    observable block-shift realization restricted to its reachable subspace,
    in an orthonormal basis adapted to the flag ``ker S^i``.
    """
    k = max(res)
    R = [np.asarray(res.get(j, np.zeros((m, m))), dtype=complex) for j in range(1, k + 1)]
    S = np.kron(np.eye(k, k=1), np.eye(m))
    G0 = np.vstack(R)
    scale = max(1e-300, max(np.linalg.norm(r, 2) for r in R))
    K = np.hstack([np.linalg.matrix_power(S, j) @ G0 for j in range(k)])
    V = _orth(K, rank_tol, scale)
    basis = np.zeros((k * m, 0), dtype=complex)
    levels: list[int] = []
    for i in range(1, k + 1):
        tail = V[i * m:]
        if tail.shape[0]:
            _, sv, Wh = np.linalg.svd(tail)
            sv = np.concatenate([sv, np.zeros(Wh.shape[0] - sv.size)])
            Wi = V @ Wh[sv <= 1e-10].conj().T
        else:
            Wi = V
        Wi = Wi - basis @ (basis.conj().T @ Wi)
        new = _orth(Wi, 1e-8, 1.0) if Wi.size else Wi
        basis = np.hstack([basis, new])
        levels += [i] * new.shape[1]
    if basis.shape[1] != V.shape[1]:
        raise RankUndetermined("could not split the principal part by nilpotency level")
    N = basis.conj().T @ S @ basis
    lv = np.array(levels)
    lower = lv[:, None] >= lv[None, :]
    if np.any(np.abs(N[lower]) > 1e-8):
        raise RankUndetermined("principal part realization is not nilpotent")
    N[lower] = 0.0
    gamma = basis[:m]
    beta = basis.conj().T @ G0
    X = beta
    for j in range(k):
        if np.max(np.abs(gamma @ X - R[j])) > 1e-10 * (1 + scale):
            raise RankUndetermined("principal part realization does not reproduce residues")
        X = N @ X
    return gamma, p * np.eye(N.shape[0]) + N, beta


def _minus_triple(minus_terms: dict, m: int, rank_tol: float):
    """Direct sum over distinct poles; minimal because the poles differ."""
    parts = [_principal_part_triple(p, res, m, rank_tol) for p, res in minus_terms.items()]
    parts = [t for t in parts if t[1].shape[0]]
    if not parts:
        return (np.zeros((0, 0), dtype=complex), np.zeros((0, m), dtype=complex),
                np.zeros((m, 0), dtype=complex))
    from scipy.linalg import block_diag
    return (block_diag(*[t[1] for t in parts]), np.vstack([t[2] for t in parts]),
            np.hstack([t[0] for t in parts]))


def split_and_realize(sym: RationalMatrix, cfg: RunConfig | None = None) -> Realization:
    """Minimal realization with ``A`` stable and ``alpha`` semi-stable.

    Poles in the closed disc (after snapping to the circle) go to the
    ``alpha`` part, realized pole by pole so that ``alpha`` carries each pole
    exactly with its Jordan structure.  The remainder is expanded in Taylor
    coefficients at 0 and realized by Ho-Kalman.
    """
    cfg = resolve(cfg)
    m = sym.m
    pf = partial_fractions(sym, cfg)
    ps = classify_poles(pf, cfg.eps_circle)
    disc = {p for p, _ in ps.inside + ps.on_circle}

    minus_terms: dict[complex, dict[int, np.ndarray]] = {}
    plus_terms = []
    for t in pf.terms:
        if t.pole in disc:
            minus_terms.setdefault(t.pole, {})[t.order] = np.asarray(t.residue)
        else:
            plus_terms.append(t)

    # anti-analytic part, pole by pole
    alpha, beta, gamma = _minus_triple(minus_terms, m, cfg.rank_tol)

    # analytic part: Taylor coefficients at 0
    deg = len(pf.poly_part) - 1
    n_bound = m * (deg + sum(t.order for t in plus_terms))
    L = max(2 * n_bound + 2, deg + 1)
    taylor = np.zeros((L + 1, m, m), dtype=complex)
    for j, c in enumerate(pf.poly_part):
        taylor[j] += c
    for t in plus_terms:
        p, k = t.pole, t.order
        base = t.residue * (-p) ** (-k)
        for j in range(L + 1):
            taylor[j] += base * comb(j + k - 1, k - 1) * p ** (-j)
    A, B, C = hokalman.minimal_from_coeffs(list(taylor[1:]), m, cfg.rank_tol)
    return Realization(R0=taylor[0], A=A, B=B, C=C, alpha=alpha, beta=beta, gamma=gamma)
