"""Block Toeplitz coefficients, Hankel ranks and the Ho-Kalman realization.

The coefficients of the semi-infinite block Toeplitz matrix ``[a_{i-j}]`` of
a realized symbol are

    a_0 = R0,   a_j = C A^{j-1} B,   a_{-j} = gamma alpha^{j-1} beta   (j >= 1).

Conversely :func:`minimal_from_coeffs` recovers a minimal triple from a
finite window of such coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InsufficientWindow, RankUndetermined

__all__ = [
    "CoeffWindow", "HankelPair", "GrowthReport", "HankelRanks",
    "markov_plus", "markov_minus", "coeff_window", "hankel_pair",
    "hankel_ranks", "minimal_from_coeffs", "growth_bound_check",
    "toeplitz_truncation", "apply_symbol_to_monomial", "jordan_block_sizes",
]


def _markov(H, F, G, J):
    m = H.shape[0]
    out = np.zeros((J, m, G.shape[1]), dtype=complex)
    if F.shape[0] == 0:
        return out
    X = np.asarray(G, dtype=complex)
    for j in range(J):
        out[j] = H @ X
        X = F @ X
    return out


def markov_plus(real, J: int) -> np.ndarray:
    """``[C A^{j-1} B for j = 1..J]`` as a ``(J, m, m)`` array."""
    if J < 1:
        raise ValueError("J must be at least 1")
    return _markov(real.C, real.A, real.B, J)


def markov_minus(real, J: int) -> np.ndarray:
    """``[gamma alpha^{j-1} beta for j = 1..J]`` as a ``(J, m, m)`` array."""
    if J < 1:
        raise ValueError("J must be at least 1")
    return _markov(real.gamma, real.alpha, real.beta, J)


@dataclass(frozen=True, eq=False)
class CoeffWindow:
    """Coefficients ``a_{-J}..a_J`` of a block Toeplitz matrix.

    ``plus[j-1]`` holds ``a_j`` and ``minus[j-1]`` holds ``a_{-j}``.
    """

    m: int
    J: int
    a0: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        a0 = np.asarray(self.a0, dtype=complex).reshape(self.m, self.m)
        plus = np.asarray(self.plus, dtype=complex).reshape(-1, self.m, self.m)
        minus = np.asarray(self.minus, dtype=complex).reshape(-1, self.m, self.m)
        if plus.shape[0] != self.J or minus.shape[0] != self.J:
            raise ValueError("plus and minus must both hold J blocks")
        for name, val in (("a0", a0), ("plus", plus), ("minus", minus)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    def a(self, k: int) -> np.ndarray:
        if k == 0:
            return self.a0
        if abs(k) > self.J:
            raise InsufficientWindow(f"a_{k} is outside the window J={self.J}")
        return self.plus[k - 1] if k > 0 else self.minus[-k - 1]


def coeff_window(real, J: int) -> CoeffWindow:
    return CoeffWindow(real.m, J, real.R0, markov_plus(real, J), markov_minus(real, J))


@dataclass(frozen=True, eq=False)
class HankelPair:
    k: int
    Hplus: np.ndarray
    Hminus: np.ndarray


def _block_hankel(blocks, k: int) -> np.ndarray:
    """``[blocks[i+j]]_{i,j<k}``; blocks[0] is the first Markov parameter."""
    return np.block([[blocks[i + j] for j in range(k)] for i in range(k)])


def hankel_pair(cw: CoeffWindow, k: int) -> HankelPair:
    if 2 * k - 1 > cw.J:
        raise InsufficientWindow(f"H_{k} needs {2 * k - 1} coefficients, window has {cw.J}")
    return HankelPair(k, _block_hankel(cw.plus, k), _block_hankel(cw.minus, k))


def _rank(M: np.ndarray, rank_tol: float) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


@dataclass(frozen=True)
class HankelRanks:
    plus: tuple
    minus: tuple
    n_plus: int
    n_minus: int
    not_stabilized: bool


def hankel_ranks(cw: CoeffWindow, kmax: int, rank_tol: float = 1e-9) -> HankelRanks:
    """Numerical ranks of ``H_k^+`` and ``H_k^-`` for ``k = 1..kmax``."""
    if kmax < 1 or 2 * kmax - 1 > cw.J:
        raise InsufficientWindow(f"kmax={kmax} needs J >= {2 * kmax - 1}, got {cw.J}")
    rp, rm = [], []
    for k in range(1, kmax + 1):
        hp = hankel_pair(cw, k)
        rp.append(_rank(hp.Hplus, rank_tol))
        rm.append(_rank(hp.Hminus, rank_tol))
    grows = kmax > 1 and (rp[-1] > rp[-2] or rm[-1] > rm[-2])
    return HankelRanks(tuple(rp), tuple(rm), max(rp), max(rm), bool(grows))


def minimal_from_coeffs(coeffs, m: int, rank_tol: float = 1e-9):
    """Ho-Kalman (Kung shift variant) realization of a Markov sequence.

    Parameters
    ----------
    coeffs : sequence of (m, m) arrays
        ``coeffs[0]`` is the first Markov parameter ``h_1``.
    m : int
        Block size.
    rank_tol : float
        Singular values below ``rank_tol * s_max`` count as zero.

    Returns
    -------
    F, G, H : ndarray
        Minimal triple with ``H F^{j-1} G = h_j`` on the window, in balanced
        coordinates (the Hankel factors share ``Sigma^{1/2}``).

    Raises
    ------
    RankUndetermined
        If a singular value lies within a factor 10 of the rank threshold,
        or the rank has not stabilized on the window.
    """
    blocks = [np.asarray(c, dtype=complex).reshape(m, m) for c in coeffs]
    L = len(blocks)
    empty = (np.zeros((0, 0), dtype=complex), np.zeros((0, m), dtype=complex),
             np.zeros((m, 0), dtype=complex))
    if L == 0:
        return empty
    scale = max(np.max(np.abs(b)) for b in blocks)
    if scale == 0:
        return empty
    kmax = (L + 1) // 2
    s = np.linalg.svd(_block_hankel(blocks, kmax), compute_uv=False)
    rel = s / s[0]
    if np.any((rel > rank_tol / 10) & (rel < rank_tol * 10)):
        raise RankUndetermined("Hankel singular values straddle rank_tol")
    n = int(np.sum(rel > rank_tol))
    k = n + 1
    if 2 * k - 1 > L:
        raise RankUndetermined(
            f"rank {n} not stabilized: need {2 * n + 1} coefficients, got {L}")
    Hk = _block_hankel(blocks, k)
    U, s, Vh = np.linalg.svd(Hk)
    if np.sum(s > rank_tol * s[0]) != n:
        raise RankUndetermined("Hankel rank changed between window sizes")
    root = np.sqrt(s[:n])
    O = U[:, :n] * root
    Ctr = root[:, None] * Vh[:n]
    F = np.linalg.pinv(O[:-m]) @ O[m:]
    H = O[:m]
    G = Ctr[:, :m]
    err = 0.0
    X = G
    for b in blocks:
        err = max(err, np.max(np.abs(H @ X - b)))
        X = F @ X
    if err > 1e-8 * (1 + scale):
        raise RankUndetermined(f"Ho-Kalman reconstruction error {err:.3g}")
    return F, G, H


def jordan_block_sizes(M: np.ndarray, mu: complex, tol: float = 1e-7) -> list[int]:
    """Sizes of the Jordan blocks of ``M`` at eigenvalue ``mu``.

    Read off the rank chain ``r_k = rank (M - mu I)^k``: the number of blocks
    of size at least ``k`` is ``r_{k-1} - r_k``.
    """
    n = M.shape[0]
    N = M - mu * np.eye(n)
    scale = max(1.0, np.linalg.norm(M, 2))
    ranks = [n]
    X = np.eye(n)
    for k in range(1, n + 1):
        X = X @ N
        s = np.linalg.svd(X, compute_uv=False)
        ranks.append(int(np.sum(s > tol * scale ** k)))
        if ranks[-1] == ranks[-2]:
            break
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
    sizes = []
    for k, cnt in enumerate(at_least, start=1):
        nxt = at_least[k] if k < len(at_least) else 0
        sizes += [k] * (cnt - nxt)
    return sorted(sizes, reverse=True)


@dataclass(frozen=True)
class GrowthReport:
    M: int
    K: float
    ok: bool
    worst_j: int
    bounded: bool


def growth_bound_check(real, J: int, eps_circle: float = 1e-9,
                       jordan_tol: float = 1e-7) -> GrowthReport:
    """Check ``||a_{-j}|| <= K binom(j, M-1)`` on ``j = 1..J``.

    ``M`` is the largest Jordan block of ``alpha`` at an eigenvalue on the
    unit circle (1 if there is none).  ``K`` is the smallest constant that
    works on the window; ``bounded`` reports whether the ratio sequence
    stops growing over the second half of the window.
    """
    if J < 2:
        raise ValueError("J must be at least 2")
    if real.n_minus == 0:
        return GrowthReport(M=1, K=0.0, ok=True, worst_j=1, bounded=True)
    eigs = np.linalg.eigvals(real.alpha)
    circle = [e for e in eigs if abs(abs(e) - 1.0) <= max(1e-6, eps_circle)]
    M = 1
    seen: list[complex] = []
    for e in circle:
        if any(abs(e - s) < 1e-6 for s in seen):
            continue
        seen.append(e)
        mu = e / abs(e)
        sizes = jordan_block_sizes(np.asarray(real.alpha), mu, jordan_tol)
        if sizes:
            M = max(M, sizes[0])
    norms = np.array([np.linalg.norm(a, 2) for a in markov_minus(real, J)])
    denom = np.array([comb(j, M - 1) for j in range(1, J + 1)], dtype=float)
    ratios = norms / denom
    worst = int(np.argmax(ratios))
    K = float(ratios[worst])
    half = J // 2
    head = np.max(ratios[:half]) if half else 0.0
    tail = np.max(ratios[half:])
    bounded = bool(tail <= 1.5 * head + 1e-12 * (1 + K))
    ok = bool(np.all(norms <= K * denom * (1 + 1e-12) + 1e-300))
    return GrowthReport(M=M, K=K, ok=ok, worst_j=worst + 1, bounded=bounded)


def toeplitz_truncation(cw: CoeffWindow, N: int) -> np.ndarray:
    """The leading ``N x N`` block section ``[a_{i-j}]`` of the Toeplitz matrix."""
    if N < 1:
        raise ValueError("N must be positive")
    if N > cw.J + 1:
        raise InsufficientWindow(f"N={N} needs J >= {N - 1}, got {cw.J}")
    return np.block([[cw.a(i - j) for j in range(N)] for i in range(N)])


def apply_symbol_to_monomial(real, n: int, w, J: int):
    """Coefficients of ``T_Omega (z^n w)`` up to ``z^J`` and the leftover part.

    Returns ``(c, (gamma alpha^n, alpha, beta w))`` where ``c[j] = a_{j-n} w``
    and the triple describes ``gamma alpha^n (zI - alpha)^{-1} beta w``, the
    part that the Riesz projection discards.
    """
    if n < 0 or J < n:
        raise ValueError("need 0 <= n <= J")
    w = np.asarray(w, dtype=complex).reshape(real.m)
    cw = coeff_window(real, max(J, 1))
    c = np.array([cw.a(j - n) @ w for j in range(J + 1)])
    g = np.asarray(real.gamma, dtype=complex)
    for _ in range(n):
        g = g @ real.alpha
    return c, (g, np.asarray(real.alpha), np.asarray(real.beta) @ w)
