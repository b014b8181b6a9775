"""Resolvent-set membership through the algebraic Riccati equation.

``lambda`` is in the resolvent set of ``T_Omega`` exactly when

    Q = alpha Q A + (beta - alpha Q B) D^{-1} (C - gamma Q A),
    D = R0 - gamma Q B - lambda I

has a solution with ``D`` invertible and both closed-loop matrices

    A_circ     = A - B D^{-1} (C - gamma Q A)
    alpha_circ = alpha - (beta - alpha Q B) D^{-1} gamma

stable.  Such a ``Q`` spans the deflating subspace of the reversed pencil

    [[A, 0, B], [0, -I, beta], [C, 0, D0]] - w [[I, 0, 0], [0, -alpha, 0], [0, -gamma, 0]]

belonging to the eigenvalues ``w = 1/z`` strictly inside the unit disc,
written in graph form ``[I; -Q; -K]``.  This gives both the witness and, when
the eigenvalue count is wrong, a certificate that no stabilizing solution
exists.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .config import RunConfig, resolve
from .errors import DSingular
from .pencil import EssCloud, assemble_L, compute_E, detL_coeffs, ess_points_at
from .ratsym import Realization

__all__ = [
    "Verdict", "Label", "RiccatiProblem", "RiccatiOutcome", "RegionMap",
    "riccati_residual", "riccati_rhs", "solve_stabilizing",
    "fixed_point_riccati", "is_resolvent_alpha_only", "classify_components",
    "closed_loop",
]

_COND_LIMIT = 1e12


class Verdict(str, enum.Enum):
    RESOLVENT = "Resolvent"
    NOT_RESOLVENT = "NotResolvent"
    UNKNOWN = "Unknown"


class Label(enum.IntEnum):
    ESS_BAND = 0
    RESOLVENT = 1
    SPECTRUM = 2
    UNKNOWN = 3


@dataclass(frozen=True, eq=False)
class RiccatiProblem:
    real: Realization
    lam: complex
    e_set: tuple | None = None


@dataclass(frozen=True, eq=False)
class RiccatiOutcome:
    verdict: Verdict
    Q: np.ndarray | None = None
    A_circ: np.ndarray | None = None
    alpha_circ: np.ndarray | None = None
    residual: float = np.nan
    certificate: str | None = None
    detail: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.NOT_RESOLVENT and not self.certificate:
            raise ValueError("NotResolvent needs a certificate")


def _rho(M) -> float:
    if M is None or M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _D(real: Realization, lam: complex, Q: np.ndarray) -> np.ndarray:
    return real.R0 - real.gamma @ Q @ real.B - lam * np.eye(real.m)


def riccati_rhs(real: Realization, lam: complex, Q: np.ndarray):
    """Right-hand side of the Riccati equation and the matrix ``D``."""
    Q = np.asarray(Q, dtype=complex).reshape(real.n_minus, real.n_plus)
    D = _D(real, lam, Q)
    if np.linalg.cond(D) > _COND_LIMIT:
        raise DSingular("R0 - gamma Q B - lambda I is singular")
    K = np.linalg.solve(D, real.C - real.gamma @ Q @ real.A)
    rhs = real.alpha @ Q @ real.A + (real.beta - real.alpha @ Q @ real.B) @ K
    return rhs, D


def riccati_residual(p: RiccatiProblem, Q):
    """``(Q - rhs(Q), D)``; raises :class:`DSingular` when D is singular."""
    real = p.real
    Q = np.asarray(Q, dtype=complex).reshape(real.n_minus, real.n_plus)
    rhs, D = riccati_rhs(real, p.lam, Q)
    return Q - rhs, D


def closed_loop(real: Realization, lam: complex, Q: np.ndarray):
    """``(A_circ, alpha_circ, D)`` for a given ``Q``."""
    Q = np.asarray(Q, dtype=complex).reshape(real.n_minus, real.n_plus)
    D = _D(real, lam, Q)
    if np.linalg.cond(D) > _COND_LIMIT:
        raise DSingular("R0 - gamma Q B - lambda I is singular")
    A_c = real.A - real.B @ np.linalg.solve(D, real.C - real.gamma @ Q @ real.A)
    al_c = real.alpha - (real.beta - real.alpha @ Q @ real.B) @ np.linalg.solve(D, real.gamma)
    return A_c, al_c, D


def _residual_norm(real, lam, Q) -> float:
    res, _ = riccati_residual(RiccatiProblem(real, lam), Q)
    return float(np.max(np.abs(res))) if res.size else 0.0


def _newton(real, lam, Q, steps=4):
    """Newton steps: the derivative of Q - rhs(Q) is E -> E - alpha_circ E A_circ."""
    npl, nmi = real.n_plus, real.n_minus
    for _ in range(steps):
        res, _ = riccati_residual(RiccatiProblem(real, lam), Q)
        if res.size == 0 or np.max(np.abs(res)) == 0:
            break
        A_c, al_c, _ = closed_loop(real, lam, Q)
        J = np.eye(npl * nmi) - np.kron(A_c.T, al_c)
        step = np.linalg.solve(J, -res.reshape(-1, order="F"))
        Q = Q + step.reshape(nmi, npl, order="F")
    return Q


def fixed_point_riccati(real: Realization, lam: complex, Q0=None,
                        cfg: RunConfig | None = None):
    """Damped fixed-point iteration ``Q <- (1-s) Q + s rhs(Q)``.

    The step ``s`` starts at 1 and is halved whenever the residual grows.
    Once the residual stalls below 1e-6, Newton steps finish the job.
    Returns ``(Q, residual)``; ``Q`` is ``None`` if the iteration broke down.
    """
    cfg = resolve(cfg)
    npl, nmi = real.n_plus, real.n_minus
    Q = np.zeros((nmi, npl), dtype=complex) if Q0 is None else np.array(Q0, dtype=complex)
    s = 1.0
    try:
        r = _residual_norm(real, lam, Q)
        for _ in range(cfg.max_iter):
            tol = cfg.ric_tol * (1 + np.linalg.norm(Q))
            if r < tol:
                break
            rhs, _ = riccati_rhs(real, lam, Q)
            trial = (1 - s) * Q + s * rhs
            r_new = _residual_norm(real, lam, trial)
            if r_new > r and s > 1e-4:
                s /= 2
                continue
            if r_new < 1e-6 and r_new > 0.5 * r:
                trial = _newton(real, lam, trial)
                r_new = _residual_norm(real, lam, trial)
            Q, r = trial, r_new
            if not np.isfinite(r):
                return None, np.inf
    except (DSingular, np.linalg.LinAlgError):
        return None, np.inf
    return Q, r


def is_resolvent_alpha_only(real: Realization, lam: complex,
                            cfg: RunConfig | None = None):
    """Exact test when ``n_plus = 0``.

    ``lambda`` is in the resolvent set iff ``R0 - lambda I`` is invertible and
    ``alpha - beta (R0 - lambda I)^{-1} gamma`` is stable.  Returns
    ``(is_resolvent, alpha_circ)``; ``alpha_circ`` is ``None`` when
    ``lambda`` is an eigenvalue of ``R0``.
    """
    cfg = resolve(cfg)
    if real.n_plus != 0:
        raise ValueError("is_resolvent_alpha_only needs n_plus = 0")
    D0 = real.R0 - lam * np.eye(real.m)
    if np.linalg.cond(D0) > _COND_LIMIT:
        return False, None
    al_c = real.alpha - real.beta @ np.linalg.solve(D0, real.gamma)
    return _rho(al_c) < 1 - cfg.stab_margin, al_c


def _in_e_set(lam, e_set) -> bool:
    return any(abs(lam - e) <= 1e-8 * (1 + abs(e)) for e in e_set)


def _e_set(real: Realization):
    return tuple(compute_E(detL_coeffs(assemble_L(real))))


def _reversed_pencil(real: Realization, lam: complex):
    m, npl, nmi = real.m, real.n_plus, real.n_minus
    N = npl + nmi + m
    a, b = npl, npl + nmi
    Pm = np.zeros((N, N), dtype=complex)
    Rm = np.zeros((N, N), dtype=complex)
    Pm[:a, :a] = real.A
    Pm[:a, b:] = real.B
    Pm[a:b, a:b] = -np.eye(nmi)
    Pm[a:b, b:] = real.beta
    Pm[b:, :a] = real.C
    Pm[b:, b:] = real.R0 - lam * np.eye(m)
    Rm[:a, :a] = np.eye(npl)
    Rm[a:b, a:b] = -real.alpha
    Rm[b:, a:b] = -real.gamma
    return Pm, Rm


def _resolvent_outcome(real, lam, Q, cfg, how):
    """Verify a candidate witness and turn it into an outcome (or None)."""
    try:
        Q = _newton(real, lam, Q, steps=2)
        r = _residual_norm(real, lam, Q)
        A_c, al_c, _ = closed_loop(real, lam, Q)
    except (DSingular, np.linalg.LinAlgError):
        return None
    if not r < cfg.ric_tol * (1 + np.linalg.norm(Q)):
        return None
    ra, rl = _rho(A_c), _rho(al_c)
    if ra < 1 - cfg.stab_margin and rl < 1 - cfg.stab_margin:
        return RiccatiOutcome(Verdict.RESOLVENT, Q, A_c, al_c, r, detail=how)
    if ra <= 1 + cfg.stab_margin and rl <= 1 + cfg.stab_margin:
        return RiccatiOutcome(Verdict.UNKNOWN, Q, A_c, al_c, r,
                              detail=f"{how}: closed loop on the stability boundary")
    return None


def solve_stabilizing(p: RiccatiProblem, cfg: RunConfig | None = None) -> RiccatiOutcome:
    """Decide whether ``p.lam`` lies in the resolvent set of ``T_Omega``.

    Order of tests: membership in the exceptional set; the exact
    ``n_plus = 0`` test; otherwise the ordered-QZ split of the reversed
    pencil, falling back to multi-start fixed-point iteration.  A failure to
    find a stabilizing solution without a certificate is ``Unknown``.
    """
    cfg = resolve(cfg)
    real, lam = p.real, complex(p.lam)
    e_set = p.e_set if p.e_set is not None else _e_set(real)
    if _in_e_set(lam, e_set):
        return RiccatiOutcome(Verdict.NOT_RESOLVENT, certificate="in-E(Omega)")

    if real.n_plus == 0:
        ok, al_c = is_resolvent_alpha_only(real, lam, cfg)
        Q = np.zeros((real.n_minus, 0), dtype=complex)
        A_c = np.zeros((0, 0), dtype=complex)
        if ok:
            return RiccatiOutcome(Verdict.RESOLVENT, Q, A_c, al_c, 0.0,
                                  detail="alpha-only")
        if al_c is not None and abs(_rho(al_c) - 1) <= cfg.stab_margin:
            return RiccatiOutcome(Verdict.UNKNOWN, Q, A_c, al_c, 0.0,
                                  detail="alpha_circ on the stability boundary")
        return RiccatiOutcome(Verdict.NOT_RESOLVENT, Q, A_c, al_c, 0.0,
                              certificate="alpha-only-exact")

    out = _solve_by_subspace(real, lam, cfg)
    if out is not None and out.verdict is not Verdict.UNKNOWN:
        return out
    fallback = _solve_by_iteration(real, lam, cfg)
    if fallback is not None:
        return fallback
    return out if out is not None else RiccatiOutcome(
        Verdict.UNKNOWN, detail="no stabilizing solution found")


def _solve_by_subspace(real, lam, cfg):
    npl, nmi = real.n_plus, real.n_minus
    Pm, Rm = _reversed_pencil(real, lam)
    AA, BB, al, be, _, Z = sla.ordqz(
        Pm, Rm, output="complex",
        sort=lambda a, b: np.abs(a) < (1 - cfg.stab_margin) * np.abs(b))
    finite = np.abs(be) > 1e-14 * np.hypot(np.abs(al), np.abs(be))
    w = np.full(al.shape, np.inf, dtype=complex)
    w[finite] = al[finite] / be[finite]
    # a zero z = 1/w of det L(lambda, .) on the circle puts lambda in sigma_ess
    on_circle = finite & (np.abs(np.abs(w) - 1) <= cfg.eps_circle)
    if np.any(on_circle):
        return RiccatiOutcome(Verdict.NOT_RESOLVENT, certificate="in-essential-spectrum",
                              detail=f"zero of det L at |z|={1 / abs(w[on_circle][0]):.12g}")
    n_in = int(np.sum(finite & (np.abs(w) < 1 - cfg.stab_margin)))
    n_band = int(np.sum(finite & (np.abs(np.abs(w) - 1) <= cfg.stab_margin)))
    if n_band:
        return RiccatiOutcome(Verdict.UNKNOWN, detail="zero of det L within stab_margin of T")
    if n_in != npl:
        return RiccatiOutcome(
            Verdict.NOT_RESOLVENT, certificate="zero-split-mismatch",
            detail=f"{n_in} zeros of det L outside the closed disc, need {npl}")
    Y = Z[:, :npl]
    Y1, Y2 = Y[:npl], Y[npl:npl + nmi]
    if np.linalg.cond(Y1) > _COND_LIMIT:
        return RiccatiOutcome(Verdict.NOT_RESOLVENT, certificate="subspace-not-graph",
                              detail="stable deflating subspace is not a graph over x_plus")
    Q = -Y2 @ np.linalg.inv(Y1)
    out = _resolvent_outcome(real, lam, Q, cfg, "deflating-subspace")
    if out is None:
        return RiccatiOutcome(Verdict.UNKNOWN, detail="subspace candidate failed verification")
    return out


def _solve_by_iteration(real, lam, cfg):
    rng = np.random.default_rng(cfg.seed)
    scale = np.linalg.norm(real.beta) * np.linalg.norm(real.C)
    starts = [None] + [
        scale * (rng.standard_normal((real.n_minus, real.n_plus))
                 + 1j * rng.standard_normal((real.n_minus, real.n_plus)))
        for _ in range(cfg.n_restarts)]
    boundary = None
    for Q0 in starts:
        Q, r = fixed_point_riccati(real, lam, Q0, cfg)
        if Q is None:
            continue
        out = _resolvent_outcome(real, lam, Q, cfg, "fixed-point")
        if out is None:
            continue
        if out.verdict is Verdict.RESOLVENT:
            return out
        boundary = out
    return boundary


# ---------------------------------------------------------------------------
# component classification


@dataclass(frozen=True, eq=False)
class Representative:
    component: int
    lam: complex
    outcome: RiccatiOutcome


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Labels on a raster of cell centres ``re[j] + 1j * im[i]``."""

    re: np.ndarray
    im: np.ndarray
    labels: np.ndarray
    components: np.ndarray
    representatives: tuple
    far_field: Representative | None = None
    band_points: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def cell_of(self, lam: complex) -> tuple[int, int]:
        dx = self.re[1] - self.re[0]
        dy = self.im[1] - self.im[0]
        j = int(np.floor((lam.real - self.re[0]) / dx + 0.5))
        i = int(np.floor((lam.imag - self.im[0]) / dy + 0.5))
        if not (0 <= i < self.im.size and 0 <= j < self.re.size):
            raise ValueError(f"{lam} is outside the raster")
        return i, j

    def label_at(self, lam: complex) -> Label:
        return Label(int(self.labels[self.cell_of(complex(lam))]))


def _view_box(pts: np.ndarray, view_radius: float | None):
    pts = pts[np.isfinite(pts)]
    if pts.size:
        R = view_radius if view_radius is not None else max(2.0, 5 * np.median(np.abs(pts)))
        pts = pts[np.abs(pts) <= R]
    if pts.size:
        x0, x1 = pts.real.min(), pts.real.max()
        y0, y1 = pts.imag.min(), pts.imag.max()
    else:
        x0 = x1 = y0 = y1 = 0.0
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    hx, hy = 1.5 * (x1 - x0) / 2, 1.5 * (y1 - y0) / 2
    x0, x1 = min(cx - hx, -2.0), max(cx + hx, 2.0)
    y0, y1 = min(cy - hy, -2.0), max(cy + hy, 2.0)
    return x0, x1, y0, y1


def _densify(real, cloud: EssCloud, box, cell: float, max_depth: int = 14):
    """Extra samples where consecutive angles leave gaps wider than a cell."""
    pl = assemble_L(real)
    x0, x1, y0, y1 = box

    def inside(z):
        return x0 - cell <= z.real <= x1 + cell and y0 - cell <= z.imag <= y1 + cell

    def sample(th):
        # the sweep has already ruled out singular nu, skip the probes
        return ess_points_at(pl, real, np.exp(1j * th), check_singular=False).points

    th = [float(t) for t in np.sort(cloud.thetas)]
    by_theta = {}
    for t, lam in zip(cloud.theta, cloud.lam):
        if np.isfinite(t):
            by_theta.setdefault(float(t), []).append(lam)
    samples = [np.array(by_theta.get(t, []), dtype=complex) for t in th]
    stack = [(th[i], samples[i], th[i + 1] if i + 1 < len(th) else th[0] + 2 * np.pi,
              samples[(i + 1) % len(th)], 0) for i in range(len(th))]
    extra = []
    while stack:
        a, pa, b, pb, depth = stack.pop()
        if pa.size == 0 or pb.size == 0 or depth >= max_depth:
            continue
        cost = np.abs(pa[:, None] - pb[None, :])
        r, c = linear_sum_assignment(cost)
        if not any(cost[i, j] > cell and (inside(pa[i]) or inside(pb[j]))
                   for i, j in zip(r, c)):
            continue
        mid = (a + b) / 2
        pm = sample(mid)
        extra.extend(pm.tolist())
        stack.append((a, pa, mid, pm, depth + 1))
        stack.append((mid, pm, b, pb, depth + 1))
    return np.array(extra, dtype=complex)


def _probe(real, lam, cfg, e_set):
    return solve_stabilizing(RiccatiProblem(real, lam, e_set), cfg)


def _label_of(outcome: RiccatiOutcome) -> Label:
    return {Verdict.RESOLVENT: Label.RESOLVENT,
            Verdict.NOT_RESOLVENT: Label.SPECTRUM,
            Verdict.UNKNOWN: Label.UNKNOWN}[outcome.verdict]


def classify_components(cloud: EssCloud, real: Realization,
                        cfg: RunConfig | None = None) -> RegionMap:
    """Label the connected components of the complement of the essential spectrum.

    The cloud is rasterized on ``cfg.grid_n`` cells per side, dilated by
    ``cfg.dilate`` cells, and the remaining cells are split into 4-connected
    components.  Each component gets the verdict of one probe (its cell
    farthest from the band); ``Unknown`` probes are retried at up to three
    other cells before the component is labelled ``Unknown``.
    """
    cfg = resolve(cfg)
    n = cfg.grid_n
    box = _view_box(cloud.lam, cfg.view_radius)
    x0, x1, y0, y1 = box
    re = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    im = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    if cloud.whole_plane:
        labels = np.full((n, n), int(Label.SPECTRUM), dtype=np.int8)
        return RegionMap(re, im, labels, np.zeros((n, n), dtype=np.int32), ())

    cell = min((x1 - x0), (y1 - y0)) / n
    pts = cloud.finite()
    pts = np.concatenate([pts, _densify(real, cloud, box, cell)])
    band = np.zeros((n, n), dtype=bool)
    jj = np.floor((pts.real - x0) / (x1 - x0) * n).astype(int)
    ii = np.floor((pts.imag - y0) / (y1 - y0) * n).astype(int)
    ok = (jj >= 0) & (jj < n) & (ii >= 0) & (ii < n)
    band[ii[ok], jj[ok]] = True
    if cfg.dilate:
        band = ndimage.binary_dilation(band, structure=np.ones((3, 3), bool),
                                       iterations=cfg.dilate)
    comps, ncomp = ndimage.label(~band)
    dist = ndimage.distance_transform_edt(~band)
    e_set = cloud.e_set if cloud.e_set else _e_set(real)

    labels = np.full((n, n), int(Label.ESS_BAND), dtype=np.int8)
    reps = []
    rng = np.random.default_rng(cfg.seed)
    for k in range(1, ncomp + 1):
        mask = comps == k
        idx = np.flatnonzero(mask)
        order = idx[np.argsort(-dist.ravel()[idx], kind="stable")]
        i, j = np.unravel_index(order[0], mask.shape)
        lam = complex(re[j], im[i])
        out = _probe(real, lam, cfg, e_set)
        if out.verdict is Verdict.UNKNOWN and order.size > 1:
            for t in rng.choice(order[: max(1, order.size // 2)], size=min(3, order.size), replace=False):
                i2, j2 = np.unravel_index(t, mask.shape)
                retry = _probe(real, complex(re[j2], im[i2]), cfg, e_set)
                if retry.verdict is not Verdict.UNKNOWN:
                    lam, out = complex(re[j2], im[i2]), retry
                    break
        labels[mask] = int(_label_of(out))
        reps.append(Representative(k, lam, out))

    radius = max(abs(x0), abs(x1), abs(y0), abs(y1))
    far_lam = complex(3 * radius, 0.0)
    far = Representative(0, far_lam, _probe(real, far_lam, cfg, e_set))
    return RegionMap(re, im, labels, comps.astype(np.int32), tuple(reps), far, pts)
