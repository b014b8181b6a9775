"""The five worked examples, bundled as data, and their reproduction checks.

Each ``data/exampleN.json`` holds the symbol, the hand-written realization
used in the original worked example, and any parameters.  The checks in
:func:`reproduce_example` compare pipeline output against the closed forms
worked out for each symbol.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .config import RunConfig, resolve
from .io import (atomic_write, ess_cloud_csv, ess_cloud_sidecar, region_map_csv,
                 region_svg, scatter_svg, symbol_from_dict, realization_from_dict)
from .pencil import assemble_L, compute_E, detL_coeffs, ess_spectrum_sweep
from .ratsym import RationalMatrix, Realization, split_and_realize
from .riccati import (Label, RiccatiProblem, Verdict, classify_components,
                      is_resolvent_alpha_only, solve_stabilizing)

__all__ = ["Check", "ExampleReport", "ExampleData", "load_example", "reproduce_example"]


@dataclass(frozen=True)
class Check:
    name: str
    expected: object
    observed: object
    passed: bool
    tol: float | None = None
    source: str = ""


@dataclass
class ExampleReport:
    example_id: int
    checks: list = field(default_factory=list)
    figures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, expected, observed, passed, tol=None, source=""):
        self.checks.append(Check(name, expected, observed, bool(passed), tol, source))

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            tol = f" tol={c.tol:g}" if c.tol is not None else ""
            out.append(f"[{tag}] {c.name}: expected {c.expected}, observed {c.observed}{tol}")
        return out


@dataclass(frozen=True, eq=False)
class ExampleData:
    id: int
    title: str
    params: dict
    symbol: RationalMatrix
    realization: Realization


def load_example(k: int) -> ExampleData:
    if k not in range(1, 6):
        raise ValueError("example id must be in 1..5")
    text = resources.files(__package__).joinpath(f"data/example{k}.json").read_text()
    d = json.loads(text)
    return ExampleData(d["id"], d["title"], d["params"], symbol_from_dict(d["symbol"]),
                       realization_from_dict(d["realization"]))


def _emit(report, out_dir, stem, cloud, rm=None):
    if out_dir is None:
        return
    out = Path(out_dir)
    files = [(f"{stem}_ess.csv", ess_cloud_csv(cloud)),
             (f"{stem}_ess.json", ess_cloud_sidecar(cloud)),
             (f"{stem}_ess.svg", scatter_svg(cloud, stem))]
    if rm is not None:
        files += [(f"{stem}_regions.csv", region_map_csv(rm)),
                  (f"{stem}_regions.svg", region_svg(rm, stem))]
    for name, text in files:
        report.figures.append(str(atomic_write(out / name, text)))


def _fmax(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(x)) if x.size else 0.0


def _example1(ex, cfg, rep, out_dir):
    a, b = ex.params["a"], ex.params["b"]
    real = split_and_realize(ex.symbol, cfg)
    t = time.perf_counter()
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    dt = time.perf_counter() - t
    pts = cloud.finite()
    res = _fmax(np.abs(2 * b * pts.imag - (a * a + b * b - 1 + (2 - 2 * a) * pts.real)))
    rep.add("line residual 2by = a^2+b^2-1+(2-2a)x", 0.0, res, res < 1e-8, 1e-8, "Example 1 line")
    rep.add("sweep runtime [s]", "< 5", round(dt, 3), dt < 5.0, None, "runtime budget")
    # |a+ib-lambda| >= |1-lambda| is the spectrum: a+ib is on the resolvent side,
    # its mirror image 2-(a+ib) on the spectrum side
    ok_res, _ = is_resolvent_alpha_only(real, complex(a, b), cfg)
    ok_spec, _ = is_resolvent_alpha_only(real, 2 - complex(a, b), cfg)
    rep.add("a+ib in resolvent", True, ok_res, ok_res, None, "|alpha_circ| < 1")
    rep.add("2-(a+ib) in spectrum", False, ok_spec, not ok_spec, None, "|alpha_circ| >= 1")
    _emit(rep, out_dir, "example1", cloud)


def _example2(ex, cfg, rep, out_dir):
    real = split_and_realize(ex.symbol, cfg)
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    err = 0.0
    for th, lam in zip(cloud.theta, cloud.lam):
        if not np.isfinite(th) or abs(np.sin(th)) < 1e-12:
            continue
        x = np.cos(th)
        y = -np.sin(th) * np.cos(th) / (1 - np.cos(th))
        err = max(err, abs(lam - complex(x, y)))
    rep.add("ess points on x=cos t, y=-sin t cos t/(1-cos t)", 0.0, err, err < 1e-6, 1e-6,
            "Example 2 parametrization")
    out = solve_stabilizing(RiccatiProblem(ex.realization, -2.5), cfg)
    rep.add("verdict at lambda=-2.5", "Resolvent", out.verdict.value,
            out.verdict is Verdict.RESOLVENT, None, "q=0.5")
    if out.verdict is Verdict.RESOLVENT:
        for name, want, got in (("Q", 0.5, out.Q), ("A_circ", -1 / 3, out.A_circ),
                                ("alpha_circ", 0.5, out.alpha_circ)):
            e = abs(complex(np.asarray(got).ravel()[0]) - want)
            rep.add(f"{name} at lambda=-2.5", want, complex(np.asarray(got).ravel()[0]),
                    e < 1e-8, 1e-8, "closed forms in q")
    rng = np.random.default_rng(cfg.seed)
    bad = 0
    for _ in range(50):
        r = rng.uniform(0.05, 0.95)
        phi = rng.uniform(np.pi / 2 + 0.05, 3 * np.pi / 2 - 0.05)
        q = 1 + r * np.exp(1j * phi)
        lam = 2 - q - 2 / q
        if solve_stabilizing(RiccatiProblem(real, lam), cfg).verdict is not Verdict.RESOLVENT:
            bad += 1
    rep.add("sampled q (Re q<1, |1-q|<1) give Resolvent", 0, bad, bad == 0, None,
            "lambda = 2 - q - 2/q")
    _emit(rep, out_dir, "example2", cloud)


def _example3(ex, cfg, rep, out_dir):
    real = split_and_realize(ex.symbol, cfg)
    lam = complex(ex.symbol(3j)[0, 0])
    out = solve_stabilizing(RiccatiProblem(real, lam), cfg)
    rho = float(np.max(np.abs(np.linalg.eigvals(out.alpha_circ)))) if out.alpha_circ is not None else np.nan
    rep.add("rho(alpha_circ) at omega(3i)", 0.9572, round(rho, 6), abs(rho - 0.9572) < 1e-3, 1e-3,
            "spectral radius 0.9572")
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    rm = classify_components(cloud, real, cfg)
    for probe, want in ((-1.0, Label.SPECTRUM), (-0.1 + 1.8j, Label.RESOLVENT),
                        (-0.1 - 1.8j, Label.RESOLVENT)):
        got = rm.label_at(probe)
        rep.add(f"component of {probe}", want.name, got.name, got is want, None, "Example 3 components")
    sym = bool(np.array_equal(rm.labels, rm.labels[::-1]))
    rep.add("conjugation symmetry of labels", True, sym, sym, None, "real coefficients")
    _emit(rep, out_dir, "example3", cloud, rm)


def _example4(ex, cfg, rep, out_dir):
    real = split_and_realize(ex.symbol, cfg)
    bp = detL_coeffs(assemble_L(real))
    want = np.zeros_like(bp.coeffs)
    # (z^2 - 1)(lambda^2 - 1) - 2 lambda z, indexed [lambda^k, z^l]
    want[0, 0], want[2, 0], want[0, 2], want[2, 2], want[1, 1] = 1, -1, -1, 1, -2
    err = float(np.max(np.abs(bp.coeffs - want)))
    rep.add("det L coefficients", "(z^2-1)(l^2-1)-2lz", err, err < 1e-9, 1e-9, "Example 4 det L")
    E = compute_E(bp)
    rep.add("E(Omega)", [], E, len(E) == 0, None, "E is empty")
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    pts = cloud.finite()
    d_axis = np.abs(pts.real)
    d_circ = np.abs(np.abs(pts) - 1)
    ang = np.angle(pts) % (2 * np.pi)
    tol = 1e-6
    on_arc = ((ang >= np.pi / 6 - tol) & (ang <= 5 * np.pi / 6 + tol)) | \
             ((ang >= 7 * np.pi / 6 - tol) & (ang <= 11 * np.pi / 6 + tol))
    ok = (d_axis < tol) | ((d_circ < tol) & on_arc)
    rep.add("ess points on imaginary axis or the two arcs", 0, int(np.sum(~ok)), bool(np.all(ok)),
            tol, "line plus two arcs")
    grid = np.linspace(-3, 3, 41)
    hits = sum(is_resolvent_alpha_only(real, complex(x, y), cfg)[0] for x in grid for y in grid)
    rep.add("alpha-only test on 41x41 grid over [-3,3]^2", 0, int(hits), hits == 0, None,
            "resolvent set empty")
    _emit(rep, out_dir, "example4", cloud)


def _example5(ex, cfg, rep, out_dir):
    real = split_and_realize(ex.symbol, cfg)
    cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
    E = list(cloud.e_set)
    ok = len(E) == 1 and abs(E[0] - 2) < 1e-8
    rep.add("E(Omega)", [2], E, ok, 1e-8, "E = {2}")
    rep.add("whole_plane", True, cloud.whole_plane, cloud.whole_plane, None, "ess spectrum is C")
    out = solve_stabilizing(RiccatiProblem(real, 2.0, cloud.e_set), cfg)
    rep.add("verdict at lambda=2", "NotResolvent/in-E(Omega)",
            f"{out.verdict.value}/{out.certificate}",
            out.verdict is Verdict.NOT_RESOLVENT and out.certificate == "in-E(Omega)")
    _emit(rep, out_dir, "example5", cloud)


_RUNNERS = {1: _example1, 2: _example2, 3: _example3, 4: _example4, 5: _example5}


def reproduce_example(k: int, cfg: RunConfig | None = None, out_dir=None) -> ExampleReport:
    """Run the checks for example ``k``; figures go to ``out_dir`` when given."""
    cfg = resolve(cfg)
    ex = load_example(k)
    rep = ExampleReport(k)
    _RUNNERS[k](ex, cfg, rep, out_dir)
    return rep
