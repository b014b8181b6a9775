"""Spectrum of the Toeplitz operator with symbol (z^3 + 3z + 1) / (z^2 - 1).

The symbol has simple poles at z = 1 and z = -1, both on the unit circle,
so the operator is unbounded.  This script walks through the pipeline by
hand and writes two SVG pictures next to itself.

    python3 demos/example3_spectrum.py
"""
from pathlib import Path

import numpy as np

from unbounded_toeplitz import (RiccatiProblem, RunConfig, classify_components,
                                ess_spectrum_sweep, solve_stabilizing, split_and_realize)
from unbounded_toeplitz.examples import load_example
from unbounded_toeplitz.io import atomic_write, region_svg, scatter_svg

here = Path(__file__).parent
sym = load_example(3).symbol

# realization: one state for the analytic part, two for the poles on T
real = split_and_realize(sym)
print(f"n_plus = {real.n_plus}, n_minus = {real.n_minus}")
print("eigenvalues of alpha:", np.round(np.linalg.eigvals(real.alpha), 12))

# essential spectrum: the image of the circle under the symbol
cfg = RunConfig(n_theta=720, grid_n=300)
cloud = ess_spectrum_sweep(real, cfg.n_theta, cfg)
print(f"{cloud.lam.size} points on the essential spectrum")

# one Riccati test per component of the complement
for lam in (-1.0, -0.1 + 1.8j, -0.1 - 1.8j, 5.0):
    out = solve_stabilizing(RiccatiProblem(real, lam), cfg)
    extra = ""
    if out.alpha_circ is not None and out.alpha_circ.size:
        extra = f", rho(alpha_circ) = {np.max(np.abs(np.linalg.eigvals(out.alpha_circ))):.4f}"
    print(f"lambda = {lam}: {out.verdict.value} {out.certificate or ''}{extra}")

rm = classify_components(cloud, real, cfg)
for rep in rm.representatives:
    print(f"component {rep.component}: {rep.outcome.verdict.value} (probe {rep.lam:.3f})")

atomic_write(here / "example3_ess.svg", scatter_svg(cloud, "essential spectrum"))
atomic_write(here / "example3_regions.svg", region_svg(rm, "spectrum"))
print("wrote", here / "example3_ess.svg", "and", here / "example3_regions.svg")
