"""Spectra of Toeplitz-like operators with rational matrix symbols.

The symbol may have poles on the unit circle, in which case the operator is
unbounded.  The pipeline is

    symbol -> realization -> pencil L(lambda, z) -> essential spectrum
           -> Riccati test per component of the complement.
"""
from .config import RunConfig
from .errors import (DegenerateDet, DSingular, IllConditioned, InsufficientWindow,
                     PoleHit, RankUndetermined, ToeplitzError)
from .hokalman import (CoeffWindow, GrowthReport, HankelPair, HankelRanks,
                       apply_symbol_to_monomial, coeff_window, growth_bound_check,
                       hankel_pair, hankel_ranks, markov_minus, markov_plus,
                       minimal_from_coeffs, toeplitz_truncation)
from .pencil import (BivariatePoly, EssCloud, NuSample, PencilL, assemble_L, compute_E,
                     detL_coeffs, ess_points_at, ess_spectrum_sweep)
from .ratsym import (PartialFraction, PoleSet, RationalMatrix, RationalScalar, Realization,
                     classify_poles, eval_rational_matrix, eval_realization,
                     partial_fractions, split_and_realize)
from .riccati import (Label, RegionMap, RiccatiOutcome, RiccatiProblem, Verdict,
                      classify_components, fixed_point_riccati, is_resolvent_alpha_only,
                      riccati_residual, solve_stabilizing)
from .examples import ExampleReport, load_example, reproduce_example

__version__ = "0.1.0"
