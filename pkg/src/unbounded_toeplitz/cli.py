"""Command-line front end.

    unbounded-toeplitz realize   SYMBOL.json
    unbounded-toeplitz ess-spec  SYMBOL.json
    unbounded-toeplitz e-set     SYMBOL.json
    unbounded-toeplitz resolvent SYMBOL.json --lambda RE,IM
    unbounded-toeplitz classify  SYMBOL.json
    unbounded-toeplitz spectrum  SYMBOL.json
    unbounded-toeplitz example   N

Exit status: 0 success, 2 unreadable input, 3 numerical failure, 4 a
reproduction check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import ToeplitzError
from .examples import reproduce_example
from .hokalman import coeff_window, growth_bound_check
from .io import (SymbolFormatError, atomic_write, ess_cloud_csv, ess_cloud_sidecar,
                 load_symbol, markov_csv, outcome_to_dict, realization_to_dict,
                 region_map_csv, region_svg, scatter_svg)
from .pencil import assemble_L, compute_E, detL_coeffs, ess_spectrum_sweep
from .ratsym import classify_poles, partial_fractions, split_and_realize
from .riccati import RiccatiProblem, classify_components, solve_stabilizing

EXIT_PARSE, EXIT_NUMERIC, EXIT_CHECK = 2, 3, 4
_MARKOV_J = 32


def _cfg(args) -> RunConfig:
    return RunConfig(n_theta=args.n_theta, grid_n=args.grid_n, rank_tol=args.rank_tol,
                     ric_tol=args.ric_tol, seed=args.seed, out_dir=args.out)


def _parse_lambda(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")
    return complex(parts[0], parts[1])


def _c(z) -> str:
    z = complex(z)
    return f"{z.real:.10g}{z.imag:+.10g}i"


def _write(out: Path, name: str, text: str) -> None:
    p = atomic_write(out / name, text)
    print(f"wrote {p}")


def _stem(args) -> str:
    return Path(args.symbol).stem


def cmd_realize(args, cfg) -> int:
    sym = load_symbol(args.symbol)
    real = split_and_realize(sym, cfg)
    ps = classify_poles(partial_fractions(sym, cfg), cfg.eps_circle)
    gr = growth_bound_check(real, 2 * _MARKOV_J, cfg.eps_circle, cfg.jordan_tol)
    print(f"m = {real.m}, n_plus = {real.n_plus}, n_minus = {real.n_minus}")
    for name, poles in (("inside", ps.inside), ("on circle", ps.on_circle), ("outside", ps.outside)):
        desc = ", ".join(f"{_c(p)} (x{k})" for p, k in poles) or "none"
        print(f"poles {name}: {desc}")
    print(f"growth: M = {gr.M}, K = {gr.K:.6g}, bounded = {gr.bounded}")
    out = Path(cfg.out_dir)
    stem = _stem(args)
    _write(out, f"{stem}_realization.json",
           json.dumps(realization_to_dict(real), indent=1, sort_keys=True) + "\n")
    _write(out, f"{stem}_markov.csv", markov_csv(coeff_window(real, _MARKOV_J)))
    return 0


def _sweep(args, cfg):
    real = split_and_realize(load_symbol(args.symbol), cfg)
    return real, ess_spectrum_sweep(real, cfg.n_theta, cfg)


def _report_cloud(cloud) -> None:
    if cloud.whole_plane:
        print("essential spectrum: whole plane")
    else:
        print(f"essential spectrum: {cloud.lam.size} sample points")
    print("E(Omega): " + (", ".join(_c(v) for v in cloud.e_set) or "empty"))


def _write_cloud(out, stem, cloud) -> None:
    _write(out, f"{stem}_ess.csv", ess_cloud_csv(cloud))
    _write(out, f"{stem}_ess.json", ess_cloud_sidecar(cloud))
    _write(out, f"{stem}_ess.svg", scatter_svg(cloud, f"essential spectrum: {stem}"))


def cmd_ess_spec(args, cfg) -> int:
    _, cloud = _sweep(args, cfg)
    _report_cloud(cloud)
    _write_cloud(Path(cfg.out_dir), _stem(args), cloud)
    return 0


def cmd_e_set(args, cfg) -> int:
    real = split_and_realize(load_symbol(args.symbol), cfg)
    E = compute_E(detL_coeffs(assemble_L(real)))
    print("E(Omega): " + (", ".join(_c(v) for v in E) or "empty"))
    _write(Path(cfg.out_dir), f"{_stem(args)}_e_set.json",
           json.dumps({"e_set": [[v.real, v.imag] for v in map(complex, E)]}) + "\n")
    return 0


def cmd_resolvent(args, cfg) -> int:
    real = split_and_realize(load_symbol(args.symbol), cfg)
    lam = args.lam
    out = solve_stabilizing(RiccatiProblem(real, lam), cfg)
    print(f"lambda = {_c(lam)}: {out.verdict.value}"
          + (f" ({out.certificate})" if out.certificate else ""))
    if out.alpha_circ is not None and out.A_circ is not None:
        rA = max(np.abs(np.linalg.eigvals(out.A_circ)), default=0.0) if out.A_circ.size else 0.0
        ra = max(np.abs(np.linalg.eigvals(out.alpha_circ)), default=0.0) if out.alpha_circ.size else 0.0
        print(f"rho(A_circ) = {rA:.6g}, rho(alpha_circ) = {ra:.6g}")
    _write(Path(cfg.out_dir), f"{_stem(args)}_verdict.json",
           json.dumps(outcome_to_dict(lam, out), indent=1, sort_keys=True) + "\n")
    return 0


def _classify(args, cfg, real, cloud) -> None:
    out, stem = Path(cfg.out_dir), _stem(args)
    rm = classify_components(cloud, real, cfg)
    for rep in rm.representatives:
        print(f"component {rep.component}: probe {_c(rep.lam)} -> {rep.outcome.verdict.value}"
              + (f" ({rep.outcome.certificate})" if rep.outcome.certificate else ""))
    if rm.far_field is not None:
        print(f"far field: probe {_c(rm.far_field.lam)} -> {rm.far_field.outcome.verdict.value}")
    verdicts = [dict(component=r.component, **outcome_to_dict(r.lam, r.outcome))
                for r in rm.representatives]
    if rm.far_field is not None:
        verdicts.append(dict(component="far-field", **outcome_to_dict(rm.far_field.lam, rm.far_field.outcome)))
    _write(out, f"{stem}_regions.csv", region_map_csv(rm))
    _write(out, f"{stem}_regions.svg", region_svg(rm, f"spectrum: {stem}"))
    _write(out, f"{stem}_verdicts.json", json.dumps(verdicts, indent=1, sort_keys=True) + "\n")


def cmd_classify(args, cfg) -> int:
    real, cloud = _sweep(args, cfg)
    _classify(args, cfg, real, cloud)
    return 0


def cmd_spectrum(args, cfg) -> int:
    real, cloud = _sweep(args, cfg)
    _report_cloud(cloud)
    _write_cloud(Path(cfg.out_dir), _stem(args), cloud)
    _classify(args, cfg, real, cloud)
    return 0


def cmd_example(args, cfg) -> int:
    rep = reproduce_example(args.id, cfg, out_dir=cfg.out_dir)
    for line in rep.lines():
        print(line)
    for f in rep.figures:
        print(f"wrote {f}")
    return 0 if rep.passed else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-theta", type=int, default=720, help="angles on the unit circle")
    common.add_argument("--grid-n", type=int, default=400, help="raster cells per side")
    common.add_argument("--rank-tol", type=float, default=1e-9)
    common.add_argument("--ric-tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")

    p = argparse.ArgumentParser(prog="unbounded-toeplitz",
                                description="Spectra of Toeplitz operators with rational symbols")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
            ("realize", cmd_realize, "state-space realization and Markov coefficients"),
            ("ess-spec", cmd_ess_spec, "essential spectrum point cloud"),
            ("e-set", cmd_e_set, "exceptional set E(Omega)"),
            ("resolvent", cmd_resolvent, "resolvent test at one lambda"),
            ("classify", cmd_classify, "label the components of the complement"),
            ("spectrum", cmd_spectrum, "full pipeline")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("symbol", help="symbol JSON file")
        sp.set_defaults(func=fn)
        if name == "resolvent":
            sp.add_argument("--lambda", dest="lam", type=_parse_lambda, required=True,
                            metavar="RE,IM")
    sp = sub.add_parser("example", parents=[common], help="reproduce a bundled example")
    sp.add_argument("id", type=int, choices=range(1, 6), metavar="N")
    sp.set_defaults(func=cmd_example)
    return p


def _glue_lambda(argv: list[str]) -> list[str]:
    # "--lambda -2.5,0" would be read as an option; glue the value on
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--lambda" and i + 1 < len(argv):
            out.append(f"--lambda={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_glue_lambda(argv))
    try:
        cfg = _cfg(args)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        return args.func(args, cfg)
    except (SymbolFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ToeplitzError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
