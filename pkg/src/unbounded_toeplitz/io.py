"""Reading and writing symbols, realizations, point clouds and region maps.

Complex numbers are stored in JSON as ``[re, im]`` pairs and matrices as
row-major nests of such pairs.  Every file is written to a temporary name in
the target directory and renamed into place, so a failed run leaves no
partial output.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .hokalman import CoeffWindow
from .pencil import EssCloud
from .ratsym import RationalMatrix, RationalScalar, Realization
from .riccati import Label, RegionMap, RiccatiOutcome

__all__ = [
    "SymbolFormatError", "atomic_write", "load_symbol", "symbol_from_dict",
    "symbol_to_dict", "realization_to_dict", "realization_from_dict",
    "coeff_window_to_dict", "coeff_window_from_dict", "outcome_to_dict",
    "markov_csv", "toeplitz_csv", "ess_cloud_csv", "ess_cloud_sidecar",
    "region_map_csv", "scatter_svg", "region_svg", "fmt_complex",
]


class SymbolFormatError(ValueError):
    """Input JSON does not follow the expected schema."""


# ---------------------------------------------------------------------------
# low level


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _unpair(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise SymbolFormatError(f"expected [re, im], got {v!r}")


def _mat_nest(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[_pair(x) for x in row] for row in M]


def _nest_mat(nest, rows=None, cols=None) -> np.ndarray:
    if not isinstance(nest, list):
        raise SymbolFormatError("matrix must be a list of rows")
    data = [[_unpair(x) for x in row] for row in nest]
    if rows is not None and cols is not None:
        if len(data) != rows or any(len(r) != cols for r in data):
            if rows * cols == 0 and all(len(r) == 0 for r in data):
                return np.zeros((rows, cols), dtype=complex)
            raise SymbolFormatError(f"matrix is not {rows}x{cols}")
        return np.array(data, dtype=complex).reshape(rows, cols)
    if data and any(len(r) != len(data[0]) for r in data):
        raise SymbolFormatError("ragged matrix")
    return np.array(data, dtype=complex).reshape(len(data), len(data[0]) if data else 0)


def fmt_complex(z) -> str:
    """``re+imj`` with round-trip precision; ``complex()`` parses it back."""
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# symbols


def symbol_from_dict(d) -> RationalMatrix:
    """Build a symbol from the parsed JSON schema.

    ``{"m": int, "entries": [[{"num": [[re, im], ...], "den": [...],
    "den_factored": {"lead": [re, im], "poles": [[[re, im], mult], ...]}}]]}``
    with ascending coefficients; ``den_factored`` is optional.
    """
    if not isinstance(d, dict) or "m" not in d or "entries" not in d:
        raise SymbolFormatError('symbol needs keys "m" and "entries"')
    m = d["m"]
    rows = d["entries"]
    if not isinstance(m, int) or m < 1:
        raise SymbolFormatError('"m" must be a positive integer')
    if not isinstance(rows, list) or len(rows) != m or any(
            not isinstance(r, list) or len(r) != m for r in rows):
        raise SymbolFormatError(f'"entries" must be an {m}x{m} grid')
    out = []
    for r in rows:
        row = []
        for e in r:
            if not isinstance(e, dict) or "num" not in e or "den" not in e:
                raise SymbolFormatError('each entry needs "num" and "den"')
            num = [_unpair(c) for c in e["num"]]
            den = [_unpair(c) for c in e["den"]]
            fac = None
            if e.get("den_factored") is not None:
                f = e["den_factored"]
                try:
                    fac = (_unpair(f["lead"]),
                           [(_unpair(p), int(k)) for p, k in f["poles"]])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SymbolFormatError(f"bad den_factored: {exc}") from exc
            try:
                row.append(RationalScalar(np.array(num or [0.0]), np.array(den), fac))
            except ValueError as exc:
                raise SymbolFormatError(str(exc)) from exc
        out.append(tuple(row))
    return RationalMatrix(tuple(out))


def symbol_to_dict(sym: RationalMatrix) -> dict:
    entries = []
    for row in sym.entries:
        out = []
        for e in row:
            d = {"num": [_pair(c) for c in e.num], "den": [_pair(c) for c in e.den]}
            if e.den_factored is not None:
                lead, poles = e.den_factored
                d["den_factored"] = {"lead": _pair(lead),
                                     "poles": [[_pair(p), k] for p, k in poles]}
            out.append(d)
        entries.append(out)
    return {"m": sym.m, "entries": entries}


def load_symbol(path) -> RationalMatrix:
    """Read a symbol JSON file; any schema or syntax problem raises SymbolFormatError.

    The symbol may sit at the top level or under a ``"symbol"`` key (the
    layout of the bundled example files).
    """
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SymbolFormatError(f"{path}: {exc}") from exc
    if isinstance(d, dict) and "symbol" in d and "entries" not in d:
        d = d["symbol"]
    return symbol_from_dict(d)


# ---------------------------------------------------------------------------
# realizations and coefficient windows

_REAL_KEYS = ("R0", "A", "B", "C", "alpha", "beta", "gamma")


def realization_to_dict(real: Realization) -> dict:
    out = {}
    for k in _REAL_KEYS:
        M = np.asarray(getattr(real, k), dtype=complex)
        out[k] = {"rows": int(M.shape[0]), "cols": int(M.shape[1]),
                  "data": [[_pair(x) for x in row] for row in M]}
    return out


def realization_from_dict(d) -> Realization:
    try:
        mats = {k: _nest_mat(d[k]["data"], d[k]["rows"], d[k]["cols"]) for k in _REAL_KEYS}
    except (KeyError, TypeError) as exc:
        raise SymbolFormatError(f"bad realization: {exc}") from exc
    return Realization(**mats)


def coeff_window_to_dict(cw: CoeffWindow) -> dict:
    return {"m": cw.m, "J": cw.J, "a0": _mat_nest(cw.a0),
            "plus": [_mat_nest(a) for a in cw.plus],
            "minus": [_mat_nest(a) for a in cw.minus]}


def coeff_window_from_dict(d) -> CoeffWindow:
    m = d["m"]
    return CoeffWindow(m, d["J"], _nest_mat(d["a0"], m, m),
                       [_nest_mat(a, m, m) for a in d["plus"]],
                       [_nest_mat(a, m, m) for a in d["minus"]])


def outcome_to_dict(lam: complex, out: RiccatiOutcome) -> dict:
    def mat(M):
        if M is None:
            return None
        M = np.asarray(M, dtype=complex)
        return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": _mat_nest(M) if M.size else []}

    return {"lambda": _pair(lam), "verdict": out.verdict.value,
            "certificate": out.certificate,
            "residual": None if not np.isfinite(out.residual) else float(out.residual),
            "detail": out.detail, "Q": mat(out.Q), "A_circ": mat(out.A_circ),
            "alpha_circ": mat(out.alpha_circ)}


# ---------------------------------------------------------------------------
# CSV


def markov_csv(cw: CoeffWindow) -> str:
    """One line per coefficient: ``k, row, col, value`` for ``k = -J..J``."""
    rows = []
    for k in range(-cw.J, cw.J + 1):
        a = cw.a(k)
        for i in range(cw.m):
            for j in range(cw.m):
                rows.append([k, i, j, fmt_complex(a[i, j])])
    return _csv_text(["k", "row", "col", "value"], rows)


def toeplitz_csv(T: np.ndarray, m: int) -> str:
    """One line per block-row of the truncation, flattened row-major."""
    T = np.asarray(T)
    rows = [[fmt_complex(x) for x in T[r:r + m].ravel()] for r in range(0, T.shape[0], m)]
    return _csv_text(None, rows)


def ess_cloud_csv(cloud: EssCloud) -> str:
    rows = [[_fmt(t), _fmt(z.real), _fmt(z.imag)] for t, z in zip(cloud.theta, cloud.lam)]
    return _csv_text(["theta", "re_lambda", "im_lambda"], rows)


def ess_cloud_sidecar(cloud: EssCloud) -> str:
    return _json_text({"whole_plane": cloud.whole_plane,
                       "degenerate_nu": [_pair(v) for v in cloud.degenerate_nus],
                       "e_set": [_pair(v) for v in cloud.e_set],
                       "n_theta": int(len(cloud.thetas)),
                       "n_points": int(cloud.lam.size)})


def region_map_csv(rm: RegionMap) -> str:
    rows = []
    for i, y in enumerate(rm.im):
        for j, x in enumerate(rm.re):
            rows.append([_fmt(x), _fmt(y), Label(int(rm.labels[i, j])).name])
    return _csv_text(["re", "im", "label"], rows)


# ---------------------------------------------------------------------------
# SVG

_COLORS = {Label.ESS_BAND: "#222222", Label.RESOLVENT: "#ffffff",
           Label.SPECTRUM: "#7fa7d9", Label.UNKNOWN: "#f0c05a"}


class _Canvas:
    def __init__(self, box, size=600):
        self.x0, self.x1, self.y0, self.y1 = box
        self.size = size
        self.sx = size / (self.x1 - self.x0)
        self.sy = size / (self.y1 - self.y0)
        self.items: list[str] = []

    def xy(self, z):
        return (z.real - self.x0) * self.sx, (self.y1 - z.imag) * self.sy

    def text(self, title: str) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">\n'
                f"<title>{title}</title>\n")
        return head + "\n".join(self.items) + "\n</svg>\n"

    def axes(self):
        ox, oy = self.xy(0j)
        self.items.append(f'<line x1="0" y1="{oy:.2f}" x2="{self.size}" y2="{oy:.2f}" '
                          'stroke="#999" stroke-width="0.5"/>')
        self.items.append(f'<line x1="{ox:.2f}" y1="0" x2="{ox:.2f}" y2="{self.size}" '
                          'stroke="#999" stroke-width="0.5"/>')

    def circle(self):
        ox, oy = self.xy(0j)
        self.items.append(f'<ellipse cx="{ox:.2f}" cy="{oy:.2f}" rx="{self.sx:.2f}" '
                          f'ry="{self.sy:.2f}" fill="none" stroke="#c33" stroke-width="0.8"/>')

    def dots(self, pts, color="#000", r=0.9):
        for z in pts:
            if self.x0 <= z.real <= self.x1 and self.y0 <= z.imag <= self.y1:
                x, y = self.xy(z)
                self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')


def _cloud_box(pts: np.ndarray):
    pts = pts[np.isfinite(pts)]
    R = max(2.0, 5 * float(np.median(np.abs(pts)))) if pts.size else 2.0
    pts = pts[np.abs(pts) <= R]
    if pts.size == 0:
        return -2.0, 2.0, -2.0, 2.0
    h = 1.25 * max(1.2, np.max(np.abs(pts.real)), np.max(np.abs(pts.imag)))
    return -h, h, -h, h


def scatter_svg(cloud: EssCloud, title: str = "essential spectrum") -> str:
    """Scatter plot of the cloud with the unit circle and the axes."""
    cv = _Canvas(_cloud_box(cloud.lam))
    cv.axes()
    cv.circle()
    if cloud.whole_plane:
        cv.items.append(f'<text x="10" y="20" font-size="14">whole plane</text>')
    cv.dots(cloud.finite())
    cv.dots(np.asarray(cloud.e_set, dtype=complex), color="#c33", r=3)
    return cv.text(title)


def region_svg(rm: RegionMap, title: str = "region map") -> str:
    """Heat map of the labels (one rect per run of equal cells) with the cloud on top."""
    dx = rm.re[1] - rm.re[0]
    dy = rm.im[1] - rm.im[0]
    box = (rm.re[0] - dx / 2, rm.re[-1] + dx / 2, rm.im[0] - dy / 2, rm.im[-1] + dy / 2)
    cv = _Canvas(box)
    w, h = dx * cv.sx, dy * cv.sy
    for i in range(rm.labels.shape[0]):
        row = rm.labels[i]
        y = (box[3] - rm.im[i] - dy / 2) * cv.sy
        start = 0
        for j in range(1, row.size + 1):
            if j == row.size or row[j] != row[start]:
                color = _COLORS[Label(int(row[start]))]
                cv.items.append(f'<rect x="{start * w:.2f}" y="{y:.2f}" width="{(j - start) * w + 0.3:.2f}" '
                                f'height="{h + 0.3:.2f}" fill="{color}"/>')
                start = j
    cv.axes()
    cv.circle()
    cv.dots(rm.band_points, color="#000", r=0.6)
    return cv.text(title)
