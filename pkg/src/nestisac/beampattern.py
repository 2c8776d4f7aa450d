"""Beam pattern of two-level nested arrays and its main-lobe / side-lobe metrics.

The pattern ``G(delta)`` is the squared normalized correlation of two steering
vectors whose sines differ by ``delta``.  For a nested array it splits into an
inner Dirichlet kernel ``f``, an outer one ``g`` and a relative phase ``phi``::

    G = (f**2 + g**2 + 2 f g cos(phi)) / M**2

Closed-form thresholds and bounds live next to brute-force numeric oracles
(:func:`gain_direct`, :func:`flmp_numeric`) that never use the decomposition.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegeneratePatternError, DomainError, RegimeError
from .geometry import ArrayGeometry, build_nested

__all__ = [
    "PatternDecomposition",
    "PlmrResult",
    "GratingLobe",
    "BeamPatternMetrics",
    "gain_direct",
    "gain_closed_form",
    "gain_decomposed",
    "dirichlet",
    "null_points",
    "n_ap",
    "n_th",
    "regime",
    "delta_int",
    "delta_int_forms",
    "flmp_bounds",
    "flmp_numeric",
    "p_terms",
    "plmr",
    "grating_lobes",
    "metrics",
    "pattern_samples",
]

# |sin(x)| below this switches the Dirichlet ratio to its L'Hopital limit
SINGULAR_TOL = 1e-9
# N_th search: samples over (0, delta2] and the positivity threshold on dG/dDelta
NTH_SAMPLES = 2000
NTH_POSITIVE = 1e-9
FLMP_XTOL = 1e-10
FLMP_OVERSAMPLE = 50
NULL_GAIN = 1e-14


def _check_delta(delta: np.ndarray) -> None:
    if np.any(np.abs(delta) > 2.0 + 1e-12):
        raise DomainError("spatial-angle difference must satisfy |delta| <= 2")


def gain_direct(geom: ArrayGeometry, delta):
    """``|sum_m exp(j pi (p_m - 1) delta)|**2 / M**2`` by explicit summation.

    Accepts a scalar or an array of ``delta`` values and returns the same shape.
    """
    d = np.asarray(delta, dtype=float)
    _check_delta(d)
    p = geom.as_array() - 1.0
    phases = np.exp(1j * np.pi * np.multiply.outer(d, p))
    out = np.abs(phases.sum(axis=-1)) ** 2 / geom.size**2
    return float(out) if out.ndim == 0 else out


def dirichlet(n: int, x):
    """``sin(n x) / sin(x)`` with the limit ``n cos(n x) / cos(x)`` near zeros of ``sin(x)``."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    singular = np.abs(s) < SINGULAR_TOL
    safe = np.where(singular, 1.0, s)
    out = np.where(singular, n * np.cos(n * x) / np.cos(x), np.sin(n * x) / safe)
    return float(out) if out.ndim == 0 else out


def _terms(n1: int, n2: int, delta):
    x = 0.5 * np.pi * np.asarray(delta, dtype=float)
    f = dirichlet(n1, x)
    g = dirichlet(n2, (n1 + 1) * x)
    phi = n2 * (n1 + 1) * x
    return f, g, phi


def gain_closed_form(n1: int, n2: int, delta):
    """Vectorized decomposed gain; see :func:`gain_decomposed` for the scalar record."""
    d = np.asarray(delta, dtype=float)
    _check_delta(d)
    f, g, phi = _terms(n1, n2, d)
    out = (f * f + g * g + 2.0 * f * g * np.cos(phi)) / (n1 + n2) ** 2
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PatternDecomposition:
    f: float
    g: float
    phi: float
    gain: float


def gain_decomposed(n1: int, n2: int, delta: float) -> PatternDecomposition:
    if n1 < 1 or n2 < 1:
        raise DomainError("decomposition needs n1 >= 1 and n2 >= 1")
    _check_delta(np.asarray(delta))
    f, g, phi = (float(v) for v in _terms(n1, n2, float(delta)))
    gain = (f * f + g * g + 2.0 * f * g * math.cos(phi)) / (n1 + n2) ** 2
    return PatternDecomposition(f, g, phi, gain)


def null_points(n1: int, n2: int) -> tuple[float, float, float]:
    """First nulls of ``f``, ``g`` and ``cos(phi)``: ``(2/N1, 2/((N1+1)N2), 1/((N1+1)N2))``."""
    if n1 < 1:
        raise DomainError("delta1 = 2/N1 is undefined for N1 = 0")
    if n2 < 1:
        raise DomainError("delta2 and delta3 are undefined for N2 = 0")
    return 2.0 / n1, 2.0 / ((n1 + 1) * n2), 1.0 / ((n1 + 1) * n2)


def n_ap(n1: int) -> int:
    """N2 above which the inner Dirichlet term can be treated as constant."""
    if n1 < 1:
        raise DomainError("n_ap needs n1 >= 1")
    # integer isqrt keeps floor exact: floor(sqrt(a/b)) == isqrt(a // b)
    return math.isqrt((10 * n1 * n1) // (n1 + 1))


@lru_cache(maxsize=None)
def n_th(n1: int) -> int:
    """Largest N2 whose pattern decreases monotonically on ``(0, delta2]``.

    For each candidate ``N2 = 1, 2, ...`` the closed-form gain is differentiated
    by central differences at ``NTH_SAMPLES`` points of ``(0, delta2]``; the
    first ``N2`` showing a derivative above ``NTH_POSITIVE`` ends the search.
    """
    if n1 < 1:
        raise DomainError("n_th needs n1 >= 1")
    if n1 < 7:
        return 1
    for n2 in range(1, n1 + 1):
        d2 = 2.0 / ((n1 + 1) * n2)
        x = np.linspace(0.0, d2, NTH_SAMPLES + 1)[1:]
        h = 1e-7 * d2
        deriv = (gain_closed_form(n1, n2, x + h) - gain_closed_form(n1, n2, x - h)) / (2 * h)
        if np.any(deriv > NTH_POSITIVE):
            return n2 - 1
    return n1


def regime(n1: int, n2: int) -> str:
    """Main-lobe regime: ``small_N2``, ``mid_N2``, ``large_N2``, or ``ula`` when degenerate.

    Boundaries are half-open: ``[2, N_th]``, ``(N_th, N_ap]``, ``(N_ap, inf)``.
    """
    if n1 < 1 or n2 <= 1:
        return "ula"
    if n2 <= n_th(n1):
        return "small_N2"
    if n2 <= n_ap(n1):
        return "mid_N2"
    return "large_N2"


def _g_of_phi(n2: int, phi):
    # outer Dirichlet term written in terms of phi = pi N2 (N1+1) delta / 2
    return dirichlet(n2, np.asarray(phi) / n2)


def _delta_from_phi(n1: int, n2: int, phi: float) -> float:
    return 2.0 * phi / (np.pi * n2 * (n1 + 1))


def delta_int(n1: int, n2: int, check_regime: bool = True) -> float:
    """Crossing of the pattern trajectory with the ``|f(0)|`` contour.

    Solves ``cos(phi) = -g(phi) / (2 N1)`` for ``phi`` in ``[pi/2, pi]`` and maps
    the root back to ``delta``.  The result lies strictly between delta3 and
    delta2.
    """
    if check_regime and n2 <= n_ap(n1):
        raise RegimeError(f"delta_int needs n2 > n_ap(n1) = {n_ap(n1)}, got n2 = {n2}")
    if n1 < 1 or n2 < 2:
        raise RegimeError("delta_int needs n1 >= 1 and n2 >= 2")
    fc = float(n1)

    def residual(phi):
        return math.cos(phi) + float(_g_of_phi(n2, phi)) / (2.0 * fc)

    phi = brentq(residual, 0.5 * np.pi, np.pi, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    return _delta_from_phi(n1, n2, phi)


def delta_int_forms(n1: int, n2: int) -> dict:
    """Roots of both sign conventions of the delta_int equation, for diagnostics.

    ``minus`` is ``cos(phi) = -g/(2 f0)`` (used by :func:`delta_int`); ``plus``
    is ``cos(phi) = +g/(2 f0)``.  Each entry is the root in ``[pi/2, pi]`` mapped
    to delta, or ``None`` when that form has no sign change there.
    """
    out = {}
    for name, sign in (("minus", 1.0), ("plus", -1.0)):
        def residual(phi, sign=sign):
            return math.cos(phi) + sign * float(_g_of_phi(n2, phi)) / (2.0 * n1)

        a, b = 0.5 * np.pi, np.pi
        if residual(a) * residual(b) < 0:
            out[name] = _delta_from_phi(n1, n2, brentq(residual, a, b, xtol=1e-12))
        else:
            out[name] = None
    return out


def flmp_bounds(n1: int, n2: int) -> tuple[float, float]:
    """Interval that must contain the first local minimum for the regime of ``(n1, n2)``."""
    reg = regime(n1, n2)
    if reg == "ula":
        raise RegimeError("no bounds for a degenerate (ULA) configuration")
    _, d2, d3 = null_points(n1, n2)
    if reg == "small_N2":
        return (n2 - 1) * d2, 2.0 / (n1 + 1)
    if reg == "mid_N2":
        return d3, d2
    return delta_int(n1, n2), d2


def flmp_numeric(geom: ArrayGeometry) -> float:
    """First strict local minimum of ``G`` on ``(0, 2]`` by brute-force scan.

    The scan step is ``1 / (50 * aperture)`` (which equals ``delta3 / 50`` for a
    nested array) or ``2 / (50 M)`` for a compact ULA.  The bracketing grid
    cell is refined with a bounded scalar minimizer to ``FLMP_XTOL``.
    """
    if geom.ula_equivalent:
        step = 2.0 / (FLMP_OVERSAMPLE * geom.size)
    else:
        step = 1.0 / (FLMP_OVERSAMPLE * geom.aperture)
    chunk = 8192
    start = 0
    n_total = int(math.floor(2.0 / step))
    while start < n_total:
        idx = np.arange(start, min(start + chunk + 2, n_total + 1))
        x = idx * step
        g = gain_direct(geom, x)
        inner = (g[1:-1] < g[:-2]) & (g[1:-1] <= g[2:])
        hits = np.flatnonzero(inner)
        if hits.size:
            k = hits[0] + 1
            res = minimize_scalar(
                lambda t: gain_direct(geom, t),
                bounds=(x[k - 1], x[k + 1]),
                method="bounded",
                options={"xatol": FLMP_XTOL},
            )
            return float(res.x)
        start += chunk
    raise DegeneratePatternError(f"no local minimum of the beam pattern on (0, 2] for {geom}")


def p_terms(n1: int, n2: int) -> dict:
    """Gain samples P1..P5 (and P_int in the large-N2 regime) from the closed forms.

    ``P4`` and ``P5`` use the reduced expressions that hold because ``g``
    vanishes at ``(N2 - 1) delta2`` and ``|g| = N2`` with ``cos(phi) = +-1`` at
    ``N2 delta2``.
    """
    d1, d2, d3 = null_points(n1, n2)
    m2 = float((n1 + n2) ** 2)
    f = lambda d: float(_terms(n1, n2, d)[0])  # noqa: E731
    g = lambda d: float(_terms(n1, n2, d)[1])  # noqa: E731
    terms = {
        "P1": g(d1) ** 2 / m2,
        "P2": f(d2) ** 2 / m2,
        "P3": (f(d3) ** 2 + g(d3) ** 2) / m2,
        "P4": f((n2 - 1) * d2) ** 2 / m2,
        "P5": (f(n2 * d2) ** 2 + n2**2 - 2 * n2 * f(n2 * d2)) / m2,
    }
    if n2 >= 2:
        terms["P_int"] = gain_closed_form(n1, n2, delta_int(n1, n2, check_regime=False))
    return terms


@dataclass(frozen=True)
class PlmrResult:
    lower_bound: float
    numeric: float
    regime: str
    terms: dict = field(default_factory=dict)
    cases: tuple[str, ...] = ()


_PLMR_CASES = {
    "small_N2": ("P4", "P5"),
    "mid_N2": ("P3", "P2"),
    "large_N2": ("P_int", "P2"),
}


def plmr(n1: int, n2: int, flmp: float | None = None) -> PlmrResult:
    """Peak-to-local-minimum ratio: lower bound from the P terms and the numeric value.

    At ``n2 == n_th`` or ``n2 == n_ap`` both adjacent cases apply; the larger
    (tighter) of their bounds is reported and ``cases`` names both.
    """
    reg = regime(n1, n2)
    geom = build_nested(n1, n2)
    if flmp is None:
        flmp = flmp_numeric(geom)
    g_min = gain_direct(geom, flmp)
    # an exact null (compact ULA) leaves only rounding residue in g_min
    numeric = 1.0 / g_min if g_min > NULL_GAIN else math.inf
    if reg == "ula":
        return PlmrResult(math.inf, numeric, reg)
    terms = p_terms(n1, n2)
    cases = [reg]
    if n2 == n_th(n1) and reg == "small_N2":
        cases.append("mid_N2")
    if n2 == n_ap(n1) and reg == "mid_N2":
        cases.append("large_N2")
    bound = max(max(1.0 / terms[a], 1.0 / terms[b]) for a, b in (_PLMR_CASES[c] for c in cases))
    return PlmrResult(bound, numeric, reg, terms, tuple(cases))


@dataclass(frozen=True)
class GratingLobe:
    order: int
    position: float
    predicted_height: float
    measured_position: float
    measured_height: float
    reliable: bool


def grating_lobes(n1: int, n2: int, window_samples: int = 2001) -> list[GratingLobe]:
    """Predicted outer-subarray grating lobes with measured peaks of the direct pattern.

    Lobes sit near ``2 n / (N1 + 1)`` for ``n = 1..N1`` with height about
    ``(N2 - 1)**2 / M**2``.  Each measured peak is the maximum of the direct
    pattern within ``+-delta2`` of the prediction.  Predictions for
    ``n2 <= n_ap(n1)`` are flagged unreliable since the inner subarray then
    swamps the outer lobes.
    """
    if n1 < 1 or n2 < 1:
        return []
    geom = build_nested(n1, n2)
    m = n1 + n2
    _, d2, _ = null_points(n1, n2)
    height = (n2 - 1) ** 2 / m**2
    reliable = n2 > 1 and n2 > n_ap(n1)
    lobes = []
    for n in range(1, n1 + 1):
        pos = 2.0 * n / (n1 + 1)
        if pos > 2.0:
            break
        lo, hi = max(pos - d2, 0.0), min(pos + d2, 2.0)
        x = np.linspace(lo, hi, window_samples)
        gx = gain_direct(geom, x)
        k = int(np.argmax(gx))
        a, b = x[max(k - 1, 0)], x[min(k + 1, x.size - 1)]
        res = minimize_scalar(lambda t: -gain_direct(geom, t), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun >= gx[k]:
            peak_pos, peak = float(res.x), float(-res.fun)
        else:
            peak_pos, peak = float(x[k]), float(gx[k])
        lobes.append(GratingLobe(n, pos, height, peak_pos, peak, reliable))
    return lobes


@dataclass(frozen=True)
class BeamPatternMetrics:
    n1: int
    n2: int
    m: int
    regime: str
    delta1: float | None
    delta2: float | None
    delta3: float | None
    n_th: int | None
    n_ap: int | None
    flmp_lower: float | None
    flmp_upper: float | None
    flmp_numeric: float
    bw: float
    plmr_lower: float
    plmr_numeric: float
    delta_int: float | None
    slh_predicted: float
    grating_lobes: tuple[GratingLobe, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grating_lobes"] = [asdict(g) for g in self.grating_lobes]
        return d

    def scalar_items(self) -> list[tuple[str, object]]:
        """Flat ``(name, value)`` pairs without the lobe table, for CSV output."""
        return [(k, v) for k, v in self.to_dict().items() if k != "grating_lobes"]


def metrics(n1: int, n2: int) -> BeamPatternMetrics:
    geom = build_nested(n1, n2)
    m = geom.size
    reg = regime(n1, n2)
    flmp = flmp_numeric(geom)
    p = plmr(n1, n2, flmp)
    lobes = tuple(grating_lobes(n1, n2))
    slh = (n2 - 1) ** 2 / m**2 if n2 >= 1 else 0.0
    if reg == "ula":
        d1 = 2.0 / n1 if n1 >= 1 else None
        d2 = d3 = None
        if n1 >= 1 and n2 >= 1:
            d1, d2, d3 = null_points(n1, n2)
        return BeamPatternMetrics(
            n1, n2, m, reg, d1, d2, d3,
            n_th(n1) if n1 >= 1 else None, n_ap(n1) if n1 >= 1 else None,
            None, None, flmp, 2.0 * flmp, p.lower_bound, p.numeric, None, slh, lobes,
        )
    d1, d2, d3 = null_points(n1, n2)
    lo, hi = flmp_bounds(n1, n2)
    dint = delta_int(n1, n2) if reg == "large_N2" else None
    return BeamPatternMetrics(
        n1, n2, m, reg, d1, d2, d3, n_th(n1), n_ap(n1), lo, hi, flmp, 2.0 * flmp,
        p.lower_bound, p.numeric, dint, slh, lobes,
    )


def pattern_samples(geom: ArrayGeometry, samples: int, lo: float = -2.0, hi: float = 2.0):
    """``(delta, gain)`` arrays on a uniform grid, for pattern dumps and plots."""
    if samples < 2:
        raise DomainError("need at least two samples")
    delta = np.linspace(lo, hi, samples)
    return delta, gain_direct(geom, delta)
