"""Resolvent and Green's function of the unperturbed walk.

For lambda off the spectrum the resolvent (lambda - P)^(-1) has kernel
G_lambda(x, y) = G_lambda(0, y - x), and the rescaled diagonal

    g_lambda(x) = lambda * G_lambda(0, x)

drives everything downstream: the excess essential spectrum solves
g_lambda(0) = 1 + 1/v, and Birman-Schwinger matrices are built from
off-diagonal Green values.  Three mutually checking evaluation routes are
provided: torus quadrature (any dimension), a Neumann power series valid
for |lambda| > 1 (path counting, independent of Fourier analysis), and the
explicit closed form for the 1d lazy walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    LambdaInSpectrum,
    NonPositiveValue,
    QuadratureNotConverged,
    SeriesDiverges,
    TooFewPoints,
)
from .lattice import LatticeBox, WalkKernel, apply_P, char_on_grid

#: points where spectrum proximity is rejected outright
SPECTRUM_GUARD = 1e-12


@dataclass(frozen=True)
class GreenEvaluation:
    """One evaluated resolvent quantity with a method tag and error estimate."""

    lam: float
    value: float
    method: str
    est_error: float


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential-decay fit of positive samples."""

    rate: float
    prefactor: float
    residual_rms: float
    npoints: int


def _guard_spectrum(kernel: WalkKernel, lam: float) -> None:
    if kernel.lower - SPECTRUM_GUARD <= lam <= 1.0 + SPECTRUM_GUARD:
        raise LambdaInSpectrum(
            f"lambda={lam!r} inside [{kernel.lower!r}, 1]; resolvent undefined there"
        )


def _mean_levels(kernel: WalkKernel, lam: float, pts: int, weights=None):
    """Integrand means at grid levels pts, 2*pts, 4*pts.

    weights, if given, is a callable mapping the flattened theta grid of a
    level to a cosine weight array (for off-diagonal Green values).
    Returns (means, mean_abs) with mean_abs the absolute mean at the finest
    level; it sets the rounding-noise floor for the convergence check
    (near-singular integrands amplify cancellation noise far above eps).
    """
    means = []
    mean_abs = 0.0
    for level in (pts, 2 * pts, 4 * pts):
        phat = char_on_grid(kernel, level)
        integrand = 1.0 / (lam - phat)
        if weights is not None:
            integrand = integrand * weights(level)
        means.append(float(np.mean(integrand)))
        mean_abs = float(np.mean(np.abs(integrand)))
    return means, mean_abs


def _axis(level: int) -> np.ndarray:
    return -np.pi + (np.arange(level) + 0.5) * (2.0 * np.pi / level)


def _cos_weights(kernel: WalkKernel, x: tuple[int, ...]):
    d = kernel.dimension

    def weights(level: int) -> np.ndarray:
        ax = _axis(level)
        phase = np.zeros((level,) * d)
        for a, coord in enumerate(x):
            if coord:
                shape = [1] * d
                shape[a] = level
                phase = phase + (coord * ax).reshape(shape)
        return np.cos(phase).ravel()

    return weights


def _richardson(vals, scale: float, noise_scale: float = 0.0) -> float:
    """Error estimate from three grid levels; raises if not contracting.

    Differences below the rounding floor (set by the magnitude of the
    integrand, not of its mean, which may be heavily cancelled) count as
    converged.
    """
    d1 = abs(vals[1] - vals[0])
    d2 = abs(vals[2] - vals[1])
    floor = 1e-12 * (1.0 + abs(vals[2])) + 1e-11 * noise_scale
    if d2 > floor and d2 > 0.5 * d1:
        raise QuadratureNotConverged(
            f"grid doubling contracted {d1:.3e} -> {d2:.3e}; refine pts_per_axis"
        )
    return max(d2 * scale, 0.0)


def g_lambda_quadrature(kernel: WalkKernel, lam: float, pts_per_axis: int = 256) -> GreenEvaluation:
    """g_lambda(0) = lambda (2 pi)^-d  integral dtheta / (lambda - p-hat).

    Periodic trapezoid on the torus (spectrally accurate off the spectrum);
    the error estimate compares two grid doublings.
    """
    if pts_per_axis < 64:
        raise ValueError("pts_per_axis must be >= 64")
    _guard_spectrum(kernel, lam)
    means, mean_abs = _mean_levels(kernel, lam, pts_per_axis)
    err = _richardson(means, abs(lam), mean_abs)
    return GreenEvaluation(lam=lam, value=lam * means[2], method="quadrature", est_error=err)


def green_kernel(
    kernel: WalkKernel, lam: float, x, pts_per_axis: int = 256
) -> GreenEvaluation:
    """Green value G_lambda(0, x) by torus quadrature.

    By translation invariance G_lambda(x, y) = G_lambda(0, y - x); by the
    symmetry of p the value depends on x only through +-x.
    """
    if pts_per_axis < 64:
        raise ValueError("pts_per_axis must be >= 64")
    _guard_spectrum(kernel, lam)
    if isinstance(x, (int, np.integer)):
        x = (int(x),)
    x = tuple(int(c) for c in x)
    means, mean_abs = _mean_levels(kernel, lam, pts_per_axis, weights=_cos_weights(kernel, x))
    err = _richardson(means, 1.0, mean_abs)
    return GreenEvaluation(lam=lam, value=means[2], method="quadrature", est_error=err)


def green_table(
    kernel: WalkKernel, lam: float, displacements, pts_per_axis: int = 256
) -> dict[tuple[int, ...], float]:
    """G_lambda(0, x) for many displacements sharing one set of grids."""
    _guard_spectrum(kernel, lam)
    disps = []
    for x in displacements:
        if isinstance(x, (int, np.integer)):
            x = (int(x),)
        disps.append(tuple(int(c) for c in x))
    # canonicalize by symmetry G(0,x) = G(0,-x)
    canon = {x: min(x, tuple(-c for c in x)) for x in disps}
    levels = (pts_per_axis, 2 * pts_per_axis, 4 * pts_per_axis)
    needed = sorted(set(canon.values()))
    vals: dict[tuple[int, ...], list[float]] = {x: [] for x in needed}
    mean_abs = 0.0
    for level in levels:
        phat = char_on_grid(kernel, level)
        base = 1.0 / (lam - phat)
        mean_abs = float(np.mean(np.abs(base)))
        for x in needed:
            w = _cos_weights(kernel, x)(level)
            vals[x].append(float(np.mean(base * w)))
    out = {}
    for x in needed:
        _richardson(vals[x], 1.0, mean_abs)
        out[x] = vals[x][2]
    return {x: out[canon[x]] for x in disps}


def g_lambda_series(kernel: WalkKernel, lam: float, tol: float = 1e-10) -> GreenEvaluation:
    """g_lambda(0) = sum_n lambda^(-n) p_n(0), valid for |lambda| > 1.

    Independent of the Fourier route: return probabilities are accumulated
    by exact repeated convolution, and the tail is bounded geometrically by
    |lambda|^(-n) / (1 - 1/|lambda|).
    """
    if abs(lam) <= 1.0:
        raise SeriesDiverges(f"series needs |lambda| > 1, got {lam!r}")
    ratio = 1.0 / abs(lam)
    n_stop = max(1, int(math.ceil(math.log(tol * (1.0 - ratio)) / math.log(ratio))))
    box = LatticeBox.cube(n_stop * kernel.reach + kernel.reach + 1, kernel.dimension)
    dist = np.zeros(box.shape)
    origin = (box.radius,) * kernel.dimension
    dist[origin] = 1.0
    total = 1.0  # n = 0 term
    power = 1.0
    for n in range(1, n_stop + 1):
        dist = apply_P(kernel, dist, box)
        power /= lam
        total += power * float(dist[origin])
    tail = ratio**n_stop / (1.0 - ratio)
    return GreenEvaluation(lam=lam, value=total, method="series", est_error=tail)


def g_lambda_closed_1d(q: float, lam: float, x: int = 0) -> GreenEvaluation:
    """Closed form of g_lambda(x) for the 1d lazy walk p(0)=q, p(+-1)=(1-q)/2.

    With delta = (lam - 1)(lam - (2q - 1)) and
    phi = (lam - q - sqrt(delta)) / (1 - q):

        g_lambda(x) =  (lam / sqrt(delta)) phi^|x|      for lam > 1,
        g_lambda(x) = -(lam / sqrt(delta)) phi^(-|x|)   for lam < 2q - 1.

    The left spectral edge for q = 1/2 sits at 0 where the limit value is 0;
    that single boundary point is special-cased.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    edge = 2.0 * q - 1.0
    if lam == 0.0 and edge == 0.0:
        return GreenEvaluation(lam=lam, value=0.0, method="closed_1d", est_error=0.0)
    if edge - SPECTRUM_GUARD <= lam <= 1.0 + SPECTRUM_GUARD:
        raise LambdaInSpectrum(f"lambda={lam!r} inside [{edge!r}, 1]")
    delta = (lam - 1.0) * (lam - edge)
    root = math.sqrt(delta)
    phi = (lam - q - root) / (1.0 - q)
    if lam > 1.0:
        value = lam / root * phi ** abs(int(x))
    else:
        value = -lam / root * phi ** (-abs(int(x)))
    return GreenEvaluation(lam=lam, value=value, method="closed_1d", est_error=0.0)


def phi_closed_1d(q: float, lam: float) -> float:
    """Geometric ratio phi(lambda) of the 1d closed form (decay base)."""
    edge = 2.0 * q - 1.0
    if edge - SPECTRUM_GUARD <= lam <= 1.0 + SPECTRUM_GUARD:
        raise LambdaInSpectrum(f"lambda={lam!r} inside [{edge!r}, 1]")
    delta = (lam - 1.0) * (lam - edge)
    return (lam - q - math.sqrt(delta)) / (1.0 - q)


def decay_rate_estimate(values) -> DecayFit:
    """Least-squares line on (|x|, log value); rate is minus the slope."""
    pts = [(float(r), float(v)) for r, v in values]
    if len(pts) < 8:
        raise TooFewPoints(f"need >= 8 points, got {len(pts)}")
    for r, v in pts:
        if v <= 0.0:
            raise NonPositiveValue(f"value {v!r} at |x|={r} is not positive")
    xs = np.array([p[0] for p in pts])
    ys = np.log([p[1] for p in pts])
    coef = np.polyfit(xs, ys, 1)
    resid = ys - np.polyval(coef, xs)
    return DecayFit(
        rate=float(-coef[0]),
        prefactor=float(np.exp(coef[1])),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        npoints=len(pts),
    )


# -- level crossings of g_lambda(0) ------------------------------------------

_PTS_LADDER = {1: (512, 2048, 8192, 32768), 2: (128, 512), 3: (32, 64)}

#: coarse single-level grids for sign scans; finer ones for bisection polish
_PTS_SWEEP = {1: 8192, 2: 512, 3: 96}
_PTS_BISECT = {1: 32768, 2: 2048, 3: 128}


def _g0_fast(kernel: WalkKernel, lam: float) -> float:
    """Single-level g_lambda(0) for bisection; no convergence certificate."""
    phat = char_on_grid(kernel, _PTS_BISECT[kernel.dimension])
    return lam * float(np.mean(1.0 / (lam - phat)))


def _g0_sweep(kernel: WalkKernel, lams: np.ndarray) -> np.ndarray:
    """Vectorized coarse g_lambda(0) over many lambdas (sign information)."""
    phat = char_on_grid(kernel, _PTS_SWEEP[kernel.dimension])
    out = np.empty(len(lams))
    chunk = max(1, int(2e7 // max(len(phat), 1)))
    for i in range(0, len(lams), chunk):
        piece = lams[i : i + chunk]
        out[i : i + chunk] = piece * np.mean(1.0 / (piece[:, None] - phat[None, :]), axis=1)
    return out


def _g0(kernel: WalkKernel, lam: float, strict: bool = True) -> float:
    """g_lambda(0) with automatic grid escalation near the spectrum.

    strict=False returns the finest-grid estimate even when Richardson did
    not contract; scanning for sign changes only needs the (large) values
    near the spectral edge qualitatively, and every root found that way is
    re-verified strictly.
    """
    last = None
    fallback = None
    for pts in _PTS_LADDER[kernel.dimension]:
        try:
            ev = g_lambda_quadrature(kernel, lam, pts)
        except QuadratureNotConverged:
            phat = char_on_grid(kernel, 4 * pts)
            fallback = lam * float(np.mean(1.0 / (lam - phat)))
            continue
        last = ev
        if ev.est_error <= 1e-11 * max(1.0, abs(ev.value)):
            return ev.value
    if last is None:
        if not strict and fallback is not None:
            return fallback
        raise QuadratureNotConverged(f"g_lambda(0) did not converge at lambda={lam!r}")
    return last.value


@dataclass(frozen=True)
class LevelCrossings:
    """Solutions of g_lambda(0) = target off the spectrum."""

    target: float
    above: float | None
    below: tuple[float, ...]


def g_level_crossings(
    kernel: WalkKernel, target: float, xtol: float = 1e-12, scan_points: int | None = None
) -> LevelCrossings:
    """Solve g_lambda(0) = target (> 1) on both resolvent components.

    Above the spectrum g is strictly decreasing from g(1+) to 1, so a
    bisection applies whenever a bracket exists.  Below the spectrum g need
    not be monotone; a graded scan brackets sign changes which are then
    bisected.  All roots below the bottom edge ell satisfy
    |lambda| <= (v + 1) |ell| with v = 1/(target - 1), which bounds the
    scan.  Scan and bisection run in relaxed quadrature mode (near-edge
    values are only needed qualitatively); every root is then re-verified
    with a strict evaluation.
    """
    if target <= 1.0:
        raise ValueError("target must exceed 1")
    if scan_points is None:
        scan_points = {1: 3000, 2: 600, 3: 200}[kernel.dimension]
    above = None
    lo = None
    h = 0.5
    while h >= 1e-9:
        lam = 1.0 + h
        if _g0_fast(kernel, lam) > target:
            lo = lam
            break
        h /= 4.0
    if lo is not None:
        hi = lo
        while _g0_fast(kernel, hi) > target:
            hi = 1.0 + 2.0 * (hi - 1.0)
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if _g0_fast(kernel, mid) > target:
                lo = mid
            else:
                hi = mid
        above = 0.5 * (lo + hi)
        _verify_root(kernel, above, target)

    below: list[float] = []
    ell = kernel.lower
    if ell < 0.0:
        v = 1.0 / (target - 1.0)
        floor = -((v + 1.0) * abs(ell) + 1.0)
        # graded offsets: dense near the edge where g blows up in d <= 2
        s = np.geomspace(1e-7, ell - floor, scan_points)
        lams = ell - s
        gs = _g0_sweep(kernel, lams)
        sign = np.sign(gs - target)
        for i in range(len(lams) - 1):
            if sign[i] == 0.0:
                below.append(float(lams[i]))
            elif sign[i] * sign[i + 1] < 0.0:
                a, b = lams[i], lams[i + 1]
                fa = gs[i] - target
                while a - b > xtol:  # a > b: scanning downward
                    mid = 0.5 * (a + b)
                    fm = _g0_fast(kernel, mid) - target
                    if fa * fm <= 0.0:
                        b = mid
                    else:
                        a, fa = mid, fm
                root = 0.5 * (a + b)
                _verify_root(kernel, root, target)
                below.append(root)
    return LevelCrossings(target=target, above=above, below=tuple(sorted(below)))


def _verify_root(kernel: WalkKernel, root: float, target: float) -> None:
    value = _g0(kernel, root)
    if abs(value - target) > 1e-6 * max(1.0, target):
        raise QuadratureNotConverged(
            f"root {root!r} fails verification: g = {value!r}, target {target!r}"
        )
