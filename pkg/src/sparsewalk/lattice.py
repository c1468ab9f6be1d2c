"""Symmetric finite-range random-walk kernels on Z^d.

A kernel is a finitely supported probability p with p(x) = p(-x) whose
support generates the whole lattice.  The associated transition operator
acts by convolution,

    (P f)(x) = sum_y p(x - y) f(y),

and is self-adjoint on l^2(Z^d) with spectrum [min p-hat, 1], where
p-hat(theta) = sum_x p(x) cos(theta . x) is the characteristic function.
This module owns kernel validation, p-hat, the spectrum interval, the
convolution action on finite boxes, exact return probabilities, and the
plane-wave (Weyl) residual diagnostics used to witness essential spectrum.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    BoxTooSmall,
    EmptySupport,
    NotIrreducible,
    NotNormalized,
    NotSymmetric,
    ThetaNotOnSpectrum,
)

Offset = tuple[int, ...]

#: reachability proxy: offset sums must cover Q(0, 2r) while roaming Q(0, 4r)
IRREDUCIBILITY_COVER_FACTOR = 2
IRREDUCIBILITY_ROAM_FACTOR = 4


def _as_offset(key, dim: int | None) -> Offset:
    if isinstance(key, (int, np.integer)):
        off = (int(key),)
    else:
        off = tuple(int(c) for c in key)
    if dim is not None and len(off) != dim:
        raise ValueError(f"site {off} has dimension {len(off)}, expected {dim}")
    return off


def _sup_norm(off) -> int:
    return max(abs(int(c)) for c in off)


@dataclass(frozen=True)
class LatticeBox:
    """Cube Q(center, radius) in Z^d with a row-major linear indexer."""

    center: Offset
    radius: int
    dim: int

    @classmethod
    def cube(cls, radius: int, dim: int, center: Offset | None = None) -> "LatticeBox":
        if center is None:
            center = (0,) * dim
        return cls(center=tuple(int(c) for c in center), radius=int(radius), dim=dim)

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    @property
    def volume(self) -> int:
        return self.side**self.dim

    def sites(self) -> np.ndarray:
        """All sites as an (volume, dim) int array in row-major index order."""
        axes = [np.arange(c - self.radius, c + self.radius + 1) for c in self.center]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def contains(self, site) -> bool:
        site = _as_offset(site, self.dim)
        return all(abs(s - c) <= self.radius for s, c in zip(site, self.center))

    def index(self, site) -> int:
        site = _as_offset(site, self.dim)
        if not self.contains(site):
            raise IndexError(f"site {site} outside {self}")
        idx = 0
        for s, c in zip(site, self.center):
            idx = idx * self.side + (s - c + self.radius)
        return idx

    def origin_index(self) -> int:
        return self.index(self.center)


@dataclass(frozen=True)
class SpectrumInterval:
    """Spectrum [lower, 1] of the unperturbed transition operator."""

    lower: float
    upper: float = 1.0


@dataclass(frozen=True)
class WalkKernel:
    """Validated symmetric finite-range transition probability.

    offsets/probs list every support point (both x and -x stored), sorted
    for determinism.  ``reach`` is the sup-norm range r and ``lower`` the
    precomputed bottom of the spectrum, min p-hat.
    """

    offsets: tuple[Offset, ...]
    probs: tuple[float, ...]
    dimension: int
    reach: int
    lower: float

    def prob(self, offset) -> float:
        off = _as_offset(offset, self.dimension)
        try:
            return self.probs[self.offsets.index(off)]
        except ValueError:
            return 0.0

    @property
    def p0(self) -> float:
        return self.prob((0,) * self.dimension)

    def as_dict(self) -> dict[Offset, float]:
        return dict(zip(self.offsets, self.probs))

    def offset_array(self) -> np.ndarray:
        return np.array(self.offsets, dtype=int)

    def prob_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)


def _char_lower(offsets: np.ndarray, probs: np.ndarray, grid_density: int) -> float:
    """min of p-hat via tensor grid scan plus coordinate golden-section polish."""
    d = offsets.shape[1]
    axis = np.linspace(-np.pi, np.pi, grid_density, endpoint=False)
    if d == 1:
        vals = _char_eval(offsets, probs, axis[:, None])
        theta = np.array([axis[int(np.argmin(vals))]])
    else:
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        theta_pts = np.stack([g.ravel() for g in grids], axis=-1)
        vals = _char_eval(offsets, probs, theta_pts)
        theta = theta_pts[int(np.argmin(vals))].astype(float)

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    span = 2 * np.pi / grid_density
    for _ in range(3):  # coordinate-descent sweeps
        for ax in range(d):
            lo, hi = theta[ax] - span, theta[ax] + span
            c = hi - gr * (hi - lo)
            dd = lo + gr * (hi - lo)
            for _ in range(80):
                tc = theta.copy()
                tc[ax] = c
                td = theta.copy()
                td[ax] = dd
                fc = _char_eval(offsets, probs, tc[None, :])[0]
                fd = _char_eval(offsets, probs, td[None, :])[0]
                if fc < fd:
                    hi = dd
                else:
                    lo = c
                c = hi - gr * (hi - lo)
                dd = lo + gr * (hi - lo)
            theta[ax] = 0.5 * (lo + hi)
    return float(_char_eval(offsets, probs, theta[None, :])[0])


def _char_eval(offsets: np.ndarray, probs: np.ndarray, theta: np.ndarray) -> np.ndarray:
    phases = theta @ offsets.T  # (..., n_offsets)
    return np.cos(phases) @ probs


def validate_kernel(raw, dimension: int | None = None) -> WalkKernel:
    """Check a raw offset->probability map and return the canonical kernel.

    Zero-probability entries are dropped.  Checks, in order: nonemptiness,
    nonnegativity, normalization (1e-12), symmetry p(x) = p(-x) as a pairing
    test, and irreducibility via a finite BFS proxy: sums of support offsets
    started at 0 must cover Q(0, 2r) while roaming inside Q(0, 4r).  The
    proxy radius is a documented choice, not an assertion of equivalence
    with full additive generation.
    """
    items = [(k, float(v)) for k, v in dict(raw).items()]
    if not items:
        raise EmptySupport("kernel map is empty")
    dim = dimension
    if dim is None:
        k0 = items[0][0]
        dim = 1 if isinstance(k0, (int, np.integer)) else len(k0)
    entries: dict[Offset, float] = {}
    for key, val in items:
        off = _as_offset(key, dim)
        if val < 0.0:
            raise NotNormalized(f"negative probability {val} at offset {off}")
        if val > 0.0:
            entries[off] = entries.get(off, 0.0) + val
    if not entries:
        raise EmptySupport("kernel support is empty after dropping zeros")

    total = math.fsum(entries.values())
    defect = abs(total - 1.0)
    if defect > 1e-12:
        raise NotNormalized(f"probabilities sum to {total!r} (defect {defect:.3e})")

    for off, val in entries.items():
        neg = tuple(-c for c in off)
        other = entries.get(neg)
        if other is None or abs(other - val) > 1e-15:
            raise NotSymmetric(f"p{off}={val} but p{neg}={other}")

    reach = max(_sup_norm(o) for o in entries)
    if reach == 0:
        raise NotIrreducible("support is {0}; the walk never moves")

    cover = IRREDUCIBILITY_COVER_FACTOR * reach
    roam = IRREDUCIBILITY_ROAM_FACTOR * reach
    seen = {(0,) * dim}
    queue = deque(seen)
    support = list(entries)
    while queue:
        cur = queue.popleft()
        for off in support:
            nxt = tuple(c + o for c, o in zip(cur, off))
            if _sup_norm(nxt) <= roam and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    target = itertools.product(range(-cover, cover + 1), repeat=dim)
    missing = [t for t in target if t not in seen]
    if missing:
        raise NotIrreducible(
            f"offset sums miss {len(missing)} sites of Q(0,{cover}), e.g. {missing[0]}"
        )

    order = sorted(entries)
    offsets = tuple(order)
    probs = tuple(entries[o] for o in order)
    off_arr = np.array(offsets, dtype=int)
    p_arr = np.array(probs, dtype=float)
    lower = _char_lower(off_arr, p_arr, 256)
    lower = max(lower, 2.0 * entries.get((0,) * dim, 0.0) - 1.0)
    return WalkKernel(offsets=offsets, probs=probs, dimension=dim, reach=reach, lower=lower)


# -- presets -----------------------------------------------------------------

def simple1d() -> WalkKernel:
    """Nearest-neighbour walk on Z: p(+-1) = 1/2."""
    return validate_kernel({1: 0.5, -1: 0.5})


def lazy1d(q: float) -> WalkKernel:
    """Lazy walk on Z: p(0) = q, p(+-1) = (1-q)/2."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    if q == 0.0:
        return simple1d()
    return validate_kernel({0: q, 1: (1.0 - q) / 2.0, -1: (1.0 - q) / 2.0})


def simple2d() -> WalkKernel:
    """Nearest-neighbour walk on Z^2: p(+-e1) = p(+-e2) = 1/4."""
    return validate_kernel(
        {(1, 0): 0.25, (-1, 0): 0.25, (0, 1): 0.25, (0, -1): 0.25}
    )


PRESETS = {"simple1d": simple1d, "lazy1d": lazy1d, "simple2d": simple2d}


# -- operations ---------------------------------------------------------------

def char_function(kernel: WalkKernel, theta) -> float | np.ndarray:
    """Characteristic function p-hat(theta) = sum p(x) cos(theta . x).

    theta may be a scalar (d=1), a d-vector, or an (..., d) array; the
    result is real by the symmetry of the kernel.
    """
    th = np.asarray(theta, dtype=float)
    if kernel.dimension == 1:
        th = th[..., None]  # every entry is a scalar frequency
    if th.shape[-1] != kernel.dimension:
        raise ValueError(f"theta last axis {th.shape} != dimension {kernel.dimension}")
    vals = _char_eval(kernel.offset_array(), kernel.prob_array(), th.reshape(-1, kernel.dimension))
    out = vals.reshape(th.shape[:-1])
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def char_on_grid(kernel: WalkKernel, pts_per_axis: int) -> np.ndarray:
    """p-hat on the midpoint tensor grid of [-pi, pi]^d, flattened.

    Cached: the grid is reused heavily by quadrature and root finding.
    """
    d = kernel.dimension
    axis = -np.pi + (np.arange(pts_per_axis) + 0.5) * (2.0 * np.pi / pts_per_axis)
    out = np.zeros((pts_per_axis,) * d)
    for off, p in zip(kernel.offsets, kernel.probs):
        phase = np.zeros((pts_per_axis,) * d)
        for ax, o in enumerate(off):
            if o:
                shape = [1] * d
                shape[ax] = pts_per_axis
                phase = phase + (o * axis).reshape(shape)
        out += p * np.cos(phase)
    return out.ravel()


def spectrum_bounds(kernel: WalkKernel, grid_density: int = 256) -> SpectrumInterval:
    """Spectrum interval [min p-hat, 1], grid scan plus golden-section polish."""
    if grid_density < 8:
        raise ValueError("grid_density must be >= 8")
    lower = _char_lower(kernel.offset_array(), kernel.prob_array(), grid_density)
    lower = max(lower, 2.0 * kernel.p0 - 1.0)
    return SpectrumInterval(lower=lower)


def apply_P(kernel: WalkKernel, f: np.ndarray, box: LatticeBox) -> np.ndarray:
    """Convolution action of P on a function given on a box, zero outside."""
    if box.radius <= kernel.reach:
        raise BoxTooSmall(f"box radius {box.radius} must exceed kernel range {kernel.reach}")
    if f.shape != box.shape:
        raise ValueError(f"f shape {f.shape} does not match box shape {box.shape}")
    r = kernel.reach
    padded = np.zeros(tuple(s + 2 * r for s in f.shape), dtype=f.dtype)
    inner = tuple(slice(r, r + s) for s in f.shape)
    padded[inner] = f
    out = np.zeros_like(f)
    for off, p in zip(kernel.offsets, kernel.probs):
        sl = tuple(slice(r - o, r - o + s) for o, s in zip(off, f.shape))
        out += p * padded[sl]
    return out


def convolution_power_at_zero(kernel: WalkKernel, n: int) -> float:
    """Exact n-step return probability p_n(0) by repeated convolution."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    box = LatticeBox.cube(n * kernel.reach + kernel.reach + 1, kernel.dimension)
    f = np.zeros(box.shape)
    f[(box.radius,) * kernel.dimension] = 1.0
    for _ in range(n):
        f = apply_P(kernel, f, box)
    return float(f[(box.radius,) * kernel.dimension])


def weyl_sequence_residual(
    kernel: WalkKernel, theta, n: int, lam: float | None = None
) -> float:
    """Residual ||(lam - P) u_n|| for the normalized plane wave on Q(0, n+r).

    u_n restricts exp(i theta . x) to the cube Q(0, n + r) and normalizes.
    The operator annihilates the wave in the bulk, so the residual comes
    from a boundary shell of width ~2r and scales like n^(-1/2) after
    normalization, in every dimension.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    phat = float(_char_eval(kernel.offset_array(), kernel.prob_array(), th[None, :])[0])
    if lam is None:
        lam = float(phat)
    elif abs(phat - lam) >= 1e-10:
        raise ThetaNotOnSpectrum(f"p-hat(theta)={phat!r} != lambda={lam!r}")
    r = kernel.reach
    box = LatticeBox.cube(n + 2 * r + 1, kernel.dimension)
    sites = box.sites()
    supp = np.max(np.abs(sites), axis=1) <= n + r
    wave = np.exp(1j * (sites @ th)) * supp
    wave = wave.reshape(box.shape)
    resid = lam * wave - apply_P(kernel, wave, box)
    return float(np.linalg.norm(resid) / np.linalg.norm(wave))


def weyl_scaling_fit(kernel: WalkKernel, theta, ns) -> tuple[float, list[float]]:
    """Log-log slope of the Weyl residual against n; expected near -1/2."""
    residuals = [weyl_sequence_residual(kernel, theta, int(n)) for n in ns]
    slope = float(np.polyfit(np.log(np.asarray(ns, float)), np.log(residuals), 1)[0])
    return slope, residuals
