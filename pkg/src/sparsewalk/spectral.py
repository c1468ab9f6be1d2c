"""Finite-volume spectral analysis of the multiplicatively perturbed walk.

The operator of interest multiplies the convolution output pointwise by
1 + V.  On a box with zero (Dirichlet) exterior it becomes the matrix

    M(x, y) = (1 + V(x)) p(y - x),

which is similar to the symmetric matrix S = D^(1/2) P D^(1/2) with
D = diag(1 + V); eigenvalues coincide and eigenvectors map through
phi = D^(1/2) psi.  Normalizing psi in l^2 normalizes phi in the weighted
inner product <f, g>_V = <(1+V)^(-1) f, g>, which is the natural geometry:
the operator is self-adjoint there.

This module provides the truncation itself, dense and power-iteration
eigensolvers, the predictor for the excess essential spectrum (the level
set g_lambda(0) = 1 + 1/v over declared essential values v), bipartiteness
and diagonal-dominance certificates for the absolute gap, the edge
inequality check, spectral-projection contraction fits, and a
high-precision Sturm-sequence distance oracle for tridiagonal truncations
whose spectral accumulation happens far below float64 resolution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoxTooLarge,
    GapNotCertified,
    NoConvergence,
    NoRootAboveOne,
    NotStabilized,
)
from .lattice import LatticeBox, WalkKernel, _char_lower
from .potential import PotentialSpec, sparseness_profile
from .resolvent import DecayFit, decay_rate_estimate, g_level_crossings

#: largest dense truncation (rows) assembled eagerly
DENSE_CAP = 6000

#: eigenvalues within this of the top are treated as the peripheral set
PERIPHERAL_TOL = 1e-10


@dataclass(frozen=True)
class TruncatedOperator:
    """Dirichlet truncation of the perturbed operator to a cube."""

    kernel: WalkKernel
    spec: PotentialSpec | None
    box: LatticeBox
    matrix: np.ndarray
    sym: np.ndarray
    dvec: np.ndarray
    sites: np.ndarray

    @property
    def volume(self) -> int:
        return self.box.volume

    def v_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(f * g / self.dvec))

    def v_norm(self, f: np.ndarray) -> float:
        return math.sqrt(max(self.v_inner(f, f), 0.0))


def truncated_operator(
    kernel: WalkKernel, spec: PotentialSpec | None, L: int, dense_cap: int = DENSE_CAP
) -> TruncatedOperator:
    """Assemble the truncation on Q(0, L) with zero outside."""
    if L < 4 * kernel.reach:
        raise ValueError(f"L={L} must be at least 4x kernel range {kernel.reach}")
    box = LatticeBox.cube(L, kernel.dimension)
    if box.volume > dense_cap:
        raise BoxTooLarge(f"volume {box.volume} exceeds dense cap {dense_cap}")
    sites = box.sites()
    vol = box.volume
    side = box.side
    weights = side ** np.arange(kernel.dimension - 1, -1, -1)
    P0 = np.zeros((vol, vol))
    rows = np.arange(vol)
    for off, p in zip(kernel.offsets, kernel.probs):
        shifted = sites + np.asarray(off, dtype=int)
        mask = np.all(np.abs(shifted) <= L, axis=1)
        cols = (shifted[mask] + L) @ weights
        P0[rows[mask], cols] = p
    if spec is None:
        dvec = np.ones(vol)
    else:
        dvec = 1.0 + spec.values_on(sites)
    sqd = np.sqrt(dvec)
    return TruncatedOperator(
        kernel=kernel,
        spec=spec,
        box=box,
        matrix=dvec[:, None] * P0,
        sym=sqd[:, None] * P0 * sqd[None, :],
        dvec=dvec,
        sites=sites,
    )


@dataclass(frozen=True)
class EigenPair:
    value: float
    psi: np.ndarray
    phi: np.ndarray
    residual: float


@dataclass(frozen=True)
class EigenSolution:
    """Top eigenpairs in both orderings (by value and by absolute value)."""

    by_value: tuple[EigenPair, ...]
    by_abs: tuple[EigenPair, ...]
    eigenvalues: np.ndarray


def _make_pair(op: TruncatedOperator, value: float, psi: np.ndarray) -> EigenPair:
    phi = np.sqrt(op.dvec) * psi
    sgn = np.sign(phi[int(np.argmax(np.abs(phi)))]) or 1.0
    psi = sgn * psi
    phi = sgn * phi
    resid = float(np.linalg.norm(op.matrix @ phi - value * phi) / np.linalg.norm(phi))
    return EigenPair(value=float(value), psi=psi, phi=phi, residual=resid)


def eigensolve_top(op: TruncatedOperator, count: int = 6) -> EigenSolution:
    """Dense symmetric eigensolve; top `count` pairs in both orderings."""
    if count > 10:
        raise ValueError("count must be <= 10")
    count = min(count, op.volume)
    w, U = np.linalg.eigh(op.sym)
    by_value = tuple(_make_pair(op, w[i], U[:, i]) for i in range(len(w) - 1, len(w) - 1 - count, -1))
    order = np.argsort(-np.abs(w), kind="stable")
    by_abs = tuple(_make_pair(op, w[i], U[:, i]) for i in order[:count])
    return EigenSolution(by_value=by_value, by_abs=by_abs, eigenvalues=w)


def perron_pair(
    op: TruncatedOperator,
    tol: float = 1e-10,
    pointwise_tol: float = 1e-9,
    max_iter: int = 50000,
    check_every: int = 16,
) -> tuple[float, np.ndarray]:
    """Strictly positive top eigenpair by squared power iteration.

    Iterating the square of the symmetric matrix converges even when the
    spectrum is negation-symmetric (bipartite kernels put -r in the
    spectrum); the symmetrization (1 + S/r) x then projects away the -r
    component.  Every arithmetic step combines nonnegative numbers, so the
    returned phi is positive entrywise by construction, not by luck.

    Besides the usual norm residual, convergence requires the pointwise
    eigen-ratio max |(S psi)(x) / (r psi(x)) - 1| <= pointwise_tol.  The
    norm alone says nothing about the exponentially small tail entries,
    and it is exactly these ratios that become the row sums of the Doob
    chain downstream.  Returns (r, phi) with phi normalized in the
    weighted norm.
    """
    S = op.sym
    x = np.ones(op.volume) / math.sqrt(op.volume)
    r_hat = 1.0
    for it in range(max_iter):
        y = S @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise NoConvergence("power iteration collapsed to zero")
        z = S @ y
        r_hat = ny  # sqrt(x . S^2 x) for unit x
        x = z / np.linalg.norm(z)
        if (it + 1) % check_every == 0:
            psi = x + (S @ x) / r_hat
            npsi = np.linalg.norm(psi)
            if npsi == 0.0 or psi.min() <= 0.0:
                continue
            psi = psi / npsi
            spsi = S @ psi
            rho = float(psi @ spsi)  # Rayleigh quotient, unit psi
            resid = float(np.linalg.norm(spsi - rho * psi))
            point = float(np.max(np.abs(spsi / (rho * psi) - 1.0)))
            if resid <= tol * max(rho, 1.0) and point <= pointwise_tol:
                phi = np.sqrt(op.dvec) * psi
                return rho, phi
    raise NoConvergence(f"power iteration did not reach tol={tol} in {max_iter} steps")


def lambda_pm_1d(q: float, v: float) -> tuple[float, float]:
    """Eigenvalue pair of a single point perturbation of the 1d lazy walk.

    With c(v) = (v + 1)^2 / (2v + 1), the two solutions of
    g_lambda(0) = 1 + 1/v off the spectrum are

        lambda_pm = c(v) (q +- sqrt(q^2 - (2q - 1)/c(v))),

    satisfying lambda_- < 2q - 1 < 1 < lambda_+.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    if v <= 0.0:
        raise ValueError("v must be positive")
    c = (v + 1.0) ** 2 / (2.0 * v + 1.0)
    root = math.sqrt(q * q - (2.0 * q - 1.0) / c)
    return c * (q - root), c * (q + root)


@dataclass(frozen=True)
class LambdaVPrediction:
    """Predicted excess essential spectrum and its top point."""

    lambda_v: tuple[float, ...]
    lambda0: float | None
    above: dict
    below: dict


def essential_spectrum_predictor(
    kernel: WalkKernel, spec: PotentialSpec, check_sparseness: bool = True
) -> LambdaVPrediction:
    """Solve g_lambda(0) = 1 + 1/v for every declared essential value v > 0.

    Above the spectrum the level function is strictly decreasing so there
    is at most one root per level, found by bisection; the root for v0 is
    the top of the essential spectrum and must exist (otherwise
    NoRootAboveOne, which in d >= 3 is a legitimate outcome for small v0).
    Below the bottom edge the level function need not be monotone, so sign
    changes are bracketed on a graded scan and bisected individually.
    """
    ess = [v for v in spec.essential_values if v > 0.0]
    if not ess:
        return LambdaVPrediction(lambda_v=(), lambda0=None, above={}, below={})
    if check_sparseness:
        profile = sparseness_profile(spec, 0.5, min(spec.box_radius, 512))
        tail = [s for _, s in profile.sup_tail]
        if tail and tail[-1] > max(0.5 * tail[0], 1e-9):
            raise ValueError(
                f"sparseness profile does not collapse (sup tail {tail}); "
                "essential-spectrum prediction needs a sparse potential"
            )
    v0 = max(ess)
    above: dict[float, float] = {}
    below: dict[float, tuple[float, ...]] = {}
    for v in sorted(ess):
        crossings = g_level_crossings(kernel, 1.0 + 1.0 / v)
        if crossings.above is None:
            if v == v0:
                raise NoRootAboveOne(
                    f"g_lambda(0) = 1 + 1/{v0} has no root above 1 for this kernel"
                )
        else:
            above[v] = crossings.above
        if crossings.below:
            below[v] = crossings.below
    roots = sorted(set(above.values()) | {x for xs in below.values() for x in xs})
    return LambdaVPrediction(
        lambda_v=tuple(roots), lambda0=above.get(v0), above=above, below=below
    )


# -- absolute-gap certificates -------------------------------------------------

@dataclass(frozen=True)
class BipartiteSign:
    """Site sign J = +-1 built from an even-coordinate-sum rule."""

    axes: tuple[int, ...]

    def sign(self, site) -> int:
        total = sum(int(site[a]) for a in self.axes)
        return 1 if total % 2 == 0 else -1

    def sign_on(self, sites: np.ndarray) -> np.ndarray:
        total = sites[:, list(self.axes)].sum(axis=1)
        return np.where(total % 2 == 0, 1.0, -1.0)


def bipartite_detect(kernel: WalkKernel, verify_radius: int = 4) -> BipartiteSign | None:
    """Find a sign J anticommuting with the walk, if one exists.

    For each nonempty axis subset I the candidate even set is
    A = {x : sum_{a in I} x_a even}; the kernel is bipartite for that I
    exactly when p vanishes on A.  The returned sign is re-verified on a
    sample box: transitions never connect sites of equal sign.
    """
    d = kernel.dimension
    for size in range(1, d + 1):
        for axes in itertools.combinations(range(d), size):
            if any(sum(off[a] for a in axes) % 2 == 0 for off in kernel.offsets):
                continue  # some support offset lies in A
            cand = BipartiteSign(axes=axes)
            for base in itertools.product(range(-verify_radius, verify_radius + 1), repeat=d):
                for off in kernel.offsets:
                    other = tuple(b + o for b, o in zip(base, off))
                    if cand.sign(base) * cand.sign(other) == 1:
                        raise AssertionError("bipartite sign failed verification")
            return cand
    return None


@dataclass(frozen=True)
class DiagDominance:
    holds: bool
    margin: float
    per_axes: dict


def diag_dominance_check(kernel: WalkKernel) -> DiagDominance:
    """Check p(0) > sum of p over the rest of an even set A.

    A positive margin for some axis subset forces -r < ell for the
    perturbed operator under every nonnegative bounded potential, which is
    the non-bipartite route to the absolute spectral gap.
    """
    d = kernel.dimension
    per: dict[tuple[int, ...], float] = {}
    for size in range(1, d + 1):
        for axes in itertools.combinations(range(d), size):
            mass = sum(
                p
                for off, p in zip(kernel.offsets, kernel.probs)
                if any(off) and sum(off[a] for a in axes) % 2 == 0
            )
            per[axes] = kernel.p0 - mass
    best = max(per.values())
    return DiagDominance(holds=best > 0.0, margin=best, per_axes=per)


@dataclass(frozen=True)
class EdgeCheck:
    slack: float
    per_axes: dict
    r: float
    ell: float


def edge_inequality_check(kernel: WalkKernel, spec: PotentialSpec | None, L: int) -> EdgeCheck:
    """Slack of -r + 2 ell(1_A P 1_A) <= ell on the truncation.

    ell(1_A P 1_A) is the minimum over frequencies of the symbol restricted
    to the even set A; the slack must be >= -1e-8 for every axis subset and
    the minimum over subsets is reported.
    """
    op = truncated_operator(kernel, spec, L)
    w = np.linalg.eigvalsh(op.sym)
    r, ell = float(w[-1]), float(w[0])
    d = kernel.dimension
    per: dict[tuple[int, ...], float] = {}
    for size in range(1, d + 1):
        for axes in itertools.combinations(range(d), size):
            sel = [
                (off, p)
                for off, p in zip(kernel.offsets, kernel.probs)
                if sum(off[a] for a in axes) % 2 == 0
            ]
            if sel:
                offs = np.array([o for o, _ in sel], dtype=int)
                ps = np.array([p for _, p in sel])
                ell_a = _char_lower(offs, ps, 512)
            else:
                ell_a = 0.0
            per[axes] = ell - (-r + 2.0 * ell_a)
    return EdgeCheck(slack=min(per.values()), per_axes=per, r=r, ell=ell)


@dataclass(frozen=True)
class GapProjection:
    branch: str
    eps_fit: float
    eps_pred: float
    norms: tuple[float, ...]


def _second_abs(w: np.ndarray, r: float) -> float:
    absw = np.abs(w)
    rest = absw[absw < r - PERIPHERAL_TOL * max(1.0, r)]
    return float(rest.max()) if rest.size else 0.0


def gap_projection_test(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    L: int,
    f: np.ndarray | None = None,
    n_max: int = 60,
    fit_range: tuple[int, int] = (10, 50),
) -> GapProjection:
    """Geometric contraction of the semigroup off the peripheral eigenspace.

    The projector keeps the top eigenfunction (plus its sign-flipped twin
    in the bipartite case); iterating r^(-1) M on the complement must
    contract at the ratio second_abs / r, and the fitted rate is compared
    against that prediction.  Raises GapNotCertified when neither
    -r < ell nor a bipartite sign holds.
    """
    op = truncated_operator(kernel, spec, L)
    w, U = np.linalg.eigh(op.sym)
    r = float(w[-1])
    ell = float(w[0])
    bip = bipartite_detect(kernel)
    if bip is not None:
        branch = "bipartite"
    elif ell > -r + PERIPHERAL_TOL * max(1.0, r):
        branch = "one_term"
    else:
        raise GapNotCertified("-r < ell fails and the kernel is not bipartite")
    psi = U[:, -1]
    phi = np.sqrt(op.dvec) * psi
    sgn = np.sign(phi[int(np.argmax(np.abs(phi)))]) or 1.0
    phi = sgn * phi
    if f is None:
        f = np.zeros(op.volume)
        f[op.box.origin_index()] = 1.0
    proj = op.v_inner(f, phi) * phi
    if branch == "bipartite":
        jphi = bip.sign_on(op.sites) * phi
        proj = proj + op.v_inner(f, jphi) * jphi
    h = f - proj
    eps_pred = _second_abs(w, r) / r
    if op.v_norm(h) <= 1e-13 * max(op.v_norm(f), 1.0):
        return GapProjection(branch=branch, eps_fit=0.0, eps_pred=eps_pred, norms=())
    norms = []
    y = h.copy()
    for _ in range(n_max):
        y = op.matrix @ y / r
        norms.append(op.v_norm(y))
    ns = np.arange(1, n_max + 1)
    lo, hi = fit_range
    sel = (ns >= lo) & (ns <= hi) & (np.array(norms) > 1e-250)
    slope = np.polyfit(ns[sel], np.log(np.array(norms)[sel]), 1)[0]
    return GapProjection(
        branch=branch, eps_fit=float(np.exp(slope)), eps_pred=eps_pred, norms=tuple(norms)
    )


# -- spectral reports ----------------------------------------------------------

@dataclass(frozen=True)
class SpectralReport:
    """Digest of one truncation: edges, gaps, top eigenfunction, decay."""

    L: int
    r: float
    ell: float
    gap: float
    abs_gap: float
    second_abs: float
    lambda_v: tuple[float, ...]
    lambda0: float | None
    residual: float
    positivity_min: float
    decay: DecayFit | None
    bipartite: bool
    eigenvalues: np.ndarray
    phi: np.ndarray

    def distance_to(self, value: float) -> float:
        return float(np.min(np.abs(self.eigenvalues - value)))


@dataclass(frozen=True)
class ReportBundle:
    reports: tuple[SpectralReport, ...]
    lambda_v: tuple[float, ...]
    lambda0: float | None
    discrete: tuple[float, ...]


def spectral_report(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    L_sequence,
    fit_window: tuple[int, int] = (1, 12),
    stabilize_tol: float = 1e-6,
) -> ReportBundle:
    """Per-box spectral digests plus a discrete-eigenvalue Cauchy check.

    Eigenvalues above the predicted essential top lambda0 (plus a 1e-4
    attribution margin) are discrete candidates; they must agree within
    stabilize_tol across the last two boxes, else NotStabilized.  The rest
    of the spectrum is the finite-volume shadow of the essential part and
    is only expected to accumulate, never to stabilize.
    """
    Ls = sorted(int(L) for L in L_sequence)
    if len(Ls) < 2:
        raise ValueError("need at least two box radii")
    if spec is not None and any(v > 0 for v in spec.essential_values):
        pred = essential_spectrum_predictor(kernel, spec)
        lambda_v, lambda0 = pred.lambda_v, pred.lambda0
    else:
        lambda_v, lambda0 = (), None
    threshold = (lambda0 if lambda0 is not None else 1.0) + 1e-4
    reports = []
    for L in Ls:
        op = truncated_operator(kernel, spec, L)
        w, U = np.linalg.eigh(op.sym)
        r = float(w[-1])
        pair = _make_pair(op, w[-1], U[:, -1])
        try:
            # the dense eigenvector carries +-1e-16 noise in its far tail;
            # the power-iterated one is positive by construction
            r_pow, phi_pow = perron_pair(op, tol=1e-9, max_iter=20000)
            resid = float(
                np.linalg.norm(op.matrix @ phi_pow - r_pow * phi_pow)
                / np.linalg.norm(phi_pow)
            )
            pair = EigenPair(value=r_pow, psi=phi_pow / np.sqrt(op.dvec), phi=phi_pow, residual=resid)
        except NoConvergence:
            pass
        below = w[w < r - PERIPHERAL_TOL * max(1.0, r)]
        gap = float(r - below.max()) if below.size else 0.0
        second = _second_abs(w, r)
        axis_idx = []
        for t in range(fit_window[0], fit_window[1] + 1):
            site = (t,) + (0,) * (kernel.dimension - 1)
            axis_idx.append((t, op.box.index(site)))
        vals = [(t, abs(pair.phi[i])) for t, i in axis_idx]
        decay = None
        if all(v > 1e-300 for _, v in vals) and len(vals) >= 8:
            decay = decay_rate_estimate(vals)
        reports.append(
            SpectralReport(
                L=L,
                r=r,
                ell=float(w[0]),
                gap=gap,
                abs_gap=float(r - second),
                second_abs=second,
                lambda_v=lambda_v,
                lambda0=lambda0,
                residual=pair.residual,
                positivity_min=float(pair.phi.min()),
                decay=decay,
                bipartite=bipartite_detect(kernel) is not None,
                eigenvalues=w,
                phi=pair.phi,
            )
        )
    last = reports[-1].eigenvalues
    prev = reports[-2].eigenvalues
    discrete = []
    for lam in last[last > threshold]:
        nearest = prev[int(np.argmin(np.abs(prev - lam)))]
        if abs(nearest - lam) > stabilize_tol:
            raise NotStabilized(
                f"discrete candidate {lam!r} moved by {abs(nearest - lam):.3e} "
                f"between L={reports[-2].L} and L={reports[-1].L}"
            )
        discrete.append(float(lam))
    return ReportBundle(
        reports=tuple(reports),
        lambda_v=lambda_v,
        lambda0=lambda0,
        discrete=tuple(discrete),
    )


# -- high-precision spectrum distances for tridiagonal truncations -------------

def truncated_spectrum_distance_1d(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    L: int,
    target,
    dps: int = 60,
    floor_exp: int = -45,
) -> tuple[float, bool]:
    """Distance from the spectrum of the 1d truncation to `target`.

    Only range-1 kernels in d = 1 qualify: the symmetrized truncation is
    tridiagonal, so eigenvalue counts below any shift follow from a Sturm
    (LDL pivot-sign) recurrence evaluated in arbitrary precision.  Sparse
    potentials push truncated eigenvalues toward the essential spectrum at
    super-exponential speed, far beyond float64 resolution, which is why
    this oracle exists.  `target` may be a float or an mpmath scalar.

    Returns (distance, exact): when the nearest eigenvalue is closer than
    10^floor_exp the search stops and (10^floor_exp, False) is returned as
    a certified upper bound.
    """
    import mpmath as mp

    if kernel.dimension != 1 or kernel.reach != 1:
        raise ValueError("Sturm oracle needs a range-1 kernel in d = 1")
    with mp.workdps(dps):
        q = mp.mpf(kernel.p0)
        hop = (1 - q) / 2
        dval = [
            mp.mpf(1) + (mp.mpf(spec.value((x,))) if spec is not None else 0)
            for x in range(-L, L + 1)
        ]
        diag = [q * v for v in dval]
        off2 = [hop * hop * dval[i] * dval[i + 1] for i in range(2 * L)]
        tgt = mp.mpf(target) if not hasattr(target, "_mpf_") else +target

        def count_below(sigma):
            cnt = 0
            d = diag[0] - sigma
            if d < 0:
                cnt += 1
            tiny = mp.mpf(10) ** (-(dps * 4))
            for i in range(1, 2 * L + 1):
                denom = d if d != 0 else tiny
                d = (diag[i] - sigma) - off2[i - 1] / denom
                if d < 0:
                    cnt += 1
            return cnt

        floor = mp.mpf(10) ** floor_exp

        def hits(delta) -> bool:
            return count_below(tgt + delta) - count_below(tgt - delta) > 0

        hi = mp.mpf(1)
        if not hits(hi):
            # nearest eigenvalue beyond distance 1: widen linearly
            while not hits(hi):
                hi *= 2
            lo = hi / 2
        elif hits(floor):
            return float(floor), False
        else:
            lo = floor
        # geometric bisection localizes the scale, linear bisection polishes
        for _ in range(dps):
            mid = mp.sqrt(lo * hi)
            if hits(mid):
                hi = mid
            else:
                lo = mid
            if hi / lo < mp.mpf("1.01"):
                break
        for _ in range(60):
            mid = (lo + hi) / 2
            if hits(mid):
                hi = mid
            else:
                lo = mid
        return float(hi), True
