"""Birman-Schwinger reduction of the perturbed eigenvalue problem.

Off the unperturbed spectrum the eigenvalue condition for the multiplied
operator compresses onto the support of V:

    B_lambda(x, y) = sqrt(V(x) V(y)) (lambda G_lambda(x, y) - delta_xy),

and lambda belongs to the perturbed spectrum exactly when 1 is an
eigenvalue of B_lambda.  Splitting off the diagonal,

    B_lambda = (g_lambda(0) - 1) V  +  H_lambda,

leaves an off-diagonal part whose norm is controlled by the sparseness of
V; row-sum bounds on H in the plain and exponentially weighted norms give
the Neumann-series invertibility certificate behind exponential decay of
discrete eigenfunctions.  Everything here is assembled on support sites
only: the square root of V annihilates the rest of the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaTooLarge,
    BSNotInvertible,
    EmptySupport,
    Epsilon0Zero,
    LambdaInSpectrum,
)
from .lattice import LatticeBox, WalkKernel, _sup_norm
from .potential import PotentialSpec
from .resolvent import decay_rate_estimate, g_lambda_quadrature, green_table

#: minimum distance from the unperturbed spectrum for assembly
ASSEMBLY_MARGIN = 0.02


@dataclass(frozen=True)
class BSAssembly:
    """Compressed eigenvalue-condition matrix on the support of V."""

    lam: float
    gamma: float
    matrix: np.ndarray
    off_diag: np.ndarray
    green: np.ndarray
    support_sites: tuple
    support_values: tuple
    kernel: WalkKernel
    box: LatticeBox


def _support_in_box(spec: PotentialSpec, box: LatticeBox):
    out = [
        (s, h)
        for s, h in zip(spec.sites, spec.heights)
        if all(abs(c - cc) <= box.radius for c, cc in zip(s, box.center))
    ]
    return sorted(out, key=lambda sh: (_sup_norm(sh[0]), sh[0]))


def _guard_margin(kernel: WalkKernel, lam: float) -> None:
    if kernel.lower - ASSEMBLY_MARGIN <= lam <= 1.0 + ASSEMBLY_MARGIN:
        raise LambdaInSpectrum(
            f"lambda={lam!r} within margin {ASSEMBLY_MARGIN} of [{kernel.lower!r}, 1]"
        )


def assemble_bs(
    kernel: WalkKernel,
    spec: PotentialSpec,
    lam: float,
    box: LatticeBox | int,
    pts_per_axis: int = 512,
) -> BSAssembly:
    """Assemble the support-compressed matrix at one spectral parameter."""
    if isinstance(box, int):
        box = LatticeBox.cube(box, kernel.dimension)
    _guard_margin(kernel, lam)
    supp = _support_in_box(spec, box)
    if not supp:
        raise EmptySupport("potential has no support inside the box")
    sites = [s for s, _ in supp]
    heights = np.array([h for _, h in supp])
    n = len(sites)
    disp = sorted(
        {tuple(b - a for a, b in zip(sites[i], sites[j])) for i in range(n) for j in range(n)}
    )
    table = green_table(kernel, lam, disp, pts_per_axis)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            G[i, j] = table[tuple(b - a for a, b in zip(sites[i], sites[j]))]
    sq = np.sqrt(heights)
    base = lam * G - np.eye(n)
    matrix = sq[:, None] * base * sq[None, :]
    off = matrix.copy()
    np.fill_diagonal(off, 0.0)
    g0 = g_lambda_quadrature(kernel, lam, pts_per_axis).value
    return BSAssembly(
        lam=lam,
        gamma=g0 - 1.0,
        matrix=matrix,
        off_diag=off,
        green=G,
        support_sites=tuple(sites),
        support_values=tuple(float(h) for h in heights),
        kernel=kernel,
        box=box,
    )


def bs_eigenvalue_test(asm: BSAssembly, tol: float = 1e-6) -> tuple[bool, float]:
    """Distance of the spectrum of the compressed matrix to 1.

    A distance below tol certifies (up to truncation error) that lam is in
    the perturbed spectrum; far from 1 certifies it is not.
    """
    mu = np.linalg.eigvalsh(asm.matrix)
    distance = float(np.min(np.abs(mu - 1.0)))
    return distance < tol, distance


def bs_crossing_scan(
    kernel: WalkKernel,
    spec: PotentialSpec,
    lo: float,
    hi: float,
    box: LatticeBox | int,
    xtol: float = 1e-9,
    pts_per_axis: int = 512,
) -> float:
    """Locate lambda where the top compressed eigenvalue crosses 1.

    The top eigenvalue of the compressed matrix decreases in lambda above
    the spectrum, so the crossing is a bisection; it recovers the perturbed
    top eigenvalue from resolvent data alone, independent of any dense
    eigensolve of the truncation.
    """

    def top_minus_one(lam: float) -> float:
        asm = assemble_bs(kernel, spec, lam, box, pts_per_axis)
        return float(np.linalg.eigvalsh(asm.matrix)[-1] - 1.0)

    f_lo, f_hi = top_minus_one(lo), top_minus_one(hi)
    if f_lo <= 0.0 or f_hi >= 0.0:
        raise ValueError(f"no sign change in [{lo}, {hi}]: {f_lo:+.3e}, {f_hi:+.3e}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if top_minus_one(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def resolvent_via_bs(
    kernel: WalkKernel,
    spec: PotentialSpec,
    lam: float,
    box: LatticeBox | int,
    tol: float = 1e-8,
    pts_per_axis: int = 512,
) -> tuple[np.ndarray, float]:
    """Resolvent of the perturbed operator from unperturbed Green data.

    Uses the factorization of (lambda - M)^(-1) through the compressed
    inverse: G + G V^(1/2) (1 - B)^(-1) V^(1/2) P G, all truncated to the
    box.  Returns the matrix and the identity residual
    max |(lambda - M) R - I| over interior columns (sites at distance
    > L/2 from the boundary), where truncation effects are exponentially
    small.
    """
    if isinstance(box, int):
        box = LatticeBox.cube(box, kernel.dimension)
    _guard_margin(kernel, lam)
    sites = box.sites()
    vol = box.volume
    L = box.radius
    # pairwise Green values depend only on the displacement: one lookup table
    axes = [np.arange(-2 * L, 2 * L + 1)] * kernel.dimension
    grid = np.meshgrid(*axes, indexing="ij")
    disp_all = np.stack([g.ravel() for g in grid], axis=-1)
    table = green_table(kernel, lam, [tuple(r) for r in disp_all], pts_per_axis)
    side = 4 * L + 1
    weights = side ** np.arange(kernel.dimension - 1, -1, -1)
    lut = np.empty(side**kernel.dimension)
    for row in disp_all:
        lut[(row + 2 * L) @ weights] = table[tuple(row)]
    diff = sites[None, :, :] - sites[:, None, :]
    G = lut[(diff + 2 * L) @ weights]

    supp = _support_in_box(spec, box)
    if supp:
        sidx = np.array([box.index(s) for s, _ in supp])
        sq = np.sqrt(np.array([h for _, h in supp]))
        B = sq[:, None] * (lam * G[np.ix_(sidx, sidx)] - np.eye(len(sidx))) * sq[None, :]
        mu = np.linalg.eigvalsh(B)
        if np.min(np.abs(mu - 1.0)) < tol:
            raise BSNotInvertible(f"1 within {tol} of the compressed spectrum at lambda={lam!r}")
        # P G restricted to support rows
        op_rows = np.zeros((len(sidx), vol))
        for off, p in zip(kernel.offsets, kernel.probs):
            shifted = np.array([s for s, _ in supp]) + np.asarray(off)
            ok = np.all(np.abs(shifted) <= L, axis=1)
            cols = (shifted[ok] + L) @ (box.side ** np.arange(kernel.dimension - 1, -1, -1))
            op_rows[np.arange(len(sidx))[ok]] += p * G[cols]
        mid = np.linalg.solve(np.eye(len(sidx)) - B, sq[:, None] * op_rows)
        R = G + G[:, sidx] @ (sq[:, None] * mid)
    else:
        R = G

    dvec = 1.0 + (spec.values_on(sites) if spec is not None else 0.0)
    P0 = np.zeros((vol, vol))
    rows = np.arange(vol)
    sidew = box.side ** np.arange(kernel.dimension - 1, -1, -1)
    for off, p in zip(kernel.offsets, kernel.probs):
        shifted = sites + np.asarray(off)
        ok = np.all(np.abs(shifted) <= L, axis=1)
        P0[rows[ok], (shifted[ok] + L) @ sidew] = p
    M = dvec[:, None] * P0
    ident = (lam * np.eye(vol) - M) @ R
    interior = np.max(np.abs(sites), axis=1) <= L // 2
    resid = ident - np.eye(vol)
    residual = float(np.max(np.abs(resid[:, interior])))
    return R, residual


def off_diag_tail_norm(asm: BSAssembly, N: int) -> float:
    """Row/column sup-sum bound |lambda| sqrt(A_N B_N) on the far tail of H.

    A_N sums |sqrt(V V) G| over rows beyond radius N; B_N over columns
    beyond radius N.  The bound collapsing along N witnesses compactness of
    the off-diagonal part for sparse potentials and stays bounded below for
    the dense control.
    """
    if N >= asm.box.radius:
        raise ValueError("N must stay below the box radius")
    sites = asm.support_sites
    sq = np.sqrt(np.array(asm.support_values))
    absH = sq[:, None] * np.abs(asm.green) * sq[None, :]
    np.fill_diagonal(absH, 0.0)
    norms = np.array([_sup_norm(s) for s in sites])
    far = norms >= N
    a_n = float(absH[far].sum(axis=1).max()) if far.any() else 0.0
    b_n = float(absH[:, far].sum(axis=1).max()) if far.any() else 0.0
    return abs(asm.lam) * math.sqrt(a_n * b_n)


@dataclass(frozen=True)
class NeumannCertificate:
    """Invertibility certificate for 1 - B with the potential screened off K.

    Valid iff epsilon0 > 0 and contraction < 1: then the Neumann series for
    (1 - gamma V_K)^(-1) H converges in both the plain sup norm and the
    exponentially weighted norm with exponent alpha, which is the engine of
    the eigenfunction-decay argument.
    """

    excluded: tuple
    lam: float
    alpha: float
    epsilon0: float
    h_norm_plain: float
    h_norm_weighted: float
    contraction: float
    green_decay_rate: float

    @property
    def valid(self) -> bool:
        return self.epsilon0 > 0.0 and self.contraction < 1.0


def neumann_invertibility(
    kernel: WalkKernel,
    spec: PotentialSpec,
    K,
    lam: float,
    alpha: float,
    box: LatticeBox | int,
    pts_per_axis: int = 512,
) -> NeumannCertificate:
    """Build the screened-potential Neumann certificate at one lambda.

    K is the finite site set whose potential values are zeroed before the
    check.  alpha must sit strictly below the fitted exponential decay rate
    of the Green kernel at this lambda (AlphaTooLarge otherwise);
    epsilon0 = inf |1 - gamma V_K| must be positive (Epsilon0Zero names the
    failure mode: K too small, enlarge it).
    """
    if isinstance(box, int):
        box = LatticeBox.cube(box, kernel.dimension)
    _guard_margin(kernel, lam)
    excluded = {tuple(int(c) for c in (k if not isinstance(k, int) else (k,))) for k in K}

    probe = range(1, 13)
    disp = [(t,) + (0,) * (kernel.dimension - 1) for t in probe]
    table = green_table(kernel, lam, disp, pts_per_axis)
    fit = decay_rate_estimate([(t, abs(table[d])) for t, d in zip(probe, disp)])
    if alpha >= fit.rate:
        raise AlphaTooLarge(f"alpha={alpha} not below fitted Green rate {fit.rate:.4f}")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")

    gamma = g_lambda_quadrature(kernel, lam, pts_per_axis).value - 1.0
    supp = [(s, h) for s, h in zip(spec.sites, spec.heights) if s not in excluded]
    supp = [(s, h) for s, h in supp if _sup_norm(s) <= box.radius]
    eps0 = 1.0  # V_K = 0 sites always contribute |1 - 0|
    for _, h in supp:
        eps0 = min(eps0, abs(1.0 - gamma * h))
    if eps0 < 1e-12:
        raise Epsilon0Zero(
            f"inf |1 - gamma V_K| = {eps0:.3e}; enlarge K beyond {len(excluded)} sites"
        )

    h_plain = 0.0
    h_weighted = 0.0
    if len(supp) > 1:
        pts = [s for s, _ in supp]
        hts = np.array([h for _, h in supp])
        disp = sorted(
            {tuple(b - a for a, b in zip(x, y)) for x in pts for y in pts if x != y}
        )
        table = green_table(kernel, lam, disp, pts_per_axis)
        n = len(pts)
        absG = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    d = tuple(b - a for a, b in zip(pts[i], pts[j]))
                    # quadrature bottoms out at ~1e-16 cancellation noise;
                    # beyond that, cap |G| by the fitted decay envelope
                    # (amplifying raw noise by exp(alpha |x|) would be fatal)
                    envelope = 2.0 * fit.prefactor * math.exp(-fit.rate * _sup_norm(d))
                    absG[i, j] = min(abs(table[d]) + 1e-15, envelope)
        sq = np.sqrt(hts)
        H = abs(lam) * sq[:, None] * absG * sq[None, :]
        h_plain = float(H.sum(axis=1).max())
        norms = np.array([_sup_norm(s) for s in pts], dtype=float)
        W = H * np.exp(alpha * (norms[:, None] - norms[None, :]))
        h_weighted = float(W.sum(axis=1).max())

    h_norm = max(h_plain, h_weighted)
    return NeumannCertificate(
        excluded=tuple(sorted(excluded)),
        lam=lam,
        alpha=alpha,
        epsilon0=eps0,
        h_norm_plain=h_plain,
        h_norm_weighted=h_weighted,
        contraction=h_norm / eps0,
        green_decay_rate=fit.rate,
    )


def grow_exclusion_set(
    kernel: WalkKernel,
    spec: PotentialSpec,
    lam: float,
    alpha: float,
    box: LatticeBox | int,
    max_sites: int = 64,
) -> NeumannCertificate:
    """Greedy K growth: repeatedly exclude the site worst for epsilon0.

    A large-enough finite K always exists but there is no closed-form
    recipe; excluding sites by increasing |1 - gamma V(x)| until the
    certificate validates is the obvious constructive policy.
    """
    gamma = g_lambda_quadrature(kernel, lam).value - 1.0
    ranked = sorted(
        zip(spec.sites, spec.heights), key=lambda sh: abs(1.0 - gamma * sh[1])
    )
    K: list = []
    last_err: Exception | None = None
    for size in range(0, min(max_sites, len(ranked)) + 1):
        K = [s for s, _ in ranked[:size]]
        try:
            cert = neumann_invertibility(kernel, spec, K, lam, alpha, box)
        except Epsilon0Zero as err:
            last_err = err
            continue
        if cert.valid:
            return cert
    if last_err is not None:
        raise last_err
    raise Epsilon0Zero(f"no valid certificate with up to {max_sites} excluded sites")
