"""Path-measure dynamics: Doob chain, Feynman-Kac semigroup, Gibbs limits.

The multiplicative semigroup admits the path representation

    (M^n f)(x) = E[ f(x + S_n) prod_{j<n} (1 + V(x + S_j)) ],

so reweighting paths by the product and normalizing defines a Gibbs
measure over walk trajectories.  Once the top eigenpair (r, phi) of the
truncation is in hand, the ground-state (Doob) transform

    K(x, y) = r^(-1) phi(x)^(-1) (1 + V(x)) p(y - x) phi(y)

is a genuine stochastic matrix, reversible for m ~ phi^2 / (1 + V), and
the Gibbs marginals converge to the law of that chain at the geometric
rate set by the absolute spectral gap.  This module computes the exact
semigroup and marginals by transfer matrices, simulates the chain, runs
unbiased Monte Carlo with a counter-based RNG, and fits the convergence
and partition-growth rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EigenResidualTooLarge,
    HorizonExceedsBox,
    NoDecayDetected,
    NonPositivePhi,
    RowDeficitTooLarge,
    StartOutsideBox,
)
from .lattice import LatticeBox, WalkKernel, _as_offset, apply_P
from .potential import PotentialSpec
from .spectral import TruncatedOperator, truncated_operator

#: fixed Monte Carlo chunk so sample i always uses stream (seed, i // CHUNK)
MC_CHUNK = 4096


def counter_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, stream).

    Streams are independent by key separation, so chunked or parallel
    sampling reproduces exactly regardless of scheduling.
    """
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ChainKernel:
    """Doob-transformed stochastic matrix with its reversible measure."""

    box: LatticeBox
    sites: np.ndarray
    rows: np.ndarray
    stationary: np.ndarray
    row_deficit: float
    rate: float
    phi: np.ndarray
    dvec: np.ndarray

    def index(self, site) -> int:
        return self.box.index(site)


def doob_kernel(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    eigenpair: tuple[float, np.ndarray],
    box: LatticeBox | int,
) -> ChainKernel:
    """Ground-state transform of the truncation at the supplied eigenpair.

    The eigenpair must be accurate (relative residual <= 1e-8) and phi
    strictly positive; rows are renormalized exactly, with the pre-
    normalization deficit recorded (it quantifies truncation honesty, and
    must not exceed 1e-6).
    """
    if isinstance(box, int):
        op = truncated_operator(kernel, spec, box)
    else:
        op = truncated_operator(kernel, spec, box.radius)
    r, phi = float(eigenpair[0]), np.asarray(eigenpair[1], dtype=float)
    if phi.shape != (op.volume,):
        raise ValueError(f"phi shape {phi.shape} does not match box volume {op.volume}")
    if phi.min() <= 0.0:
        raise NonPositivePhi(f"min phi = {phi.min()!r}; Doob transform needs phi > 0")
    resid = float(np.linalg.norm(op.matrix @ phi - r * phi) / np.linalg.norm(phi))
    if resid > 1e-8:
        raise EigenResidualTooLarge(f"eigen residual {resid:.3e} exceeds 1e-8")
    rows = (op.matrix * phi[None, :]) / (r * phi[:, None])
    sums = rows.sum(axis=1)
    deficit = float(np.max(np.abs(sums - 1.0)))
    if deficit > 1e-6:
        raise RowDeficitTooLarge(f"row deficit {deficit:.3e} exceeds 1e-6")
    rows = rows / sums[:, None]
    m = phi * phi / op.dvec
    m = m / m.sum()
    return ChainKernel(
        box=op.box,
        sites=op.sites,
        rows=rows,
        stationary=m,
        row_deficit=deficit,
        rate=r,
        phi=phi,
        dvec=op.dvec,
    )


def simulate_chain(chain: ChainKernel, x0, steps: int, seed: int) -> np.ndarray:
    """Sample a path of the chain; deterministic given the seed.

    Returns the visited sites as a (steps + 1, d) integer array.
    """
    x0 = _as_offset(x0, chain.box.dim)
    if not chain.box.contains(x0):
        raise StartOutsideBox(f"{x0} outside {chain.box}")
    cum = np.cumsum(chain.rows, axis=1)
    cum[:, -1] = 1.0
    uniforms = counter_rng(seed).random(steps)
    path = np.empty(steps + 1, dtype=int)
    path[0] = chain.index(x0)
    cur = path[0]
    for i in range(steps):
        cur = int(np.searchsorted(cum[cur], uniforms[i], side="right"))
        path[i + 1] = cur
    return chain.sites[path]


def occupation_distribution(chain: ChainKernel, path_sites: np.ndarray) -> np.ndarray:
    """Empirical occupation over box indices from a simulated path."""
    side = chain.box.side
    weights = side ** np.arange(chain.box.dim - 1, -1, -1)
    idx = (path_sites + chain.box.radius) @ weights
    counts = np.bincount(idx, minlength=chain.box.volume)
    return counts / counts.sum()


def fk_semigroup(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    f: np.ndarray,
    n: int,
    box: LatticeBox,
) -> np.ndarray:
    """Exact n-fold application of the weighted transfer operator.

    One step is convolution by p followed by the pointwise multiplication
    with 1 + V; zero boundary outside the box (paths leaving the box are
    killed, so a box absorbing the full horizon reproduces the free-lattice
    value exactly).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    dvec = _dvec_on(spec, box)
    out = np.asarray(f, dtype=float).copy()
    for _ in range(n):
        out = apply_P(kernel, out, box) * dvec
    return out


def _dvec_on(spec: PotentialSpec | None, box: LatticeBox) -> np.ndarray:
    if spec is None:
        return np.ones(box.shape)
    vals = spec.values_on(box.sites())
    return (1.0 + vals).reshape(box.shape)


def fk_monte_carlo(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    f,
    n: int,
    samples: int,
    seed: int,
    x0=None,
) -> tuple[float, float]:
    """Unbiased Monte Carlo for the weighted semigroup applied to f at x0.

    Walk paths are sampled exactly (no truncation), each carrying the
    multiplicative weight prod (1 + V); f is a callable on an (m, d) site
    array or None for f = 1.  Randomness comes in fixed chunks keyed by
    (seed, chunk), so the estimate is reproducible however the chunks are
    scheduled.  Returns (estimate, standard error).
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    d = kernel.dimension
    x0 = (0,) * d if x0 is None else _as_offset(x0, d)
    offsets = kernel.offset_array()
    cum = np.cumsum(kernel.prob_array())
    cum[-1] = 1.0
    # dense potential lookup covering the walk range
    reach = n * kernel.reach + max((abs(c) for c in x0), default=0)
    vbox = LatticeBox.cube(max(reach, 1), d)
    vgrid = _dvec_on(spec, vbox).ravel()
    weights_axis = vbox.side ** np.arange(d - 1, -1, -1)

    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(MC_CHUNK, samples - done)
        rng = counter_rng(seed, done // MC_CHUNK)
        u = rng.random((m, n))
        steps = offsets[np.searchsorted(cum, u, side="right")]
        pos = np.empty((m, n + 1, d), dtype=int)
        pos[:, 0, :] = x0
        np.cumsum(steps, axis=1, out=steps)
        pos[:, 1:, :] = steps + np.asarray(x0)[None, None, :]
        visited = pos[:, :n, :]  # weight uses sites S_0 .. S_{n-1}
        flat = (visited + vbox.radius) @ weights_axis
        w = vgrid[flat].prod(axis=1)
        if f is not None:
            w = w * np.asarray(f(pos[:, n, :]), dtype=float)
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)


@dataclass(frozen=True)
class GibbsMarginal:
    """Exact finite-horizon marginal of the reweighted path measure."""

    horizon: int
    k: int
    law: dict
    partition: float


def gibbs_marginal(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    N: int,
    ks,
    box: LatticeBox,
) -> dict[int, GibbsMarginal]:
    """Marginal laws of (S_1 .. S_k) under the horizon-N Gibbs measure.

    Computed by forward path enumeration against the exact backward
    semigroup: the weight of a prefix (x_1 .. x_k) is

        prod_{j<k} (1 + V(x_j)) p(x_{j+1} - x_j) * (M^(N-k) 1)(x_k) / Z_N

    with x_0 = 0 and Z_N = (M^N 1)(0).  The box must absorb the full
    horizon so the transfer values are exact.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 0:
        raise ValueError("marginal lengths must be nonnegative")
    if N < max(ks) + 1:
        raise ValueError("N must exceed every marginal length")
    if box.radius < N * kernel.reach:
        raise HorizonExceedsBox(f"box radius {box.radius} < N*r = {N * kernel.reach}")
    d = kernel.dimension
    dvec = _dvec_on(spec, box)
    powers: dict[int, np.ndarray] = {0: np.ones(box.shape)}
    cur = powers[0]
    for m in range(1, N + 1):
        cur = apply_P(kernel, cur, box) * dvec
        needed = {N - k for k in ks} | {N}
        if m in needed:
            powers[m] = cur.copy()
    origin = (box.radius,) * d
    partition = float(powers[N][origin])

    out = {}
    for k in ks:
        law: dict[tuple, float] = {}
        back = powers[N - k]

        def extend(prefix, site, weight):
            if len(prefix) == k:
                idx = tuple(c + box.radius for c in site)
                law[prefix] = law.get(prefix, 0.0) + weight * float(back[idx]) / partition
                return
            w_here = weight * float(dvec[tuple(c + box.radius for c in site)])
            for off, p in zip(kernel.offsets, kernel.probs):
                nxt = tuple(a + b for a, b in zip(site, off))
                extend(prefix + (nxt,), nxt, w_here * p)

        extend((), (0,) * d, 1.0)
        out[k] = GibbsMarginal(horizon=N, k=k, law=law, partition=partition)
    return out


def chain_prefix_law(chain: ChainKernel, k: int, x0=None) -> dict[tuple, float]:
    """Exact law of the first k chain steps started at x0 (default origin)."""
    x0 = (0,) * chain.box.dim if x0 is None else _as_offset(x0, chain.box.dim)
    start = chain.index(x0)
    law: dict[tuple, float] = {}
    side = chain.box.side
    weights = side ** np.arange(chain.box.dim - 1, -1, -1)

    def extend(prefix, idx, prob):
        if len(prefix) == k:
            law[prefix] = law.get(prefix, 0.0) + prob
            return
        site = chain.sites[idx]
        for col in np.nonzero(chain.rows[idx])[0]:
            nxt = chain.sites[col]
            extend(prefix + (tuple(nxt),), int(col), prob * float(chain.rows[idx, col]))

    extend((), start, 1.0)
    return law


@dataclass(frozen=True)
class ConvergenceFit:
    eps_fit: float
    deviations: tuple[tuple[int, float], ...]


def convergence_rate(
    kernel: WalkKernel,
    spec: PotentialSpec | None,
    chain: ChainKernel,
    k_fixed: int,
    n_range,
    f,
) -> ConvergenceFit:
    """Geometric fit of D(n) = |E_mu_n F - E_nu F| for F = f(S_1 .. S_k).

    mu_n marginals come from the exact transfer computation, nu from the
    chain's exact prefix law; f maps a k-tuple of sites to a float.  The
    fitted ratio must be < 1; NoDecayDetected otherwise (or when no usable
    deviations remain above floating-point noise).
    """
    ns = sorted(int(n) for n in n_range)
    box = LatticeBox.cube(max(ns) * kernel.reach + 1, kernel.dimension)
    nu_law = chain_prefix_law(chain, k_fixed)
    nu_val = sum(p * f(path) for path, p in nu_law.items())
    devs = []
    for n in ns:
        marg = gibbs_marginal(kernel, spec, n, [k_fixed], box)[k_fixed]
        mu_val = sum(p * f(path) for path, p in marg.law.items())
        devs.append((n, abs(mu_val - nu_val)))
    floor = 1e-13 * (1.0 + abs(nu_val))
    usable = [(n, dv) for n, dv in devs if dv > floor]
    if not usable:
        return ConvergenceFit(eps_fit=0.0, deviations=tuple(devs))
    if len(usable) < 3:
        raise NoDecayDetected("fewer than 3 nonzero deviations to fit")
    xs = np.array([n for n, _ in usable], dtype=float)
    ys = np.log([dv for _, dv in usable])
    slope = np.polyfit(xs, ys, 1)[0]
    eps = float(np.exp(slope))
    if eps >= 1.0:
        raise NoDecayDetected(f"fitted ratio {eps:.4f} is not < 1")
    return ConvergenceFit(eps_fit=eps, deviations=tuple(devs))


@dataclass(frozen=True)
class PartitionGrowth:
    """Growth diagnostics of the partition function Z_N = (M^N 1)(0)."""

    z_values: tuple[float, ...]
    roots: tuple[float, ...]
    ratio_estimates: tuple[float, ...]

    @property
    def final_root(self) -> float:
        return self.roots[-1]

    @property
    def final_ratio_estimate(self) -> float:
        return self.ratio_estimates[-1]


def partition_growth(
    kernel: WalkKernel, spec: PotentialSpec | None, N_max: int, x0=None
) -> PartitionGrowth:
    """Z_N for N = 1 .. N_max with two growth-rate readouts.

    roots[N-1] = Z_N^(1/N) converges to the top of the spectrum but only at
    speed log(Z_N / r^N) / N, i.e. O(1/N).  ratio_estimates[N-1] =
    sqrt(Z_N / Z_{N-2}) is the power-method readout of the same limit and
    converges geometrically (the two-step stride cancels the sign-flipping
    peripheral component of bipartite kernels).
    """
    if N_max < 3:
        raise ValueError("N_max must be >= 3")
    d = kernel.dimension
    x0 = (0,) * d if x0 is None else _as_offset(x0, d)
    radius = N_max * kernel.reach + max((abs(c) for c in x0), default=0) + 1
    box = LatticeBox.cube(radius, d)
    dvec = _dvec_on(spec, box)
    idx = tuple(c + box.radius for c in x0)
    cur = np.ones(box.shape)
    zs: list[float] = []
    for _ in range(N_max):
        cur = apply_P(kernel, cur, box) * dvec
        zs.append(float(cur[idx]))
    roots = [z ** (1.0 / (i + 1)) for i, z in enumerate(zs)]
    ratios = [float("nan")] * min(2, N_max)
    for i in range(2, N_max):
        ratios.append(math.sqrt(zs[i] / zs[i - 2]))
    return PartitionGrowth(
        z_values=tuple(zs), roots=tuple(roots), ratio_estimates=tuple(ratios)
    )
