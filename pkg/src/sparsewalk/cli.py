"""Command-line experiment runner.

Every subcommand reads a JSON config (`--config`), runs one experiment, and
writes deterministic artifacts into `--out`: a CSV table per experiment and
a versioned JSON summary.  `suite paper-repro` replays the whole acceptance
battery and exits nonzero if any criterion fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from . import birman_schwinger as bsmod
from . import gibbs as gibbsmod
from . import lattice, resolvent, spectral
from .config import (
    check_experiment,
    kernel_from_config,
    load_config,
    potential_from_config,
    require,
)
from .errors import ConfigInvalid, ExperimentFailed, SparseWalkError

SCHEMA_VERSION = 1


def _write_atomic(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(c) if isinstance(c, float) else c for c in row])
    _write_atomic(path, buf.getvalue())


def _write_summary(out: Path, kind: str, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "experiment": kind, **payload}
    _write_atomic(out / "summary.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")


# -- experiments ---------------------------------------------------------------

def exp_validate(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    interval = lattice.spectrum_bounds(kernel, int(cfg.get("grid_density", 256)))
    rows = [(list(off), p) for off, p in zip(kernel.offsets, kernel.probs)]
    _write_csv(out / "kernel.csv", ["offset", "probability"], rows)
    return {
        "dimension": kernel.dimension,
        "range": kernel.reach,
        "p0": kernel.p0,
        "spectrum_lower": interval.lower,
        "irreducible_proxy": "Q(0,2r) covered",
        "bipartite": spectral.bipartite_detect(kernel) is not None,
    }


def exp_green(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    lambdas = [float(x) for x in require(cfg, "lambdas", "green")]
    xs = cfg.get("xs", [0])
    pts = int(cfg.get("pts_per_axis", 256))
    rows = []
    for lam in lambdas:
        for x in xs:
            ev = resolvent.green_kernel(kernel, lam, x, pts)
            rows.append((lam, x if isinstance(x, int) else list(x), ev.value, ev.method, ev.est_error))
    _write_csv(out / "green.csv", ["lambda", "x", "value", "method", "est_error"], rows)
    return {"points": len(rows)}


def exp_bs(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    if spec is None:
        raise ConfigInvalid("bs experiment needs a potential")
    lo = float(require(cfg, "lambda_lo", "bs"))
    hi = float(require(cfg, "lambda_hi", "bs"))
    count = int(cfg.get("scan_points", 21))
    box = int(cfg.get("box_radius", 256))
    alpha = float(cfg.get("alpha", 0.5))
    rows = []
    for lam in np.linspace(lo, hi, count):
        asm = bsmod.assemble_bs(kernel, spec, float(lam), box)
        _, dist = bsmod.bs_eigenvalue_test(asm)
        try:
            cert = bsmod.neumann_invertibility(kernel, spec, (), float(lam), alpha, box)
            valid = cert.valid
        except SparseWalkError:
            valid = False
        rows.append((float(lam), dist, valid))
    _write_csv(out / "bs.csv", ["lambda", "distance_to_1", "valid_certificate"], rows)
    return {"scan": [lo, hi, count]}


def exp_spectrum(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    Ls = [int(L) for L in require(cfg, "L_sequence", "spectrum")]
    bundle = spectral.spectral_report(kernel, spec, Ls)
    rows = []
    for rep in bundle.reports:
        rows.append(
            (
                rep.L,
                rep.r,
                rep.ell,
                rep.gap,
                rep.abs_gap,
                rep.second_abs,
                rep.lambda0 if rep.lambda0 is not None else "",
                rep.decay.rate if rep.decay is not None else "",
            )
        )
    _write_csv(
        out / "spectrum.csv",
        ["L", "r", "ell", "gap", "abs_gap", "second_abs", "lambda0_pred", "decay_alpha"],
        rows,
    )
    eigen = {str(rep.L): [float(w) for w in rep.eigenvalues] for rep in bundle.reports}
    _write_atomic(out / "eigenvalues.json", json.dumps(eigen, sort_keys=True) + "\n")
    return {
        "lambda0": bundle.lambda0,
        "lambda_v": list(bundle.lambda_v),
        "discrete": list(bundle.discrete),
    }


def exp_essential(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    if spec is None:
        raise ConfigInvalid("essential experiment needs a potential")
    pred = spectral.essential_spectrum_predictor(kernel, spec)
    rows = [("lambda0", pred.lambda0 if pred.lambda0 is not None else "")]
    rows += [(f"root_above_v={v}", lam) for v, lam in sorted(pred.above.items())]
    for v, lams in sorted(pred.below.items()):
        for i, lam in enumerate(lams):
            rows.append((f"root_below_v={v}_{i}", lam))
    _write_csv(out / "essential.csv", ["quantity", "lambda"], rows)
    return {"lambda_v": list(pred.lambda_v), "lambda0": pred.lambda0}


def exp_decay(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    if spec is None:
        raise ConfigInvalid("decay experiment needs a potential")
    lam = float(cfg.get("lambda", 2.0))
    alpha = float(cfg.get("alpha", 0.6))
    box = int(cfg.get("box_radius", 512))
    cert = bsmod.neumann_invertibility(kernel, spec, (), lam, alpha, box)
    L = int(cfg.get("L", 80))
    op = spectral.truncated_operator(kernel, spec, L)
    w, U = np.linalg.eigh(op.sym)
    pred = spectral.essential_spectrum_predictor(kernel, spec)
    threshold = (pred.lambda0 if pred.lambda0 is not None else 1.0) + 1e-4
    lo, hi = cfg.get("fit_window", (10, 18))
    rows = []
    for i in range(len(w)):
        if abs(w[i]) <= threshold:
            continue
        phi = np.sqrt(op.dvec) * U[:, i]
        pairs = [(t, abs(phi[op.box.index((t,) + (0,) * (kernel.dimension - 1))])) for t in range(lo, hi + 1)]
        fit = resolvent.decay_rate_estimate(pairs)
        rows.append((float(w[i]), fit.rate, fit.residual_rms))
    _write_csv(out / "decay.csv", ["eigenvalue", "decay_rate", "fit_rms"], rows)
    return {
        "certificate_valid": cert.valid,
        "epsilon0": cert.epsilon0,
        "contraction": cert.contraction,
        "discrete_count": len(rows),
    }


def _chain_from_config(cfg, kernel, spec):
    L = int(cfg.get("L", 60))
    op = spectral.truncated_operator(kernel, spec, L)
    r, phi = spectral.perron_pair(op, tol=float(cfg.get("eigen_tol", 1e-10)))
    return op, gibbsmod.doob_kernel(kernel, spec, (r, phi), op.box)


def exp_gibbs(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    op, chain = _chain_from_config(cfg, kernel, spec)
    n_lo, n_hi = cfg.get("n_range", (10, 60))
    k_fixed = int(cfg.get("k", 1))
    target = cfg.get("indicator_site", [1])
    site = tuple(int(c) for c in target)

    fit = gibbsmod.convergence_rate(
        kernel, spec, chain, k_fixed, range(int(n_lo), int(n_hi) + 1),
        lambda path: 1.0 if path[0] == site else 0.0,
    )
    rows = [(n, d, fit.eps_fit) for n, d in fit.deviations]
    _write_csv(out / "gibbs.csv", ["n", "D_n", "fitted_eps"], rows)
    w = np.linalg.eigvalsh(op.sym)
    second = spectral._second_abs(w, float(w[-1]))
    return {"fitted_eps": fit.eps_fit, "spectral_eps": second / float(w[-1])}


def exp_doob(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    op, chain = _chain_from_config(cfg, kernel, spec)
    steps = int(cfg.get("steps", 100000))
    path = gibbsmod.simulate_chain(chain, (0,) * kernel.dimension, steps, int(cfg["seed"]))
    emp = gibbsmod.occupation_distribution(chain, path)
    tv = 0.5 * float(np.abs(emp - chain.stationary).sum())
    rows = [
        (list(site), float(m), float(e))
        for site, m, e in zip(map(tuple, chain.sites), chain.stationary, emp)
        if m > 1e-12 or e > 0
    ]
    _write_csv(out / "doob.csv", ["site", "stationary", "empirical"], rows)
    if cfg.get("dump_path"):
        lines = "\n".join(json.dumps(list(map(int, s))) for s in path)
        _write_atomic(out / "path.jsonl", lines + "\n")
    return {"row_deficit": chain.row_deficit, "tv_distance": tv, "rate": chain.rate}


def exp_fk(cfg: dict, out: Path) -> dict:
    kernel = kernel_from_config(cfg)
    spec = potential_from_config(cfg, kernel.dimension)
    n = int(cfg.get("n", 20))
    samples = int(cfg.get("samples", 100000))
    seed = int(cfg["seed"])
    box = lattice.LatticeBox.cube(n * kernel.reach + 2, kernel.dimension)
    ones = np.ones(box.shape)
    rows = []
    for m in range(0, n + 1):
        exact = float(gibbsmod.fk_semigroup(kernel, spec, ones, m, box)[(box.radius,) * kernel.dimension])
        root = exact ** (1.0 / m) if m else 1.0
        rows.append((m, exact, root, "", ""))
    est, err = gibbsmod.fk_monte_carlo(kernel, spec, None, n, samples, seed)
    rows[-1] = (n, rows[-1][1], rows[-1][2], est, err)
    _write_csv(out / "fk.csv", ["n", "exact", "z_root", "mc_estimate", "mc_stderr"], rows)
    exact_n = rows[-1][1]
    if abs(est - exact_n) > 3.0 * err:
        raise ExperimentFailed(
            f"fk: Monte Carlo estimate {est} deviates from exact {exact_n} beyond 3 sigma"
        )
    return {"n": n, "exact": exact_n, "estimate": est, "stderr": err}


RUNNERS = {
    "validate": exp_validate,
    "green": exp_green,
    "bs": exp_bs,
    "spectrum": exp_spectrum,
    "essential": exp_essential,
    "decay": exp_decay,
    "gibbs": exp_gibbs,
    "doob": exp_doob,
    "fk": exp_fk,
}


def run_experiment(cfg: dict, out_dir) -> dict:
    kind = check_experiment(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        payload = RUNNERS[kind](cfg, out)
    except (ConfigInvalid, ExperimentFailed):
        raise
    except SparseWalkError as err:
        tb = err.__traceback__
        while tb is not None and tb.tb_next is not None:
            tb = tb.tb_next
        origin = tb.tb_frame.f_globals.get("__name__", "?") if tb else "?"
        raise ExperimentFailed(
            f"{kind}: invariant {type(err).__name__} violated in {origin}: {err}"
        ) from err
    _write_summary(out, kind, {"results": payload})
    return payload


def run_suite(name: str, out_dir, threads: int = 1, only=None) -> bool:
    if name != "paper-repro":
        raise ConfigInvalid(f"unknown suite {name!r}; available: paper-repro")
    indices = sorted(acceptance.CRITERIA) if not only else sorted(only)
    bad = [i for i in indices if i not in acceptance.CRITERIA]
    if bad:
        raise ConfigInvalid(f"unknown criteria {bad}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(acceptance.run_criterion, indices))
    else:
        results = [acceptance.run_criterion(i) for i in indices]
    # timings go to stdout only: artifact files must be byte-identical run to run
    rows = [(r.index, r.name, "PASS" if r.passed else "FAIL") for r in results]
    _write_csv(out / "suite.csv", ["criterion", "name", "status"], rows)
    payload = {
        "results": {
            str(r.index): {
                "name": r.name,
                "passed": r.passed,
                "checks": {k: bool(v) for k, v in r.checks.items()},
            }
            for r in results
        }
    }
    _write_summary(out, "suite", payload)
    for r in results:
        print(r.summary_line())
    return all(r.passed for r in results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsewalk",
        description="Spectral laboratory for sparsely perturbed lattice walks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run the '{kind}' experiment from a config")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1)
    p = sub.add_parser("suite", help="run an aggregate verification suite")
    p.add_argument("name", nargs="?", default="paper-repro")
    p.add_argument("--out", default="results/suite")
    p.add_argument("--only", type=int, nargs="*", default=None, help="criteria subset")
    p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            ok = run_suite(args.name, args.out, threads=args.threads, only=args.only)
            return 0 if ok else 1
        cfg = load_config(args.config)
        cfg["experiment"] = args.command
        if args.seed is not None:
            cfg["seed"] = args.seed
        run_experiment(cfg, args.out)
        return 0
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ExperimentFailed as err:
        print(f"experiment failed: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
