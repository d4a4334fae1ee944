"""Command-line interface.

Subcommands: density (solve the limit on a grid), simulate (finite-n
ensembles), compare (convergence study / Gram duality), verify
(concentration checks). A `--config` file holds flat key=value pairs
named after the long flags; explicit flags override it. Every command
writes a manifest.json recording flags, seed, and sha256 of outputs, and
reruns are byte-identical.

Exit codes: 0 success, 2 solver or input failure, 3 criterion failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .ensemble import (EnsembleConfig, build_matrix, eigenvalues_sym,
                       gram_counting_relation, gram_matrix, parse_h0,
                       write_spectrum_csv)
from .errors import NonConvergence, Rank1SpecError
from .measures import (AmplitudeLaw, SpectralMeasure, save_measure_json,
                       write_density_csv)
from .samplers import RngStream, VectorLaw, isotropy_estimate
from .solver import ModelSpec, SolverOptions, limit_density, solve_mpe_grid
from .verify import (convergence_study, verify_counting_variance,
                     verify_norm_tail, verify_quadratic_form,
                     verify_stieltjes_variance)

GRID_NUDGE = 1e-9
GRAM_TOL = 1e-8


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """'a:b:count' -> uniform grid with endpoints nudged inward 1e-9."""
    a, b, count = text.split(":")
    a, b, count = float(a), float(b), int(count)
    if count < 1 or b <= a:
        raise ValueError(f"bad grid spec {text!r}")
    grid = np.linspace(a, b, count)
    grid[0] += GRID_NUDGE
    grid[-1] -= GRID_NUDGE
    return grid


def parse_sigma(text: str) -> AmplitudeLaw:
    """'atoms:t1:w1,t2:w2,...' -> AmplitudeLaw."""
    if not text.startswith("atoms:"):
        raise ValueError(f"amplitude law must start with 'atoms:', got {text!r}")
    pairs = []
    for chunk in text[len("atoms:"):].split(","):
        t, w = chunk.split(":")
        pairs.append((float(t), float(w)))
    return AmplitudeLaw(pairs)


def parse_measure_atoms(text: str) -> SpectralMeasure:
    if not text.startswith("atoms:"):
        raise ValueError(f"measure spec must start with 'atoms:', got {text!r}")
    pairs = []
    for chunk in text[len("atoms:"):].split(","):
        loc, mass = chunk.split(":")
        pairs.append((float(loc), float(mass)))
    pairs.sort(key=lambda p: p[0])
    return SpectralMeasure(atoms=pairs)


def measure_from_spectrum_file(path: str) -> SpectralMeasure:
    values = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                values.append(float(line))
    values = np.sort(np.asarray(values))
    locs, counts = np.unique(values, return_counts=True)
    atoms = [(float(l), float(c) / values.size) for l, c in zip(locs, counts)]
    return SpectralMeasure(atoms=atoms)


def parse_pair(text: str) -> tuple[float, float]:
    a, b = text.split(",")
    return float(a), float(b)


def parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")


def write_manifest(out_dir: Path, command: str, flags: dict, seed,
                   outputs: list[Path], diagnostics: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "flags": {k: flags[k] for k in sorted(flags)},
        "seed": seed,
        "outputs": [{"path": p.name, "sha256": _sha256(p)} for p in outputs],
    }
    if diagnostics is not None:
        manifest["diagnostics"] = diagnostics
    path = out_dir / "manifest.json"
    _write_json(path, manifest)
    return path


def write_histogram_csv(path: Path, edges: np.ndarray, mass: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_left,bin_right,mass\n")
        for left, right, m in zip(edges[:-1], edges[1:], mass):
            fh.write(f"{float(left)!r},{float(right)!r},{float(m)!r}\n")


def read_histogram_csv(path) -> tuple[np.ndarray, np.ndarray]:
    lefts, rights, mass = [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "bin_left,bin_right,mass":
            raise ValueError(f"unexpected histogram header {header!r}")
        for line in fh:
            a, b, m = line.split(",")
            lefts.append(float(a))
            rights.append(float(b))
            mass.append(float(m))
    edges = np.array(lefts + [rights[-1]])
    return edges, np.array(mass)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _model_from_args(args) -> ModelSpec:
    sigma = parse_sigma(args.sigma)
    if getattr(args, "h0_spectrum", None):
        n0 = measure_from_spectrum_file(args.h0_spectrum)
    else:
        n0 = parse_measure_atoms(args.n0)
    return ModelSpec(c=args.c, sigma=sigma, n0=n0)


def _solver_options(args) -> SolverOptions:
    return SolverOptions(damping=args.damping, tol=args.tol,
                         max_iter=args.max_iter, eps_start=args.eps_start,
                         eps_factor=args.eps_factor, eps_final=args.eps_final,
                         tau_truncation=args.truncate)


def cmd_density(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = _model_from_args(args)
    opts = _solver_options(args)
    grid = parse_grid(args.grid)
    try:
        f_vals, iterations = solve_mpe_grid(grid, model, opts,
                                            return_iterations=True)
        # the grid may be a deliberate zoom window, so partial mass is fine
        measure = limit_density(model, grid, opts, require_mass=False)
    except NonConvergence as exc:
        print(f"density solve failed at lambda={exc.lam:.9g}, eps={exc.eps:.9g}",
              file=sys.stderr)
        return 2
    del f_vals
    density_path = out_dir / "density.csv"
    measure_path = out_dir / "measure.json"
    write_density_csv(measure, density_path)
    save_measure_json(measure, measure_path)
    diagnostics = {
        "iterations": [int(k) for k in iterations],
        "atoms": measure.to_dict()["atoms"],
        "total_mass": measure.total_mass,
        "probability": measure.probability,
        "eps_final": opts.eps_final,
    }
    write_manifest(out_dir, "density", _flags_dict(args), None,
                   [density_path, measure_path], diagnostics)
    return 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = EnsembleConfig(n=args.n, m=args.m, law=VectorLaw.parse(args.law),
                            sigma=parse_sigma(args.sigma),
                            h0=parse_h0(args.h0), seed=args.seed)
    outputs = []
    pooled = []
    for trial in range(args.trials):
        spectrum = eigenvalues_sym(build_matrix(config, trial=trial))
        path = out_dir / f"eigenvalues_{trial:03d}.csv"
        write_spectrum_csv(spectrum, path)
        outputs.append(path)
        pooled.append(spectrum.eigenvalues)
    pooled = np.concatenate(pooled)
    counts, edges = np.histogram(pooled, bins=args.bins)
    mass = counts / pooled.size
    hist_path = out_dir / "histogram.csv"
    write_histogram_csv(hist_path, edges, mass)
    outputs.append(hist_path)
    write_manifest(out_dir, "simulate", _flags_dict(args), args.seed, outputs)
    return 0


def cmd_compare(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.gram:
        return _compare_gram(args, out_dir)
    model = _model_from_args(args)
    opts = _solver_options(args)
    law = VectorLaw.parse(args.law)
    grid = parse_grid(args.grid)
    try:
        report = convergence_study(law, model, parse_int_list(args.dims),
                                   args.seeds, args.seed, grid, opts)
    except NonConvergence as exc:
        print(f"limit solve failed at lambda={exc.lam:.9g}, eps={exc.eps:.9g}",
              file=sys.stderr)
        return 2
    json_path = out_dir / "convergence.json"
    csv_path = out_dir / "convergence.csv"
    _write_json(json_path, report.to_dict())
    csv_path.write_text("\n".join(report.csv_rows()) + "\n")
    write_manifest(out_dir, "compare", _flags_dict(args), args.seed,
                   [json_path, csv_path])
    if not report.passed:
        print("convergence criterion failed", file=sys.stderr)
        return 3
    return 0


def _compare_gram(args, out_dir: Path) -> int:
    config = EnsembleConfig(n=args.n, m=args.m, law=VectorLaw.parse(args.law),
                            sigma=parse_sigma(args.sigma),
                            h0=parse_h0(args.h0), seed=args.seed)
    full = eigenvalues_sym(build_matrix(config, trial=0))
    gram = eigenvalues_sym(gram_matrix(config, trial=0))
    discrepancy = gram_counting_relation(gram, full, args.n, args.m)
    json_path = out_dir / "gram.json"
    _write_json(json_path, {"kind": "gram", "n": args.n, "m": args.m,
                            "discrepancy": discrepancy,
                            "bound": GRAM_TOL,
                            "pass": discrepancy <= GRAM_TOL})
    write_manifest(out_dir, "compare", _flags_dict(args), args.seed, [json_path])
    if discrepancy > GRAM_TOL:
        print(f"gram duality discrepancy {discrepancy:.3e} > {GRAM_TOL}",
              file=sys.stderr)
        return 3
    return 0


def cmd_verify(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    law = VectorLaw.parse(args.law)
    sigma = parse_sigma(args.sigma)
    check = args.check
    # quadform works off --dims; every other check needs explicit sizes
    needed = {"counting-var": ("n", "m"), "stieltjes-var": ("n", "m"),
              "tail": ("n",), "isotropy": ("n",)}
    for flag in needed.get(check, ()):
        if getattr(args, flag) is None:
            raise ValueError(f"--check {check} requires --{flag}")
    csv_lines: list[str] | None = None
    if check == "counting-var":
        config = EnsembleConfig(n=args.n, m=args.m, law=law, sigma=sigma,
                                h0=parse_h0(args.h0), seed=args.seed)
        report = verify_counting_variance(config, parse_pair(args.interval),
                                          args.trials)
        data = report.to_dict()
        csv_lines = ["kind,estimate,bound,trials,se,pass", report.csv_row()]
    elif check == "stieltjes-var":
        config = EnsembleConfig(n=args.n, m=args.m, law=law, sigma=sigma,
                                h0=parse_h0(args.h0), seed=args.seed)
        re_z, im_z = parse_pair(args.z)
        report = verify_stieltjes_variance(config, complex(re_z, im_z),
                                           args.trials)
        data = report.to_dict()
        csv_lines = ["kind,estimate,bound,trials,se,pass", report.csv_row()]
    elif check == "quadform":
        report = verify_quadratic_form(law, parse_int_list(args.dims),
                                       args.samples, args.seed)
        data = report.to_dict()
        csv_lines = ["matrix,n,variance,variance_se"] + report.csv_rows()
    elif check == "tail":
        report = verify_norm_tail(law, args.n, args.samples, args.seed,
                                  parse_float_list(args.t_values))
        data = report.to_dict()
        csv_lines = ["t,empirical,envelope,binomial_se"] + report.csv_rows()
    elif check == "isotropy":
        report = isotropy_estimate(law, args.n, args.samples,
                                   RngStream(args.seed, 0))
        data = report.to_dict()
        data = {"kind": "isotropy",
                "params": {"law": data["law"], "n": data["n"],
                           "samples": data["samples"]},
                "estimate": data["max_cov_deviation"],
                "bound": data["ratio_threshold"],
                "se": 0.0,
                "pass": data["pass"],
                "mean_norm": data["mean_norm"],
                "max_ratio": data["max_ratio"]}
    else:
        raise ValueError(f"unknown check {check!r}")
    json_path = out_dir / "report.json"
    _write_json(json_path, data)
    outputs = [json_path]
    if csv_lines is not None:
        csv_path = out_dir / "report.csv"
        csv_path.write_text("\n".join(csv_lines) + "\n")
        outputs.append(csv_path)
    write_manifest(out_dir, "verify", _flags_dict(args), args.seed, outputs)
    return 0 if data["pass"] else 3


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _flags_dict(args) -> dict:
    # out is a filesystem detail; keeping it out of the manifest makes
    # reruns byte-identical regardless of destination directory
    skip = {"func", "config", "out"}
    return {k.replace("_", "-"): v for k, v in vars(args).items()
            if k not in skip and v is not None}


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--sigma", default="atoms:1:1")
    p.add_argument("--n0", default="atoms:0:1")
    p.add_argument("--h0-spectrum", dest="h0_spectrum", default=None,
                   help="eigenvalue CSV defining the base spectrum")
    p.add_argument("--grid", required=True, help="a:b:count")
    p.add_argument("--eps-final", dest="eps_final", type=float, default=1e-4)
    p.add_argument("--eps-start", dest="eps_start", type=float, default=None)
    p.add_argument("--eps-factor", dest="eps_factor", type=float, default=0.5)
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    p.add_argument("--truncate", type=float, default=None)


def _add_ensemble_flags(p: argparse.ArgumentParser, need_nm: bool) -> None:
    p.add_argument("--n", type=int, required=need_nm)
    p.add_argument("--m", type=int, required=need_nm)
    p.add_argument("--law", default="sphere")
    p.add_argument("--h0", default="zero")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank1spec")
    parser.add_argument("--config", default=None, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="solve the limiting density on a grid")
    _add_solver_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", help="sample finite-n ensembles")
    _add_ensemble_flags(p, need_nm=True)
    p.add_argument("--sigma", default="atoms:1:1")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="convergence study or Gram duality")
    _add_solver_flags(p)
    _add_ensemble_flags(p, need_nm=False)
    p.add_argument("--dims", default="256,512,1024")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--gram", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="concentration and isotropy checks")
    p.add_argument("--check", required=True,
                   choices=["counting-var", "stieltjes-var", "quadform",
                            "tail", "isotropy"])
    _add_ensemble_flags(p, need_nm=False)
    p.add_argument("--sigma", default="atoms:1:1")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--interval", default="0.25,2.25")
    p.add_argument("--z", default="0,1")
    p.add_argument("--dims", default="64,128,256,512")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--t-values", dest="t_values", default="1,1.5,2")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)
    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Expand --config key=value pairs into flags ahead of explicit ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    pre: list[str] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if value.lower() in ("true", "yes") and key in ("gram",):
            pre.append(f"--{key}")
        else:
            pre.extend([f"--{key}", value])
    rest = argv[:i] + argv[i + 2:]
    # keep the subcommand first, then config-derived flags, then explicit
    return rest[:1] + pre + rest[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConvergence as exc:
        print(f"solver failed at lambda={exc.lam:.9g}, eps={exc.eps:.9g}",
              file=sys.stderr)
        return 2
    except (Rank1SpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
