"""Experiment harness: projections, solves, phase transitions, spectrum
checks, and instance generation from the command line.

All commands are deterministic for a fixed --seed (default from the
GIHT_SEED environment variable) and emit plain CSV/JSON intended for
external plotting.  Exit codes: 0 success, 1 usage or parse error,
2 numerical divergence, 3 infeasible spec.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .groups import InfeasibleError, layout_from_json
from .objective import (
    LeastSquaresObjective,
    estimate_restricted_spectrum,
)
from .project import (
    SogBudget,
    exact_project_bruteforce,
    exact_project_disjoint,
    greedy_project,
    sog_greedy_project,
)
from .solver import DivergenceError, IhtConfig, iht_solve, trace_summary, trace_to_csv
from .synth import SynthSpec, generate, load_instance, save_instance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_INFEASIBLE = 3


@dataclass(frozen=True)
class PhaseCell:
    """One (n, kappa) cell of a recovery phase-transition grid."""

    n: int
    kappa: float
    trials: int
    successes: int
    success_rate: float
    median_rel_error: float


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the harness reserves 2 for
    # numerical divergence, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _default_seed() -> int:
    return int(os.environ.get("GIHT_SEED", "0"))


def _add_spec_args(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    p.add_argument("--M", type=int, default=100, help="number of groups")
    p.add_argument("--B", type=int, default=25, help="group size")
    p.add_argument("--overlap", type=int, default=5, help="coordinates shared by consecutive groups")
    p.add_argument("--k-star", type=int, default=10, help="number of active groups")
    p.add_argument("--k2-star", type=int, default=None, help="nonzeros per active group (SoG signals)")
    p.add_argument("--kappa", type=float, default=1.0, help="condition number of the feature covariance")
    p.add_argument("--noise-lambda", type=float, default=0.0, help="noise standard deviation")
    p.add_argument("--rotate", action="store_true", help="rotate the covariance by a random orthogonal matrix")
    if with_n:
        p.add_argument("--n", type=int, default=1000, help="number of samples")
    p.add_argument("--seed", type=int, default=_default_seed(), help="seed (default: GIHT_SEED or 0)")


def _add_iht_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None, help="group budget (default 2*k_star)")
    p.add_argument("--k1", type=int, default=None, help="SoG group budget")
    p.add_argument("--k2", type=int, default=None, help="SoG per-group coordinate budget")
    p.add_argument(
        "--eta",
        default="auto",
        help='step size, "auto" for 1/(4 lambda_max), or "auto-max" for 1/lambda_max',
    )
    p.add_argument("--max-iters", type=int, default=500, help="iteration cap")
    p.add_argument("--tol", type=float, default=1e-10, help="iterate-change stopping threshold")
    p.add_argument("--fc", action="store_true", help="refit on the projected support each iteration")
    p.add_argument(
        "--projector",
        choices=("greedy", "exact_disjoint", "bruteforce", "sog"),
        default="greedy",
    )


def _spec_from_args(args, n: int | None = None, kappa: float | None = None,
                    noise: float | None = None, seed: int | None = None) -> SynthSpec:
    return SynthSpec(
        M=args.M,
        B=args.B,
        overlap=args.overlap,
        k_star=args.k_star,
        k2_star=args.k2_star,
        n=n if n is not None else args.n,
        kappa=kappa if kappa is not None else args.kappa,
        noise_lambda=noise if noise is not None else args.noise_lambda,
        rotate=args.rotate,
        seed=seed if seed is not None else args.seed,
    )


def _config_from_args(args, k_star: int | None = None) -> IhtConfig:
    eta = args.eta
    if eta not in ("auto", "auto-max"):
        try:
            eta = float(eta)
        except ValueError:
            raise ValueError(f'--eta must be a number, "auto", or "auto-max", got {eta!r}')
    if args.projector == "sog":
        if args.k1 is None or args.k2 is None:
            raise ValueError("the sog projector needs --k1 and --k2")
        budget: int | SogBudget = SogBudget(k1=args.k1, k2=args.k2)
    else:
        k = args.k
        if k is None:
            if k_star is None:
                raise ValueError("--k is required when no synthetic spec provides k_star")
            k = 2 * k_star
        budget = k
    return IhtConfig(
        budget=budget,
        eta=eta,
        max_iters=args.max_iters,
        tol=args.tol,
        full_corrections=args.fc,
        projector=args.projector,
        seed=args.seed,
    )


def _read_vector(path: str) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            for field in text.replace(",", " ").split():
                try:
                    values.append(float(field))
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: not a number: {field!r}")
    if not values:
        raise ValueError(f"{path}: no numeric entries found")
    return np.array(values)


def _read_layout(path: str):
    with open(path) as fh:
        text = fh.read()
    try:
        return layout_from_json(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")


def _outcome_doc(outcome) -> dict:
    nz = np.flatnonzero(outcome.u)
    doc = {
        "u": [[int(i), float(outcome.u[i])] for i in nz],
        "selected_groups": list(outcome.selected.group_ids),
        "gains": [float(x) for x in outcome.gains],
        "within_group_support": (
            {str(gid): coords.tolist() for gid, coords in outcome.within_group_support.items()}
            if outcome.within_group_support is not None
            else None
        ),
    }
    return doc


def cmd_project(args) -> int:
    g = _read_vector(args.vector)
    layout = _read_layout(args.layout)
    if args.k1 is not None or args.k2 is not None:
        if args.k1 is None or args.k2 is None:
            raise ValueError("--k1 and --k2 must be given together")
        outcome = sog_greedy_project(g, SogBudget(k1=args.k1, k2=args.k2), layout)
    elif args.k is None:
        raise ValueError("one of --k or --k1/--k2 is required")
    elif args.exact:
        outcome = exact_project_disjoint(g, args.k, layout)
    elif args.bruteforce:
        outcome = exact_project_bruteforce(g, args.k, layout, max_M=args.max_m)
    else:
        outcome = greedy_project(g, args.k, layout)
    print(json.dumps(_outcome_doc(outcome), indent=2))
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = _spec_from_args(args)
    instance = generate(spec)
    save_instance(instance, args.out, spec)
    print(json.dumps({"out": args.out, "p": spec.p, "n": spec.n, "seed": spec.seed}))
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.instance is not None:
        instance = load_instance(args.instance)
        k_star = instance.active_groups.size
    else:
        spec = _spec_from_args(args)
        instance = generate(spec)
        k_star = spec.k_star
    config = _config_from_args(args, k_star=k_star)
    obj = LeastSquaresObjective(instance.problem)
    started = time.perf_counter()
    w, trace = iht_solve(obj, instance.layout, config, reference=instance.w_star)
    wall_ms = (time.perf_counter() - started) * 1000.0
    rel = None
    ref_norm = float(np.linalg.norm(instance.w_star))
    if ref_norm > 0:
        rel = float(np.linalg.norm(w - instance.w_star)) / ref_norm
    trace_to_csv(trace, f"{args.out_prefix}_trace.csv")
    summary = trace_summary(trace, final_rel_error=rel, wall_time_ms=wall_ms)
    with open(f"{args.out_prefix}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _derive_trial_seed(base: int, i_n: int, i_kappa: int, trial: int) -> int:
    seq = np.random.SeedSequence((base, i_n, i_kappa, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def _run_phase_cell(payload: dict) -> PhaseCell:
    errors = []
    successes = 0
    for trial in range(payload["trials"]):
        seed = _derive_trial_seed(payload["seed"], payload["i_n"], payload["i_kappa"], trial)
        spec = SynthSpec(
            M=payload["M"],
            B=payload["B"],
            overlap=payload["overlap"],
            k_star=payload["k_star"],
            n=payload["n"],
            kappa=payload["kappa"],
            noise_lambda=0.0,
            rotate=payload["rotate"],
            seed=seed,
        )
        instance = generate(spec)
        config = IhtConfig(
            budget=payload["k"],
            eta=payload["eta"],
            max_iters=payload["max_iters"],
            tol=payload["tol"],
            full_corrections=payload["fc"],
            projector=payload["projector"],
        )
        try:
            w, _ = iht_solve(LeastSquaresObjective(instance.problem), instance.layout, config)
            rel = float(
                np.linalg.norm(w - instance.w_star) / np.linalg.norm(instance.w_star)
            )
        except DivergenceError:
            rel = float("inf")
        errors.append(rel)
        if rel <= payload["success_tol"]:
            successes += 1
    return PhaseCell(
        n=payload["n"],
        kappa=payload["kappa"],
        trials=payload["trials"],
        successes=successes,
        success_rate=successes / payload["trials"],
        median_rel_error=float(np.median(errors)),
    )


def phase_cells_to_csv(cells, fh) -> None:
    fh.write("n,kappa,trials,successes,success_rate,median_rel_error\n")
    for c in cells:
        fh.write(
            f"{c.n},{c.kappa:.17g},{c.trials},{c.successes},"
            f"{c.success_rate:.17g},{c.median_rel_error:.17g}\n"
        )


def cmd_phase_transition(args) -> int:
    if args.trials < 1:
        raise ValueError(f"--trials must be >= 1, got {args.trials}")
    if not args.n_list or not args.kappa_list:
        raise ValueError("--n-list and --kappa-list must be non-empty")
    if args.projector == "sog":
        raise ValueError("phase-transition runs group-budget projectors only")
    k = args.k if args.k is not None else 2 * args.k_star
    eta = args.eta
    if eta not in ("auto", "auto-max"):
        eta = float(eta)
    payloads = []
    for i_kappa, kappa in enumerate(args.kappa_list):
        for i_n, n in enumerate(args.n_list):
            payloads.append(
                {
                    "M": args.M,
                    "B": args.B,
                    "overlap": args.overlap,
                    "k_star": args.k_star,
                    "n": n,
                    "kappa": kappa,
                    "rotate": args.rotate,
                    "i_n": i_n,
                    "i_kappa": i_kappa,
                    "seed": args.seed,
                    "trials": args.trials,
                    "success_tol": args.success_tol,
                    "k": k,
                    "eta": eta,
                    "max_iters": args.max_iters,
                    "tol": args.tol,
                    "fc": args.fc,
                    "projector": args.projector,
                }
            )
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            cells = list(pool.map(_run_phase_cell, payloads))
    else:
        cells = [_run_phase_cell(p) for p in payloads]
    if args.out is not None:
        with open(args.out, "w", newline="") as fh:
            phase_cells_to_csv(cells, fh)
    else:
        phase_cells_to_csv(cells, sys.stdout)
    return EXIT_OK


def cmd_rsc_check(args) -> int:
    spec = _spec_from_args(args)
    instance = generate(spec)
    est = estimate_restricted_spectrum(
        instance.problem, instance.layout, k=args.k, trials=args.trials, seed=args.seed
    )
    doc = {
        "alpha_hat": est.alpha_hat,
        "L_hat": est.L_hat,
        "kappa_hat": (est.L_hat / est.alpha_hat) if est.alpha_hat > 0 else None,
        "trials": est.trials,
        "k": est.k,
        "rank_deficient": est.rank_deficient,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_sog_demo(args) -> int:
    if args.k2_star is None:
        raise ValueError("sog-demo needs --k2-star")
    spec = _spec_from_args(args)
    instance = generate(spec)
    k1 = args.k1 if args.k1 is not None else 2 * spec.k_star
    k2 = args.k2 if args.k2 is not None else 2 * spec.k2_star
    eta = args.eta
    if eta not in ("auto", "auto-max"):
        eta = float(eta)
    config = IhtConfig(
        budget=SogBudget(k1=k1, k2=k2),
        eta=eta,
        max_iters=args.max_iters,
        tol=args.tol,
        full_corrections=args.fc,
        projector="sog",
        seed=args.seed,
    )
    obj = LeastSquaresObjective(instance.problem)
    w, trace = iht_solve(obj, instance.layout, config, reference=instance.w_star)
    rel = float(np.linalg.norm(w - instance.w_star) / np.linalg.norm(instance.w_star))
    selected = set(trace.support_history[-1].group_ids)
    recovered = set(instance.active_groups.group_ids).issubset(selected)
    if args.out_prefix is not None:
        trace_to_csv(trace, f"{args.out_prefix}_trace.csv")
    doc = {
        "rel_error": rel,
        "active_groups_recovered": recovered,
        "selected_groups": sorted(selected),
        "true_active_groups": list(instance.active_groups.group_ids),
        "iterations": trace.iterations_run,
        "converged": trace.converged,
        "k1": k1,
        "k2": k2,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="giht",
        description="Group-sparse iterative hard thresholding experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="project a vector onto a group-sparsity set")
    p.add_argument("--vector", required=True, help="text file, one coefficient per line")
    p.add_argument(
        "--layout", required=True, help='JSON layout: {"p": int, "groups": [[...], ...]}'
    )
    p.add_argument("--k", type=int, default=None, help="group budget")
    p.add_argument("--k1", type=int, default=None, help="SoG group budget")
    p.add_argument("--k2", type=int, default=None, help="SoG per-group coordinate budget")
    p.add_argument("--exact", action="store_true", help="exact projection (disjoint groups only)")
    p.add_argument("--bruteforce", action="store_true", help="exhaustive subset search (small M)")
    p.add_argument("--max-m", type=int, default=20, help="group-count guard for --bruteforce")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("solve", help="run the solver on a stored or synthetic instance")
    p.add_argument("--instance", default=None, help="instance directory written by gen")
    _add_spec_args(p)
    _add_iht_args(p)
    p.add_argument("--out-prefix", required=True, help="prefix for _trace.csv and _summary.json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("phase-transition", help="recovery success over an (n, kappa) grid")
    _add_spec_args(p, with_n=False)
    _add_iht_args(p)
    p.add_argument("--n-list", type=int, nargs="+", required=True)
    p.add_argument("--kappa-list", type=float, nargs="+", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--success-tol", type=float, default=1e-3)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over grid cells")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_phase_transition)

    p = sub.add_parser("rsc-check", help="Monte-Carlo restricted spectrum estimate")
    _add_spec_args(p)
    p.add_argument("--k", type=int, required=True, help="group-sparsity level to probe")
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_rsc_check)

    p = sub.add_parser("sog-demo", help="sparse-overlapping-group recovery run")
    _add_spec_args(p)
    _add_iht_args(p)
    p.add_argument("--out-prefix", default=None, help="optional prefix for _trace.csv")
    p.set_defaults(func=cmd_sog_demo)

    p = sub.add_parser("gen", help="generate and persist a synthetic instance")
    _add_spec_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"giht: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InfeasibleError as exc:
        print(f"giht: infeasible spec: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"giht: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
