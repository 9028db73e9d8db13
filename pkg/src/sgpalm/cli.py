"""Command-line front end: simulate, fit, eval, predict, bench.

Every subcommand takes ``--out`` and writes a ``manifest.json`` recording the
resolved configuration, seeds, and SHA-256 hashes of inputs and outputs, so
any run can be reproduced bit-exactly.  Report-style commands additionally
render figures next to their delimited outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np


def _limit_threads(n: int):
    """Cap BLAS/OpenMP pools; returns a context manager."""
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=n)
    except ImportError:  # pragma: no cover - threadpoolctl ships with sklearn
        import contextlib

        return contextlib.nullcontext()


def _parse_dims(text: str) -> tuple[int, ...]:
    dims = tuple(int(tok) for tok in text.replace("x", ",").split(",") if tok)
    if not dims:
        raise argparse.ArgumentTypeError(f"cannot parse mode extents from {text!r}")
    return dims


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    # accept either a bare config object or a manifest carrying one
    return data.get("config", data) if isinstance(data, dict) else {}


def _resolve(args: argparse.Namespace, file_cfg: dict, defaults: dict) -> dict:
    """Merge precedence: explicit flag > config file > hard default."""
    out = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in file_cfg:
            out[key] = file_cfg[key]
        else:
            out[key] = default
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    from . import io, synth

    cfg = _resolve(args, _load_config(args.config), {
        "dims": (16, 16), "density": 0.05, "boost": 0.5, "samples": 100,
        "seed": 0, "factor_kind": "random", "threads": 1,
    })
    cfg["dims"] = tuple(cfg["dims"])
    out = _out_dir(args)
    with _limit_threads(cfg["threads"]):
        rng = np.random.default_rng(cfg["seed"])
        if cfg["factor_kind"] == "poisson":
            truth = [synth.poisson_factor(d) for d in cfg["dims"]]
        else:
            spec = synth.GeneratorSpec(
                dims=cfg["dims"], density=cfg["density"], boost=cfg["boost"],
                n_samples=cfg["samples"], seed=cfg["seed"],
            )
            truth = synth.random_factor_set(spec, rng)
        data = synth.sample_tensors(truth, cfg["samples"], rng)

    data_path = out / "data.sgt1"
    io.save_dataset(data_path, data)
    factor_names = io.save_factors(out, truth, stem="psi_true")
    outputs = [data_path] + [out / n for n in factor_names]
    io.write_manifest(out, "simulate", cfg, outputs=outputs)
    print(f"simulate: wrote {len(outputs)} files to {out}")
    return 0


# ---------------------------------------------------------------------- fit

def cmd_fit(args) -> int:
    from . import io, optimizer, plots
    from .penalties import MCP_DEFAULT_A, SCAD_DEFAULT_A, Penalty

    cfg = _resolve(args, _load_config(args.config), {
        "lambda_scale": 1.0, "lambdas": None, "penalty": "l1",
        "penalty_shape": None, "tol": 1e-7, "max_iters": 500,
        "backtrack_c": 0.5, "step0": 1.0, "max_backtracks": 60,
        "seed": 0, "threads": 1, "figures": True,
    })
    out = _out_dir(args)
    data_path = Path(args.data)
    data = io.load_dataset(data_path)
    dims = data.shape[1:]

    if cfg["penalty"] == "scad":
        pen = Penalty.scad(cfg["penalty_shape"] or SCAD_DEFAULT_A)
    elif cfg["penalty"] == "mcp":
        pen = Penalty.mcp(cfg["penalty_shape"] or MCP_DEFAULT_A)
    else:
        pen = Penalty.l1()

    if cfg["lambdas"] is not None:
        lambdas = np.asarray(cfg["lambdas"], dtype=float)
    else:
        lambdas = optimizer.lambda_schedule(cfg["lambda_scale"], dims, data.shape[0])

    fit_cfg = optimizer.SGPalmConfig(
        lambdas=lambdas, penalty=pen, backtrack_c=cfg["backtrack_c"],
        step0=cfg["step0"], max_iters=cfg["max_iters"], tol=cfg["tol"],
        max_backtracks=cfg["max_backtracks"], seed=cfg["seed"],
    )
    t0 = time.perf_counter()
    try:
        with _limit_threads(cfg["threads"]):
            result = optimizer.fit(data, fit_cfg)
    except optimizer.BacktrackingError as exc:
        print(f"fit: backtracking failure: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - t0

    factor_names = io.save_factors(out, result.factors, stem="psi_hat")
    trace_path = out / "trace.csv"
    result.trace.to_csv(trace_path)
    summary = {
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "final_objective": result.trace.objectives[-1],
        "initial_objective": result.trace.objectives[0],
        "lambdas": [float(l) for l in result.lambdas],
        "penalty": pen.kind,
        "wall_seconds": wall,
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    outputs = [out / n for n in factor_names] + [trace_path, summary_path]
    if cfg["figures"]:
        fig_path = out / "trace.png"
        plots.save_trace_plot(result.trace, fig_path)
        outputs.append(fig_path)
    cfg["lambdas"] = [float(l) for l in lambdas]
    io.write_manifest(out, "fit", cfg, inputs=[data_path], outputs=outputs)
    print(f"fit: {result.iterations} iterations, converged={result.converged}, "
          f"objective={summary['final_objective']:.6g}")
    return 0


# --------------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    from . import io, metrics

    est = io.load_factors(args.est)
    truth = io.load_factors(args.truth)
    zero_tol = args.zero_tol if args.zero_tol is not None else metrics.ZERO_TOL
    conf = metrics.support_confusion(est, truth, zero_tol)
    report = {
        "mcc": metrics.mcc(conf),
        "tp": conf.tp, "fp": conf.fp, "tn": conf.tn, "fn": conf.fn,
        "offdiag_error": metrics.offdiag_error(est, truth),
        "sign_consistent": metrics.sign_consistency(est, truth, zero_tol),
    }
    text = json.dumps(report, indent=2)
    print(text)
    out = _out_dir(args)
    metrics_path = out / "metrics.json"
    with open(metrics_path, "w") as fh:
        fh.write(text + "\n")
    io.write_manifest(
        out, "eval", {"zero_tol": zero_tol, "est": list(args.est), "truth": list(args.truth)},
        inputs=list(args.est) + list(args.truth), outputs=[metrics_path],
    )
    return 0


# ------------------------------------------------------------------ predict

def cmd_predict(args) -> int:
    from . import io, metrics, plots
    from .predict import forward_predict, split_history

    cfg = _resolve(args, _load_config(args.config), {
        "time_mode": -1, "cg_tol": 1e-10, "threads": 1, "figures": True,
    })
    out = _out_dir(args)
    factors = io.load_factors(args.factors)
    data_path = Path(args.data)
    samples = io.load_dataset(data_path, n_modes=len(factors))

    preds, scores = [], []
    with _limit_threads(cfg["threads"]):
        for x in samples:
            hist, target = split_history(x, cfg["time_mode"])
            pred = forward_predict(factors, hist, cfg["time_mode"], tol=cfg["cg_tol"])
            preds.append(pred)
            scores.append(metrics.nrmse(pred, target))

    pred_path = out / "predicted.sgt1"
    io.save_dataset(pred_path, np.stack(preds))
    nrmse_report = {"mean_nrmse": float(np.mean(scores)), "per_sample": [float(s) for s in scores]}
    nrmse_path = out / "nrmse.json"
    with open(nrmse_path, "w") as fh:
        json.dump(nrmse_report, fh, indent=2)
        fh.write("\n")
    outputs = [pred_path, nrmse_path]
    if cfg["figures"]:
        fig_path = out / "nrmse.png"
        plots.save_nrmse_plot(scores, fig_path)
        outputs.append(fig_path)
    cfg["factors"] = [str(p) for p in args.factors]
    io.write_manifest(out, "predict", cfg,
                      inputs=[data_path] + list(args.factors), outputs=outputs)
    print(f"predict: {len(scores)} samples, mean NRMSE {nrmse_report['mean_nrmse']:.6g}")
    return 0


# -------------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    from . import io, optimizer, plots, synth

    cfg = _resolve(args, _load_config(args.config), {
        "shapes": ((8, 8), (16, 16)), "samples_list": (100,), "density_list": (0.05,),
        "lambda_scale": 2000.0, "seed": 0, "repeats": 1, "cell_seconds": 120.0,
        "max_iters": 200, "tol": 1e-8, "threads": 1, "figures": True,
    })
    out = _out_dir(args)
    rows = []
    with _limit_threads(cfg["threads"]):
        for shape in cfg["shapes"]:
            shape = tuple(shape)
            for n in cfg["samples_list"]:
                for density in cfg["density_list"]:
                    for rep in range(cfg["repeats"]):
                        seed = cfg["seed"] + rep
                        rng = np.random.default_rng(seed)
                        spec = synth.GeneratorSpec(dims=shape, density=density,
                                                   n_samples=n, seed=seed)
                        truth = synth.random_factor_set(spec, rng)
                        data = synth.sample_tensors(truth, n, rng)
                        fit_cfg = optimizer.SGPalmConfig(
                            lambdas=optimizer.lambda_schedule(cfg["lambda_scale"], shape, n),
                            max_iters=cfg["max_iters"], tol=cfg["tol"],
                            max_seconds=cfg["cell_seconds"],
                        )
                        t0 = time.perf_counter()
                        result = optimizer.fit(data, fit_cfg)
                        wall = time.perf_counter() - t0
                        rows.append({
                            "shape": "x".join(str(d) for d in shape),
                            "d": int(np.prod(shape)),
                            "n_samples": n,
                            "density": density,
                            "seed": seed,
                            "iterations": result.iterations,
                            "converged": result.converged,
                            "stop_reason": result.stop_reason,
                            "wall_seconds": wall,
                            "final_objective": result.trace.objectives[-1],
                        })
                        print(f"bench: shape={rows[-1]['shape']} N={n} density={density} "
                              f"seed={seed}: {result.iterations} iters, {wall:.2f}s")

    csv_path = out / "bench.csv"
    cols = list(rows[0].keys())
    with open(csv_path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    outputs = [csv_path]
    if cfg["figures"]:
        fig_path = out / "bench.png"
        plots.save_bench_plot(rows, fig_path)
        outputs.append(fig_path)
    cfg["shapes"] = [list(s) for s in cfg["shapes"]]
    io.write_manifest(out, "bench", cfg, outputs=outputs)
    print(f"bench: {len(rows)} cells -> {csv_path}")
    return 0


# ------------------------------------------------------------------- parser

def _add_common(p: argparse.ArgumentParser, with_out: bool = True) -> None:
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread cap")
    p.add_argument("--config", default=None, help="JSON config (or manifest) supplying defaults")
    if with_out:
        p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgpalm",
        description="Sparse Sylvester-structured tensor graphical models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a dataset from planted factors")
    _add_common(p)
    p.add_argument("--dims", type=_parse_dims, default=None, help="mode extents, e.g. 16,16")
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--boost", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--factor-kind", dest="factor_kind", choices=["random", "poisson"], default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate factors from a dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="SGT1 dataset")
    p.add_argument("--lambda-scale", dest="lambda_scale", type=float, default=None,
                   help="C in lambda_k = C*sqrt(d_k log(d)/N)")
    p.add_argument("--lambdas", type=lambda s: [float(t) for t in s.split(",")], default=None,
                   help="explicit per-mode weights, overrides --lambda-scale")
    p.add_argument("--penalty", choices=["l1", "scad", "mcp"], default=None)
    p.add_argument("--penalty-shape", dest="penalty_shape", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--backtrack-c", dest="backtrack_c", type=float, default=None)
    p.add_argument("--step0", type=float, default=None)
    p.add_argument("--max-backtracks", dest="max_backtracks", type=int, default=None)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="compare estimated factors against truth")
    _add_common(p)
    p.add_argument("--est", nargs="+", required=True, help="estimated factor CSVs")
    p.add_argument("--truth", nargs="+", required=True, help="true factor CSVs")
    p.add_argument("--zero-tol", dest="zero_tol", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="forward-predict the last slice of each sample")
    _add_common(p)
    p.add_argument("--factors", nargs="+", required=True, help="factor CSVs")
    p.add_argument("--data", required=True, help="SGT1 test dataset")
    p.add_argument("--time-mode", dest="time_mode", type=int, default=None)
    p.add_argument("--cg-tol", dest="cg_tol", type=float, default=None)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="time fits over a (shape, N, density) grid")
    _add_common(p)
    p.add_argument("--shapes", type=lambda s: tuple(_parse_dims(t) for t in s.split(",")),
                   default=None, help="e.g. 8x8,16x16")
    p.add_argument("--samples-list", dest="samples_list",
                   type=lambda s: tuple(int(t) for t in s.split(",")), default=None)
    p.add_argument("--density-list", dest="density_list",
                   type=lambda s: tuple(float(t) for t in s.split(",")), default=None)
    p.add_argument("--lambda-scale", dest="lambda_scale", type=float, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--cell-seconds", dest="cell_seconds", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
