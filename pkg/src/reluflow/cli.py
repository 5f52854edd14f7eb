"""Command-line front end.

Subcommands:
  certify    evaluate the convergence certificate of a seeded (or loaded) setup
  ode-sweep  integrate the scalar envelope across an alpha range
  train      run gradient flow / SGD and dump the trajectory log
  spectral   Hermite coefficient table plus feature-Gram spectral report
  grid       the experiment grid with CSV/SVG/manifest outputs

Every command is deterministic given its flags: rerunning writes
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import (
    certificate,
    data,
    dynamics,
    envelope,
    harness,
    linalg,
    reports,
    spectral,
    svg,
)

CONDITION_SMALLNESS_DEFAULT = 0.5


def _add_data_args(p: argparse.ArgumentParser, *, d1_required: bool = True) -> None:
    p.add_argument("--data", type=Path, help="dataset CSV (JSON header alongside)")
    p.add_argument("--n", type=int, default=32, help="sample count (generated data)")
    p.add_argument("--d0", type=int, default=8, help="input dimension")
    p.add_argument("--d1", type=int, required=d1_required, help="hidden width")
    p.add_argument(
        "--convention",
        choices=[data.SQRT_D0, data.UNIT],
        default=data.SQRT_D0,
        help="input row-norm convention for generated data",
    )
    p.add_argument("--seed", type=int, default=0)


def _add_init_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--init",
        choices=["lecun", "wide-output", "fixed-signs"],
        default="lecun",
        help="lecun: fan-in scales; wide-output: unit hidden scale with "
        "1/sqrt(d1) output scale; fixed-signs: frozen +/- output column",
    )
    p.add_argument("--beta-w", type=float, help="override hidden-layer scale")
    p.add_argument("--beta-v", type=float, help="override output-layer scale")


def _load_or_generate(args) -> data.Dataset:
    if args.data:
        return data.load_dataset(args.data)
    X = data.sample_sphere_rows(args.n, args.d0, args.convention, args.seed, stream=(0,))
    Y = data.gen_labels(args.n, 1, "pm_one", args.seed, stream=(1,))
    return data.Dataset(X=X, Y=Y, row_norm_convention=args.convention, seed=args.seed)


def _make_init(args, ds: data.Dataset, d1: int) -> data.Params:
    if args.init == "lecun":
        cfg = data.lecun_config(ds.d0, d1, seed=args.seed)
    elif args.init == "wide-output":
        cfg = data.InitConfig(beta_w=1.0, beta_v=1.0 / math.sqrt(d1), seed=args.seed)
    else:
        cfg = data.InitConfig(
            beta_w=1.0,
            beta_v=0.0,
            scheme="fixed_v_signs",
            seed=args.seed,
            y_norm=float(np.linalg.norm(ds.Y)),
            n_samples=ds.n,
        )
    if args.beta_w is not None:
        cfg.beta_w = args.beta_w
    if args.beta_v is not None:
        cfg.beta_v = args.beta_v
    return data.init_params(ds.d0, d1, ds.d2, cfg, stream=(2,))


def cmd_certify(args) -> int:
    ds = _load_or_generate(args)
    params = _make_init(args, ds, args.d1)
    cert = certificate.evaluate_certificate(ds.X, ds.Y, params)
    payload = cert.to_dict()
    payload["meta"] = {
        "N": ds.n,
        "d0": ds.d0,
        "d1": args.d1,
        "d2": ds.d2,
        "seed": args.seed,
        "convention": ds.row_norm_convention,
        "init": args.init,
    }
    if args.out:
        reports.write_json(payload, args.out)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_ode_sweep(args) -> int:
    template = envelope.EnvelopeParams(
        a=args.a, alpha=max(args.alpha_min, 1e-12), c=args.c, c1=args.c1, c2=args.c2
    )
    rows = envelope.sweep_alpha(
        template, args.alpha_min, args.alpha_max, args.points, horizon=args.horizon
    )
    reports.write_sweep_csv(rows, args.out_csv)
    boundary_note = (
        "near the boundedness threshold the finite-horizon classification and "
        "the condition value may disagree; both are reported"
    )
    meta = {
        "a": args.a,
        "c": args.c,
        "c1": args.c1,
        "c2": args.c2,
        "alpha_min": args.alpha_min,
        "alpha_max": args.alpha_max,
        "points": args.points,
        "horizon": args.horizon,
        "note": boundary_note,
    }
    reports.write_json(meta, Path(args.out_csv).with_suffix(".meta.json"))
    if args.svg:
        curves = {}
        times = None
        for row in rows:
            p = envelope.EnvelopeParams(
                a=args.a, alpha=row.alpha, c=args.c, c1=args.c1, c2=args.c2
            )
            res = envelope.integrate_envelope(p, horizon=args.horizon)
            label = f"a={row.alpha:.4g} cond={row.condition_value:.3g}"
            if times is None or len(res.times) > len(times):
                times = res.times
            y = np.full(len(times), np.nan)
            y[: len(res.y)] = np.minimum(res.y, 10.0 * max(1.0, 2 * args.a))
            curves[label] = y
        svg.line_chart(times, curves, args.svg, title="Envelope solutions y(t)")
    for row in rows:
        print(
            f"alpha={row.alpha:.6g} cond={row.condition_value:.6g} "
            f"class={row.kind} "
            + (f"sup_y={row.sup_y:.6g}" if row.sup_y is not None else f"t_blow={row.t_blow:.6g}")
        )
    return 0


def cmd_train(args) -> int:
    ds = _load_or_generate(args)
    params = _make_init(args, ds, args.d1)
    batch = ds.n if args.batch <= 0 or args.batch > ds.n else args.batch
    cfg = dynamics.SgdConfig(
        eta=args.eta,
        batch_size=batch,
        steps=args.steps,
        momentum=args.momentum,
        seed=args.seed,
        rule=args.rule,
    )
    layers = "both" if args.layers == "both" else "w_only"
    log = dynamics.run_sgd(
        ds.X,
        ds.Y,
        params,
        cfg,
        layers,
        thinning=args.thin,
        stop_loss=args.stop_loss,
        rng_stream=(3,),
    )
    reports.write_trajectory_csv(log, args.out_csv)
    summary = reports.trajectory_summary(log)
    summary["config"] = {
        "N": ds.n,
        "d0": ds.d0,
        "d1": args.d1,
        "eta": args.eta,
        "batch": batch,
        "momentum": args.momentum,
        "steps": args.steps,
        "layers": args.layers,
        "seed": args.seed,
        "thin": args.thin,
        "init": args.init,
    }
    out_json = args.out_json or Path(args.out_csv).with_suffix(".json")
    reports.write_json(summary, out_json)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _default_power(n: int, d0: int) -> int:
    # 4 * ceil((1 + delta0)/delta0) with delta0 = log d0 / log N; always even.
    delta0 = math.log(d0) / math.log(n) if n > 1 and d0 > 1 else 1.0
    return 4 * math.ceil((1.0 + delta0) / delta0)


def cmd_spectral(args) -> int:
    rows = [["k", "mu_k", "ratio"]]
    for k in range(args.k_max + 1):
        mu = spectral.hermite_relu(k)
        ratio = mu**2 * k**2.5 if k >= 2 and k % 2 == 0 else ""
        rows.append([k, f"{mu:.17g}", f"{ratio:.17g}" if ratio != "" else ""])
    with open(args.out_table, "w") as fh:
        fh.write("\n".join(",".join(str(c) for c in r) for r in rows) + "\n")

    X = data.sample_sphere_rows(args.n, args.d0, data.SQRT_D0, args.seed, stream=(0,))
    r = args.r or _default_power(args.n, args.d0)
    est = spectral.estimate_gram(X, args.n_mc, args.seed, stream=(1,))
    thr = spectral.alpha_threshold_experiment(
        args.n, args.d0, args.d1, args.beta_w, args.trials, args.seed, n_mc=args.n_mc
    )
    conc = spectral.concentration_report(
        args.n,
        args.d0,
        args.d1,
        1,
        data.lecun_config(args.d0, args.d1, seed=args.seed),
        args.trials,
        args.seed,
    )
    payload = {
        "lambda_lower": spectral.lambda_lower_bound(X, r),
        "lambda_lower_r": r,
        "lambda_mc": est.lambda_hat,
        "lambda_mc_stderr": est.stderr,
        "alpha_threshold": thr.threshold,
        "alpha_pass_fraction": thr.pass_fraction,
        "alpha_empirical": [float(a) for a in thr.alphas],
        "concentration": conc.stats,
        "meta": {
            "N": args.n,
            "d0": args.d0,
            "d1": args.d1,
            "beta_w": args.beta_w,
            "n_mc": args.n_mc,
            "trials": args.trials,
            "seed": args.seed,
        },
    }
    reports.write_json(payload, args.out_json)
    print(json.dumps({k: v for k, v in payload.items() if k != "alpha_empirical"},
                     indent=2, sort_keys=True))
    return 0


def cmd_grid(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    def parse_sgd(block: dict) -> dynamics.SgdConfig:
        return dynamics.SgdConfig(
            eta=block["eta"],
            batch_size=block.get("batch", 0) or cfg["n_samples"],
            steps=cfg.get("max_iters", 5000),
            momentum=block.get("momentum", 0.0),
            seed=cfg.get("master_seed", 0),
            rule=block.get("rule", "zero"),
        )

    sgd = parse_sgd(cfg["sgd"])
    spec = harness.GridSpec(
        n_samples=cfg["n_samples"],
        d0_values=cfg["d0_values"],
        d1_values=cfg["d1_values"],
        n_runs=cfg["n_runs"],
        train_mode=cfg.get("train_mode", "both"),
        sgd=sgd,
        convergence_threshold=cfg.get("convergence_threshold", 2.5e-3),
        zero_threshold=cfg.get("zero_threshold", 1e-8),
        max_iters=cfg.get("max_iters", 5000),
        log_every=cfg.get("log_every", 50),
        sgd_w_only=parse_sgd(cfg["sgd_w_only"]) if "sgd_w_only" in cfg else None,
    )
    master_seed = cfg.get("master_seed", 0)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "figures").mkdir(exist_ok=True)

    grid = harness.run_grid(spec, master_seed)
    reports.write_cells_csv(grid, out / "cells.csv")
    reports.write_runs_csv(grid, out / "runs.csv")
    labels = [str(v) for v in spec.d0_values], [str(v) for v in spec.d1_values]
    svg.heatmap(
        grid.matrix("p_converge"),
        *labels,
        out / "figures" / "p_converge.svg",
        title="Probability of convergence",
        row_name="d0",
        col_name="d1",
    )
    svg.heatmap(
        grid.matrix("avg_final_zeros"),
        *labels,
        out / "figures" / "zeros.svg",
        title="Avg final preactivation zeros",
        row_name="d0",
        col_name="d1",
    )

    track_diff = bool(cfg.get("track_differential", False))
    cell_index = 0
    for d0 in spec.d0_values:
        for d1 in spec.d1_values:
            cell_dir = out / "metrics" / f"d0_{d0}_d1_{d1}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            first_series = None
            for run in range(spec.n_runs):
                X, Y, theta0 = harness._make_run_inputs(
                    spec.n_samples, d0, d1, spec.train_mode, master_seed, cell_index, run
                )
                series = harness.track_metrics(
                    X,
                    Y,
                    theta0,
                    spec.mode_sgd(),
                    spec.log_every,
                    train_layers="both" if spec.train_mode == "both" else "w_only",
                    zero_threshold=spec.zero_threshold,
                    track_differential=track_diff,
                )
                reports.write_metrics_csv(series, cell_dir / f"run{run}.csv")
                if first_series is None:
                    first_series = series
            reports.export(
                first_series, "svg", out / "figures" / f"metrics_d0_{d0}_d1_{d1}.svg"
            )
            cell_index += 1

    reports.write_manifest(out, cfg)
    print(f"grid complete: {len(grid.cells)} cells -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reluflow", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="initialization-time convergence certificate")
    _add_data_args(p)
    _add_init_args(p)
    p.add_argument("--out", type=Path, help="write the certificate JSON here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("ode-sweep", help="envelope integration across alpha")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--alpha-min", type=float, default=2.042)
    p.add_argument("--alpha-max", type=float, default=2.045)
    p.add_argument("--points", type=int, default=16)
    p.add_argument("--horizon", type=float, default=None,
                   help="integration window (default 50/alpha^2 per point)")
    p.add_argument("--out-csv", type=Path, required=True)
    p.add_argument("--svg", type=Path, help="optional y(t) curves figure")
    p.set_defaults(func=cmd_ode_sweep)

    p = sub.add_parser("train", help="run SGD / gradient flow")
    _add_data_args(p)
    _add_init_args(p)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--batch", type=int, default=0, help="0 = full batch")
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--layers", choices=["both", "w-only"], default="both")
    p.add_argument("--thin", type=int, default=1, help="log every m-th iterate")
    p.add_argument("--stop-loss", type=float, default=0.0)
    p.add_argument("--rule", choices=["zero", "half", "one"], default="zero")
    p.add_argument("--out-csv", type=Path, required=True)
    p.add_argument("--out-json", type=Path)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("spectral", help="Hermite table and spectral report")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--d0", type=int, default=16)
    p.add_argument("--d1", type=int, default=256)
    p.add_argument("--beta-w", type=float, default=0.25)
    p.add_argument("--n-mc", type=int, default=20000)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--k-max", type=int, default=40)
    p.add_argument("--r", type=int, help="Kronecker power for the lower bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-table", type=Path, required=True)
    p.add_argument("--out-json", type=Path, required=True)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("grid", help="experiment grid from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_grid)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
