"""Command-line interface.

Subcommands cover the individual pipeline stages (generate, sample,
train), the orchestrated config-driven run (discover), evaluation of a
learned equation against truth (evaluate), parameter sweeps producing
delimited tables (sweep), and rendering of a finished run directory
into figures plus a delimited summary (report).
"""

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import presets
from .evaluation import error_to_field, relative_error
from .grids import fmt, read_field, write_field
from .net import TrainConfig, init, load_network, save_network, train
from .pipeline import (
    ExperimentConfig,
    resolve_learned,
    run,
    sweep,
    write_sweep_table,
)
from .sampling import (
    NoiseSpec,
    add_noise,
    decimate,
    full_sampleset,
    line_preset,
    load_samples,
    random_subsample,
    rescale_groundwater_samples,
    save_samples,
)
from .stridge import load_result


def _cmd_generate(args):
    grid = presets.benchmark_grid(args.benchmark)
    pde = presets.benchmark_pde(args.benchmark)
    from .pipeline import _solve_benchmark

    field = _solve_benchmark(args.benchmark, pde, grid)
    write_field(field, args.output)
    print(f"wrote {args.output} ({grid.nx}x{grid.nt} points)")
    return 0


def _cmd_sample(args):
    field = read_field(args.field)
    if args.mode == "decimate":
        sub = decimate(field, args.stride_x, args.stride_t)
        write_field(sub, args.output)
        print(f"wrote {args.output} ({sub.spec.nx}x{sub.spec.nt} points)")
        return 0
    if args.mode == "random":
        samples = random_subsample(field, args.n, args.seed)
    elif args.mode == "lines":
        samples = line_preset(args.line_preset, field)
    else:
        samples = full_sampleset(field)
    if args.noise > 0:
        samples = add_noise(samples, NoiseSpec(args.noise, args.noise_seed))
    if args.rescale_groundwater:
        samples = rescale_groundwater_samples(samples, field.spec.dx)
    save_samples(samples, args.output)
    print(f"wrote {args.output} ({len(samples)} samples)")
    return 0


def _cmd_train(args):
    samples = load_samples(args.samples)
    ncfg = presets.net_preset(args.net_preset)
    network = init(
        ncfg["layer_sizes"], ncfg["activation"], seed=args.seed,
        freq_factor=ncfg["freq_factor"],
    )
    cfg = TrainConfig(
        learning_rate=args.lr,
        iterations=args.iterations,
        lbfgs_iterations=args.lbfgs_iterations,
        seed=args.seed,
    )
    network, history = train(network, samples, cfg)
    save_network(network, args.output)
    if args.loss_output:
        with open(args.loss_output, "w") as fh:
            fh.write("# step loss\n")
            for step, L in history:
                fh.write(f"{step} {fmt(L)}\n")
    print(f"wrote {args.output} (final loss {history[-1][1]:.6e})")
    return 0


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a sectioned key-value file."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    exp = parser["experiment"]
    kwargs = dict(
        benchmark=exp["benchmark"],
        pipeline=exp.get("pipeline", "dlpde"),
        catalog_name=exp.get("catalog", "default"),
    )
    if parser.has_section("sampling"):
        s = parser["sampling"]
        kwargs.update(
            sampling_mode=s.get("mode", "random"),
            n_samples=s.getint("n", 3000),
            sample_seed=s.getint("seed", 0),
            line_preset=s.get("line_preset", fallback=None),
            stride_x=s.getint("stride_x", 1),
            stride_t=s.getint("stride_t", 1),
        )
    if parser.has_section("noise"):
        kwargs.update(
            noise_delta=parser["noise"].getfloat("delta", 0.0),
            noise_seed=parser["noise"].getint("seed", 0),
        )
    if parser.has_section("net"):
        n = parser["net"]
        kwargs.update(
            net_preset=n.get("preset", fallback=None),
            net_seed=n.getint("seed", 0),
        )
    if parser.has_section("train"):
        t = parser["train"]
        train_kw = {}
        for key in ("iterations", "lbfgs_iterations", "batch", "seed",
                    "log_every", "stop_window"):
            if key in t:
                train_kw[key] = t.getint(key)
        for key in ("learning_rate", "beta1", "beta2", "eps", "stop_delta"):
            if key in t:
                train_kw[key] = t.getfloat(key)
        if "input_scaling" in t:
            train_kw["input_scaling"] = t.get("input_scaling")
        kwargs["train"] = train_kw
    if parser.has_section("metadata"):
        m = parser["metadata"]
        meta_kw = {}
        for key in ("nx", "nt"):
            if key in m:
                meta_kw[key] = m.getint(key)
        for key in ("x_lo", "x_hi", "t_lo", "t_hi"):
            if key in m:
                meta_kw[key] = m.getfloat(key)
        if "include_x_endpoint" in m:
            meta_kw["include_x_endpoint"] = m.getboolean("include_x_endpoint")
        kwargs["metadata"] = meta_kw
    if parser.has_section("stridge"):
        s = parser["stridge"]
        st_kw = {}
        if "lam" in s:
            st_kw["lam"] = s.getfloat("lam")
        for key in ("tol", "val_fraction", "complexity_penalty"):
            if key in s:
                st_kw[key] = s.getfloat(key)
        for key in ("max_iter", "sweep_seed"):
            if key in s:
                st_kw[key] = s.getint(key)
        for key in ("relative_tol", "final_refit"):
            if key in s:
                st_kw[key] = s.getboolean(key)
        if "tol_sweep" in s:
            st_kw["tol_sweep"] = tuple(float(v) for v in s.get("tol_sweep").split())
        kwargs["stridge"] = st_kw
    if parser.has_section("fd"):
        f = parser["fd"]
        fd_kw = {}
        if "scheme" in f:
            fd_kw["scheme"] = f.get("scheme")
        if "boundary" in f:
            fd_kw["boundary"] = f.get("boundary")
        if "smooth_degree" in f and "smooth_window" in f:
            fd_kw["smooth"] = {
                "degree": f.getint("smooth_degree"),
                "window": f.getint("smooth_window"),
            }
        kwargs["fd"] = fd_kw
    return ExperimentConfig(**kwargs)


def _cmd_discover(args):
    config = load_config(args.config)
    result = run(config, root=args.root)
    print(f"run directory: {result.run_dir}")
    for stage, status in result.stages.items():
        print(f"  {stage}: {status}")
    if result.result is not None:
        print(f"  {result.result.equation()}")
    if result.error is not None:
        print(f"  max relative error {result.error.max_error:.3f}%")
    elif result.divergence_time is not None:
        print(f"  learned equation diverged at t={result.divergence_time:g}")
    return 0 if result.ok else 1


def _cmd_evaluate(args):
    truth = read_field(args.truth)
    if args.learned:
        learned = read_field(args.learned)
    else:
        result = load_result(args.result)
        learned = resolve_learned(args.benchmark, result, truth)
    err = relative_error(truth, learned)
    if args.output:
        write_field(error_to_field(err), args.output)
    print(f"max relative error  {err.max_error:.6f}%")
    print(f"mean relative error {err.mean_error:.6f}%")
    return 0


def _parse_values(text, axis):
    vals = [v for v in text.replace(",", " ").split() if v]
    if axis == "noise_level":
        return [float(v) for v in vals]
    return [int(v) for v in vals]


def _cmd_sweep(args):
    config = load_config(args.config)
    values = _parse_values(args.values, args.axis)
    rows, results = sweep(
        config, args.axis, values, root=args.root, workers=args.workers
    )
    write_sweep_table(rows, args.axis, args.output)
    print(f"wrote {args.output} ({len(rows)} rows)")
    bad = [r for r in results if r is None or not r.ok]
    return 1 if bad else 0


def _cmd_report(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run_dir = Path(args.run)
    out_dir = Path(args.output) if args.output else run_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)

    summary_rows = []
    summary_path = run_dir / "summary.txt"
    if summary_path.exists():
        for line in summary_path.read_text().splitlines():
            if line.startswith("#"):
                continue
            key, _, value = line.partition(" ")
            summary_rows.append((key, value))

    def heatmap(field, title, path, cmap="viridis"):
        s = field.spec
        fig, ax = plt.subplots(figsize=(7, 4))
        im = ax.imshow(
            field.values,
            origin="lower",
            aspect="auto",
            extent=[s.t0, s.t_max, s.x0, s.x_max],
            cmap=cmap,
        )
        ax.set_xlabel("t")
        ax.set_ylabel("x")
        ax.set_title(title)
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    made = []
    for name, title, cmap in (
        ("truth.grid", "truth field", "viridis"),
        ("truth_starred.grid", "truth field (rescaled)", "viridis"),
        ("learned.grid", "re-solved learned field", "viridis"),
        ("error.grid", "relative error (%)", "magma"),
    ):
        path = run_dir / name
        if path.exists():
            png = out_dir / (name.replace(".grid", "") + ".png")
            heatmap(read_field(path), title, png, cmap)
            made.append(png.name)

    loss_path = run_dir / "loss.txt"
    if loss_path.exists():
        data = np.loadtxt(loss_path, ndmin=2)
        if data.size:
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.semilogy(data[:, 0], data[:, 1])
            ax.set_xlabel("step")
            ax.set_ylabel("loss")
            ax.set_title("training loss")
            fig.tight_layout()
            fig.savefig(out_dir / "loss.png", dpi=150)
            plt.close(fig)
            made.append("loss.png")

    with open(out_dir / "report.tsv", "w") as fh:
        fh.write("key\tvalue\n")
        for key, value in summary_rows:
            fh.write(f"{key}\t{value}\n")
        fh.write(f"figures\t{';'.join(made)}\n")
    print(f"wrote {out_dir / 'report.tsv'} and {len(made)} figure(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdelearn",
        description="Discover governing PDEs from discrete, noisy space-time data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="solve a benchmark PDE and write the field")
    p.add_argument("--benchmark", required=True, choices=presets.BENCHMARKS)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("sample", help="draw observations from a field file")
    p.add_argument("--field", required=True)
    p.add_argument("--mode", default="random",
                   choices=("random", "lines", "full", "decimate"))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--line-preset", default=None)
    p.add_argument("--stride-x", type=int, default=2)
    p.add_argument("--stride-t", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--rescale-groundwater", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train", help="fit a network to a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--net-preset", default="standard", choices=sorted(presets.NET_PRESETS))
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--lbfgs-iterations", type=int, default=3000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss-output", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("discover", help="run a full experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--root", default="runs")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("evaluate", help="relative-error field of a learned equation")
    p.add_argument("--truth", required=True)
    p.add_argument("--learned", default=None)
    p.add_argument("--result", default=None)
    p.add_argument("--benchmark", default=None, choices=presets.BENCHMARKS)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run one experiment per axis value")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True,
                   choices=("data_volume", "noise_level", "decimation"))
    p.add_argument("--values", required=True,
                   help="comma- or space-separated axis values (may be empty)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--root", default="runs")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="render figures and a summary for a run")
    p.add_argument("--run", required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "evaluate" and not args.learned and not (
        args.result and args.benchmark
    ):
        parser.error("evaluate needs --learned, or --result with --benchmark")
    if args.command == "sample" and args.mode == "lines" and not args.line_preset:
        parser.error("sample --mode lines needs --line-preset")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
