"""Config-driven experiment runs with persisted artifacts.

A run executes: generate truth -> sample (+ noise) -> [rescale for
groundwater] -> train -> derivative jets (dense meta grid, or the raw
sample coordinates for the ablation, or finite differences for the
direct baseline) -> assemble -> sparse regression -> re-solve the
learned equation -> relative-error field.  Every stage artifact is
written into a run directory named by a hash of the resolved manifest,
so reruns of the same configuration land in the same place and produce
byte-identical files, while changed configurations cannot silently
overwrite old results.
"""

import hashlib
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import presets
from .autodiff import MetaDataSpec, generate_metadata, jet_batch, save_jets
from .evaluation import ErrorField, error_to_field, relative_error
from .grids import GridField, fmt, write_field
from .library import assemble, default_catalog, extended_catalog, normalize
from .net import TrainConfig, init, save_network, train
from .sampling import (
    NoiseSpec,
    add_noise,
    decimate,
    full_sampleset,
    line_preset,
    random_subsample,
    rescale_groundwater,
    rescale_groundwater_samples,
    save_samples,
)
from .solvers import (
    DivergenceError,
    solve_burgers,
    solve_convection_diffusion,
    solve_generic,
    solve_groundwater,
    solve_kdv,
    solve_linear_dirichlet,
)
from .stridge import StridgeConfig, save_result, stridge, sweep_tol
from .baseline import FdConfig, direct_stridge

PIPELINES = ("dlpde", "dlpde_no_metadata", "direct_stridge")
SAMPLING_MODES = ("random", "lines", "decimate", "full")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one discovery experiment."""

    benchmark: str
    pipeline: str = "dlpde"
    sampling_mode: str = "random"
    n_samples: int = 3000
    sample_seed: int = 0
    line_preset: str | None = None
    stride_x: int = 1
    stride_t: int = 1
    noise_delta: float = 0.0
    noise_seed: int = 0
    net_preset: str | None = None
    net_seed: int = 0
    train: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    catalog_name: str = "default"
    stridge: dict = field(default_factory=dict)
    fd: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.benchmark not in presets.BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.sampling_mode not in SAMPLING_MODES:
            raise ValueError(f"unknown sampling mode {self.sampling_mode!r}")
        if self.pipeline == "direct_stridge" and self.sampling_mode not in (
            "full",
            "decimate",
        ):
            raise ValueError(
                "direct_stridge needs data on a regular grid: "
                "sampling_mode must be full or decimate"
            )


def resolve(config: ExperimentConfig) -> dict:
    """Flatten a config into the fully-resolved manifest mapping.

    Every default the run will use (grid geometry, PDE parameters,
    architecture, schedules, seeds) is materialized here; the manifest
    alone reconstructs the run.
    """
    grid = presets.benchmark_grid(config.benchmark)
    pde = presets.benchmark_pde(config.benchmark)
    npre = config.net_preset or presets.default_net_preset(config.benchmark)
    net_cfg = presets.net_preset(npre)
    tr = presets.train_preset(config.benchmark)
    tr.update(config.train)
    train_cfg = TrainConfig(**tr)
    meta = _metadata_spec(config)
    scfg = StridgeConfig(**config.stridge)
    fd_cfg = FdConfig(**config.fd)

    man = {}
    man["experiment"] = {
        "benchmark": config.benchmark,
        "pipeline": config.pipeline,
        "catalog": config.catalog_name,
    }
    man["grid"] = {
        "x0": fmt(grid.x0), "dx": fmt(grid.dx), "nx": grid.nx,
        "t0": fmt(grid.t0), "dt": fmt(grid.dt), "nt": grid.nt,
        "periodic": int(grid.periodic_x),
        "solver_substeps": presets.solver_substeps(config.benchmark),
    }
    man["pde"] = {"kind": pde.kind}
    man["pde"].update({f"param_{k}": fmt(v) for k, v in sorted(pde.params.items())})
    if pde.ic:
        man["pde"].update({f"ic_{k}": v for k, v in sorted(pde.ic.items())})
    man["sampling"] = {
        "mode": config.sampling_mode,
        "n": config.n_samples,
        "seed": config.sample_seed,
        "line_preset": config.line_preset or "none",
        "stride_x": config.stride_x,
        "stride_t": config.stride_t,
    }
    man["noise"] = {"delta": fmt(config.noise_delta), "seed": config.noise_seed}
    man["net"] = {
        "preset": npre,
        "layer_sizes": " ".join(str(n) for n in net_cfg["layer_sizes"]),
        "activation": net_cfg["activation"],
        "freq_factor": fmt(net_cfg["freq_factor"]),
        "seed": config.net_seed,
    }
    man["train"] = {k: _fmt_val(v) for k, v in sorted(asdict(train_cfg).items())}
    man["metadata"] = {
        "x_lo": fmt(meta.x_lo), "x_hi": fmt(meta.x_hi), "nx": meta.nx,
        "t_lo": fmt(meta.t_lo), "t_hi": fmt(meta.t_hi), "nt": meta.nt,
        "include_x_endpoint": int(meta.include_x_endpoint),
    }
    man["stridge"] = {k: _fmt_val(v) for k, v in sorted(asdict(scfg).items())}
    man["fd"] = {k: _fmt_val(v) for k, v in sorted(asdict(fd_cfg).items())}
    return man


def _fmt_val(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, dict):
        return " ".join(f"{k}={_fmt_val(x)}" for k, x in sorted(v.items()))
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return v


def manifest_text(man: dict) -> str:
    lines = []
    for section, entries in man.items():
        lines.append(f"[{section}]")
        for k, v in entries.items():
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


def manifest_hash(man: dict) -> str:
    return hashlib.sha256(manifest_text(man).encode()).hexdigest()[:12]


def _metadata_spec(config: ExperimentConfig) -> MetaDataSpec:
    base = presets.metadata_preset(config.benchmark)
    if config.metadata:
        base = replace(base, **config.metadata)
    return base


def _solve_benchmark(benchmark, pde, grid):
    if benchmark == "groundwater":
        return solve_groundwater(pde, grid, substeps=presets.solver_substeps(benchmark))
    if benchmark == "convection_diffusion":
        return solve_convection_diffusion(pde, grid)
    if benchmark == "burgers":
        return solve_burgers(pde, grid, substeps=presets.solver_substeps(benchmark))
    return solve_kdv(pde, grid, substeps=presets.solver_substeps(benchmark))


def _noise_field(field_in: GridField, noise: NoiseSpec) -> GridField:
    """Multiplicative noise applied to every grid value (C-order draw)."""
    if noise.delta == 0.0:
        return field_in
    rng = np.random.default_rng(noise.seed)
    e = 2.0 * rng.random(field_in.values.shape) - 1.0
    return field_in.with_values(field_in.values * (1.0 + noise.delta * e))


@dataclass
class RunResult:
    config: ExperimentConfig
    run_dir: Path
    truth: GridField | None = None
    truth_regression: GridField | None = None  # starred variables for groundwater
    result: object = None
    learned: GridField | None = None
    error: ErrorField | None = None
    divergence_time: float | None = None
    samples: object = None
    network: object = None
    history: list = field(default_factory=list)
    stages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v == "ok" for v in self.stages.values())

    @property
    def max_error(self) -> float:
        if self.error is not None:
            return self.error.max_error
        return float("inf")


def _build_samples(config, truth):
    if config.sampling_mode == "random":
        return random_subsample(truth, config.n_samples, config.sample_seed), None
    if config.sampling_mode == "lines":
        if not config.line_preset:
            raise ValueError("sampling_mode=lines requires line_preset")
        return line_preset(config.line_preset, truth), None
    if config.sampling_mode == "decimate":
        sub = decimate(truth, config.stride_x, config.stride_t)
        return full_sampleset(sub, provenance="Decimated"), sub
    return full_sampleset(truth), truth


def run(config: ExperimentConfig, root="runs") -> RunResult:
    """Execute one experiment end to end, persisting every artifact."""
    man = resolve(config)
    run_dir = Path(root) / f"{config.benchmark}-{config.pipeline}-{manifest_hash(man)}"
    run_dir.mkdir(parents=True, exist_ok=True)

    grid = presets.benchmark_grid(config.benchmark)
    pde = presets.benchmark_pde(config.benchmark)
    catalog = default_catalog() if config.catalog_name == "default" else extended_catalog()
    is_gw = config.benchmark == "groundwater"
    stages = {}
    out = RunResult(config, run_dir, stages=stages)

    def record(stage, fn):
        try:
            value = fn()
            stages[stage] = "ok"
            return value
        except Exception as exc:  # noqa: BLE001 - recorded, not swallowed silently
            stages[stage] = f"error: {type(exc).__name__}: {exc}"
            raise _StageFailure(stage) from exc

    try:
        truth = record("generate", lambda: _solve_benchmark(config.benchmark, pde, grid))
        write_field(truth, run_dir / "truth.grid")
        truth_reg = rescale_groundwater(truth) if is_gw else truth
        if is_gw:
            write_field(truth_reg, run_dir / "truth_starred.grid")
        out.truth, out.truth_regression = truth, truth_reg

        def sample_stage():
            samples, sampled_field = _build_samples(config, truth)
            noise = NoiseSpec(config.noise_delta, config.noise_seed)
            if config.pipeline == "direct_stridge":
                base = sampled_field if sampled_field is not None else truth
                noisy = _noise_field(base, noise)
                return None, noisy
            samples = add_noise(samples, noise)
            if is_gw:
                samples = rescale_groundwater_samples(samples, grid.dx)
            return samples, sampled_field

        samples, sampled_field = record("sample", sample_stage)
        if samples is not None:
            save_samples(samples, run_dir / "samples.txt")
            out.samples = samples

        if config.pipeline == "direct_stridge":
            fd_field = rescale_groundwater(sampled_field) if is_gw else sampled_field
            fd_cfg = FdConfig(**config.fd)
            scfg = StridgeConfig(**config.stridge)
            result = record(
                "discover", lambda: direct_stridge(fd_field, fd_cfg, catalog, scfg)
            )
        else:
            npre = config.net_preset or presets.default_net_preset(config.benchmark)
            ncfg = presets.net_preset(npre)
            tr = presets.train_preset(config.benchmark)
            tr.update(config.train)

            def train_stage():
                network = init(
                    ncfg["layer_sizes"],
                    ncfg["activation"],
                    seed=config.net_seed,
                    freq_factor=ncfg["freq_factor"],
                )
                # scale inputs by the known domain, not the sample extent,
                # so the meta grid never counts as extrapolation; periodic
                # domains extend to the period end
                reg_grid = truth_reg.spec
                x_hi = (
                    reg_grid.x0 + reg_grid.period
                    if reg_grid.periodic_x
                    else reg_grid.x_max
                )
                network.input_box = (reg_grid.x0, x_hi, reg_grid.t0, reg_grid.t_max)
                return train(network, samples, TrainConfig(**tr))

            network, history = record("train", train_stage)
            out.network, out.history = network, history
            save_network(network, run_dir / "network.txt")
            with open(run_dir / "loss.txt", "w") as fh:
                fh.write("# step loss\n")
                for step, L in history:
                    fh.write(f"{step} {fmt(L)}\n")

            def jets_stage():
                if config.pipeline == "dlpde_no_metadata":
                    return jet_batch(network, samples.x, samples.t)
                return generate_metadata(network, _metadata_spec(config))

            jets = record("jets", jets_stage)
            save_jets(jets, run_dir / "jets.txt")

            def discover_stage():
                system = normalize(assemble(jets, catalog))
                scfg = StridgeConfig(**config.stridge)
                if scfg.tol_sweep:
                    return sweep_tol(system, scfg)
                return stridge(system, scfg)

            result = record("discover", discover_stage)

        out.result = result
        save_result(result, run_dir / "result.txt")

        def evaluate_stage():
            return resolve_learned(config.benchmark, result, truth_reg)

        try:
            learned = record("evaluate", evaluate_stage)
            out.learned = learned
            write_field(learned, run_dir / "learned.grid")
            err = relative_error(truth_reg, learned)
            out.error = err
            write_field(error_to_field(err), run_dir / "error.grid")
        except _StageFailure as exc:
            cause = exc.__cause__
            if isinstance(cause, DivergenceError):
                out.divergence_time = cause.time
            else:
                raise
    except _StageFailure:
        pass

    _write_summary(out, run_dir)
    with open(run_dir / "manifest.ini", "w") as fh:
        fh.write(manifest_text(man))
        fh.write("[stages]\n")
        for stage, status in stages.items():
            fh.write(f"{stage} = {status}\n")
    return out


class _StageFailure(Exception):
    def __init__(self, stage):
        super().__init__(stage)
        self.stage = stage


def resolve_learned(benchmark: str, result, truth_reg: GridField) -> GridField:
    """Integrate the discovered equation from the truth's initial state.

    Periodic benchmarks (and the effectively-compact convection-
    diffusion plume) use the shared pseudo-spectral integrator;
    groundwater, which has Dirichlet boundaries, is re-solved with the
    implicit linear solver and therefore requires a support made of
    linear terms only.
    """
    grid = truth_reg.spec
    ic = truth_reg.values[:, 0]
    labels = result.support_labels
    coeffs = dict(zip(labels, result.coefficients))
    if benchmark == "groundwater":
        allowed = {"1", "u_x", "u_xx"}
        if not set(labels) <= allowed:
            raise DivergenceError(
                f"cannot re-solve nonlinear terms {set(labels) - allowed} "
                "with Dirichlet boundaries",
                grid.t0,
            )
        return solve_linear_dirichlet(
            grid,
            ic,
            c2=coeffs.get("u_xx", 0.0),
            c1=coeffs.get("u_x", 0.0),
            c0=coeffs.get("1", 0.0),
            substeps=presets.solver_substeps(benchmark),
        )
    pgrid = grid if grid.periodic_x else replace(grid, periodic_x=True)
    vec = np.zeros(len(result.catalog))
    for i, c in zip(result.support, result.coefficients):
        vec[i] = c
    learned = solve_generic(
        vec, result.catalog, pgrid, ic,
        substeps=presets.solver_substeps(benchmark),
    )
    return GridField(grid, learned.values)


def _write_summary(out: RunResult, run_dir: Path) -> None:
    lines = ["# run summary"]
    if out is not None and out.result is not None:
        r = out.result
        lines.append("equation " + r.equation())
        lines.append("support " + (" ".join(r.support_labels) or "none"))
        for lab, c in zip(r.support_labels, r.coefficients):
            lines.append(f"coefficient {lab} {fmt(c)}")
        lines.append(f"residual_rms {fmt(r.residual_rms)}")
    if out is not None and out.error is not None:
        lines.append(f"max_error_pct {fmt(out.error.max_error)}")
        lines.append(f"mean_error_pct {fmt(out.error.mean_error)}")
    if out is not None and out.divergence_time is not None:
        lines.append("max_error_pct inf")
        lines.append(f"diverged_at {fmt(out.divergence_time)}")
    with open(run_dir / "summary.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")


SWEEP_AXES = ("data_volume", "noise_level", "decimation")


def sweep(config: ExperimentConfig, axis: str, values, root="runs", workers=1):
    """One run per value; returns (rows, run results) in input order.

    Rows are (value, support, coefficients, max_rel_error, equation)
    tuples ready for the delimited table; failures become rows carrying
    the failing stage instead of a support.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")

    def configure(v):
        if axis == "data_volume":
            return replace(config, sampling_mode="random", n_samples=int(v))
        if axis == "noise_level":
            return replace(config, noise_delta=float(v))
        return replace(
            config, sampling_mode="decimate", stride_x=int(v), stride_t=int(v)
        )

    def one(v):
        try:
            return run(configure(v), root=root)
        except Exception:  # defensive: run() already records stage errors
            traceback.print_exc()
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, values))
    else:
        results = [one(v) for v in values]

    rows = []
    for v, res in zip(values, results):
        if res is None or res.result is None:
            failed = "?" if res is None else ";".join(
                f"{k}:{s}" for k, s in res.stages.items() if s != "ok"
            )
            rows.append((v, f"FAILED {failed}", "", "", ""))
            continue
        r = res.result
        has_err = res.error is not None or res.divergence_time is not None
        rows.append(
            (
                v,
                ";".join(r.support_labels) or "none",
                ";".join(fmt(c) for c in r.coefficients),
                fmt(res.max_error) if has_err else "",
                r.equation(),
            )
        )
    return rows, results


def write_sweep_table(rows, axis, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{axis}\tsupport\tcoefficients\tmax_rel_error_pct\tequation\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")
