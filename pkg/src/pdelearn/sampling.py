"""Observation protocols: subsampling grids, line sampling, noise.

All operations are pure functions of their inputs and an explicit seed;
the generator is numpy's PCG64, so realizations are reproducible across
platforms.  Noise follows the multiplicative model
u' = u * (1 + delta * e) with e uniform on [-1, 1].
"""

from dataclasses import dataclass, replace

import numpy as np

from .grids import GridError, GridField


class SamplingError(ValueError):
    """Invalid sampling request (bad count, off-grid position, reuse)."""


PROVENANCES = ("Random", "FixedTemporalLines", "FixedSpatialLines", "Decimated", "Full")


@dataclass
class NoiseSpec:
    delta: float
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"noise level must be >= 0, got {self.delta}")


@dataclass
class SampleSet:
    """Scattered (x, t, u) observations with their provenance."""

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    provenance: str = "Random"
    noise_level: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if not (self.x.shape == self.t.shape == self.u.shape):
            raise SamplingError("x, t, u must have matching shapes")
        if self.provenance not in PROVENANCES:
            raise SamplingError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return self.x.size

    def has_duplicates(self) -> bool:
        pairs = np.rec.fromarrays([self.x, self.t])
        return np.unique(pairs).size != pairs.size


def _from_grid_indices(field: GridField, ix, it, provenance, seed=None) -> SampleSet:
    xs, ts = field.spec.xs, field.spec.ts
    return SampleSet(
        xs[ix], ts[it], field.values[ix, it], provenance=provenance, seed=seed
    )


def random_subsample(field: GridField, n: int, seed: int) -> SampleSet:
    """n distinct grid points drawn uniformly without replacement."""
    total = field.spec.n_points
    if not 1 <= n <= total:
        raise SamplingError(f"n must be in [1, {total}], got {n}")
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(total, size=n, replace=False))
    ix, it = np.unravel_index(flat, (field.spec.nx, field.spec.nt))
    return _from_grid_indices(field, ix, it, "Random", seed)


def full_sampleset(field: GridField, provenance: str = "Full") -> SampleSet:
    """Every grid point as a SampleSet."""
    ix, it = np.meshgrid(
        np.arange(field.spec.nx), np.arange(field.spec.nt), indexing="ij"
    )
    return _from_grid_indices(field, ix.ravel(), it.ravel(), provenance)


def _match_positions(coords: np.ndarray, positions) -> np.ndarray:
    idx = []
    scale = max(np.max(np.abs(coords)), 1.0)
    for p in positions:
        i = int(np.argmin(np.abs(coords - p)))
        if abs(coords[i] - p) > 1e-9 * scale:
            raise SamplingError(f"position {p!r} is not a grid coordinate")
        idx.append(i)
    return np.asarray(idx, dtype=int)


def line_sample(field: GridField, axis: str, positions) -> SampleSet:
    """All grid points along fixed-t or fixed-x lines.

    axis "fixed_t" takes every spatial point at the given times (sweep
    observation); "fixed_x" takes every time at the given locations
    (monitoring wells).  Positions must be exact grid coordinates.
    """
    spec = field.spec
    if axis == "fixed_t":
        it = _match_positions(spec.ts, positions)
        ix = np.arange(spec.nx)
        IX, IT = np.meshgrid(ix, it, indexing="ij")
        return _from_grid_indices(field, IX.ravel(), IT.ravel(), "FixedTemporalLines")
    if axis == "fixed_x":
        ix = _match_positions(spec.xs, positions)
        it = np.arange(spec.nt)
        IX, IT = np.meshgrid(ix, it, indexing="ij")
        return _from_grid_indices(field, IX.ravel(), IT.ravel(), "FixedSpatialLines")
    raise SamplingError(f"axis must be fixed_t or fixed_x, got {axis!r}")


#: Named observation-line presets: (axis, index picker).
#: Index targets are spread uniformly over the stated index range and
#: snapped to the grid.
_LINE_PRESETS = {
    # 15 survey times across the whole time range
    "cd-15t": ("fixed_t", lambda spec: np.linspace(0, spec.nt - 1, 15)),
    # 12 monitoring locations across the whole spatial range
    "cd-12x": ("fixed_x", lambda spec: np.linspace(0, spec.nx - 1, 12)),
    # 40 survey times from t=0.05 to t=9.95 on the standard Burgers grid
    "burgers-40t": ("fixed_t", lambda spec: np.linspace(1, spec.nt - 2, 40)),
    # 50 monitoring locations from x=-7.9375 to x=7.5625
    "burgers-50x": ("fixed_x", lambda spec: np.linspace(1, spec.nx - 7, 50)),
}


def line_preset(name: str, field: GridField) -> SampleSet:
    """Apply one of the named engineering-setting observation presets."""
    if name not in _LINE_PRESETS:
        raise SamplingError(
            f"unknown line preset {name!r}; choose from {sorted(_LINE_PRESETS)}"
        )
    axis, picker = _LINE_PRESETS[name]
    idx = np.unique(np.rint(picker(field.spec)).astype(int))
    coords = field.spec.ts if axis == "fixed_t" else field.spec.xs
    return line_sample(field, axis, coords[idx])


def decimate(field: GridField, stride_x: int, stride_t: int) -> GridField:
    """Regular sub-grid: keep every stride-th point in each direction."""
    if stride_x < 1 or stride_t < 1:
        raise SamplingError("strides must be >= 1")
    spec = field.spec
    if spec.periodic_x and spec.nx % stride_x != 0:
        raise SamplingError(
            f"stride_x={stride_x} does not divide periodic nx={spec.nx}"
        )
    values = field.values[::stride_x, ::stride_t]
    if values.shape[0] < 3:
        raise GridError(f"stride_x={stride_x} leaves fewer than 3 spatial points")
    new_spec = replace(
        spec,
        dx=spec.dx * stride_x,
        nx=values.shape[0],
        dt=spec.dt * stride_t,
        nt=values.shape[1],
    )
    return GridField(new_spec, values)


def add_noise(samples: SampleSet, noise: NoiseSpec) -> SampleSet:
    """Multiplicative uniform noise u' = u * (1 + delta * e), e ~ U[-1, 1]."""
    if samples.noise_level != 0.0:
        raise SamplingError("sample set already carries noise")
    if noise.delta == 0.0:
        return replace(samples, seed=samples.seed)
    rng = np.random.default_rng(noise.seed)
    e = 2.0 * rng.random(len(samples)) - 1.0
    return SampleSet(
        samples.x,
        samples.t,
        samples.u * (1.0 + noise.delta * e),
        provenance=samples.provenance,
        noise_level=noise.delta,
        seed=noise.seed,
    )


def rescale_groundwater(field: GridField) -> GridField:
    """Nondimensionalize a head field: x* = x/dx, t* = t, h* = dx*h.

    In starred variables the diffusion equation K h_xx = S_s h_t becomes
    h*_t = lambda h*_xx with lambda = K / (S_s dx^2), which is O(1) on
    the benchmark grid.
    """
    return field.rescaled(field.spec.dx, field.spec.dx)


def unrescale_groundwater(field: GridField, dx: float) -> GridField:
    """Inverse of rescale_groundwater given the original spacing."""
    return field.rescaled(1.0 / dx, 1.0 / dx)


def rescale_groundwater_samples(samples: SampleSet, dx: float) -> SampleSet:
    """Apply the starred-variable map to scattered samples."""
    return SampleSet(
        samples.x / dx,
        samples.t,
        samples.u * dx,
        provenance=samples.provenance,
        noise_level=samples.noise_level,
        seed=samples.seed,
    )


def save_samples(samples: SampleSet, path) -> None:
    from .grids import fmt

    with open(path, "w") as fh:
        fh.write("# sampleset v1\n")
        fh.write(f"count {len(samples)}\n")
        fh.write(f"noise_level {fmt(samples.noise_level)}\n")
        fh.write(f"seed {samples.seed if samples.seed is not None else 'none'}\n")
        fh.write(f"provenance {samples.provenance}\n")
        for x, t, u in zip(samples.x, samples.t, samples.u):
            fh.write(f"{fmt(x)} {fmt(t)} {fmt(u)}\n")


def load_samples(path) -> SampleSet:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "# sampleset v1":
            raise SamplingError(f"{path}: not a sampleset file")
        count = int(fh.readline().split()[1])
        noise_level = float(fh.readline().split()[1])
        seed_tok = fh.readline().split()[1]
        seed = None if seed_tok == "none" else int(seed_tok)
        provenance = fh.readline().split()[1]
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (count, 3):
        raise SamplingError(f"{path}: expected {count} x 3 values, got {data.shape}")
    return SampleSet(
        data[:, 0], data[:, 1], data[:, 2],
        provenance=provenance, noise_level=noise_level, seed=seed,
    )
