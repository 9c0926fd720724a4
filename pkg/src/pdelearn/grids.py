"""Regular space-time grids and fields sampled on them.

A GridField is the common currency between the solvers, the sampling
stage and the evaluation stage.  Fields are stored as nx-by-nt arrays
(values[i, j] = u(x_i, t_j)) and serialized to a plain-text format that
every other tool in the package reads and writes.
"""

from dataclasses import dataclass, replace

import numpy as np


class GridError(ValueError):
    """Grid too small, inconsistent, or otherwise unusable."""


def fmt(x) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular space-time grid.

    If periodic_x is set the domain is [x0, x0 + nx*dx) with wraparound
    adjacency; otherwise the last point is x0 + (nx-1)*dx.
    """

    x0: float
    dx: float
    nx: int
    t0: float
    dt: float
    nt: int
    periodic_x: bool = False

    def __post_init__(self):
        if self.nx < 3:
            raise GridError(f"nx must be >= 3, got {self.nx}")
        if self.nt < 2:
            raise GridError(f"nt must be >= 2, got {self.nt}")
        if not (self.dx > 0 and self.dt > 0):
            raise GridError("dx and dt must be positive")

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def ts(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    @property
    def x_max(self) -> float:
        return self.x0 + self.dx * (self.nx - 1)

    @property
    def t_max(self) -> float:
        return self.t0 + self.dt * (self.nt - 1)

    @property
    def period(self) -> float:
        """Spatial period nx*dx (meaningful when periodic_x)."""
        return self.nx * self.dx

    @property
    def n_points(self) -> int:
        return self.nx * self.nt


@dataclass
class GridField:
    """Solution values u(x_i, t_j) on a regular grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.nx, self.spec.nt):
            raise GridError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.spec.nx}, {self.spec.nt})"
            )
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")

    def with_values(self, values) -> "GridField":
        return GridField(self.spec, values)

    def rescaled(self, x_factor: float, u_factor: float) -> "GridField":
        """Change of variables x -> x/x_factor, u -> u_factor*u."""
        spec = replace(
            self.spec, x0=self.spec.x0 / x_factor, dx=self.spec.dx / x_factor
        )
        return GridField(spec, self.values * u_factor)


def write_field(field: GridField, path) -> None:
    """Write a GridField in the shared text format.

    Header lines give the grid geometry; the body is one value per line
    in x-fastest order (all x at t_0, then all x at t_1, ...).
    """
    s = field.spec
    lines = [
        "# gridfield v1",
        f"nx {s.nx}",
        f"nt {s.nt}",
        f"x0 {fmt(s.x0)}",
        f"dx {fmt(s.dx)}",
        f"t0 {fmt(s.t0)}",
        f"dt {fmt(s.dt)}",
        f"periodic {int(s.periodic_x)}",
    ]
    body = field.values.T.ravel()  # t outer, x inner
    lines.extend(fmt(v) for v in body)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path) -> GridField:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "# gridfield v1":
            raise GridError(f"{path}: not a gridfield file (header {magic!r})")
        header = {}
        for _ in range(7):
            key, val = fh.readline().split()
            header[key] = val
        spec = GridSpec(
            x0=float(header["x0"]),
            dx=float(header["dx"]),
            nx=int(header["nx"]),
            t0=float(header["t0"]),
            dt=float(header["dt"]),
            nt=int(header["nt"]),
            periodic_x=bool(int(header["periodic"])),
        )
        body = np.loadtxt(fh, dtype=float, ndmin=1)
    if body.size != spec.n_points:
        raise GridError(
            f"{path}: expected {spec.n_points} values, found {body.size}"
        )
    values = body.reshape(spec.nt, spec.nx).T
    return GridField(spec, values)
