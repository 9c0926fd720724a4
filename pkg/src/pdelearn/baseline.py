"""Direct sparse regression on gridded data with numerical derivatives.

The baseline skips the network entirely: derivatives come from central
finite differences on the (regular) observation grid, optionally
replaced by Savitzky-Golay smoothing (local least-squares polynomial
fits per grid line) when the data are noisy.  The resulting jets feed
the exact same assemble -> normalize -> stridge stack as the main
pipeline, so differences in outcome isolate the derivative quality.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .autodiff import JetBatch
from .grids import GridError, GridField
from .library import TermCatalog, assemble, normalize
from .stridge import DiscoveryResult, StridgeConfig, stridge


@dataclass
class FdConfig:
    scheme: str = "central2"
    boundary: str = "drop"  # or "one_sided"
    smooth: dict | None = None  # {"degree": int, "window": odd int}

    def __post_init__(self):
        if self.scheme not in ("central2", "central4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.boundary not in ("drop", "one_sided"):
            raise ValueError(f"unknown boundary policy {self.boundary!r}")
        if self.smooth is not None:
            w, d = self.smooth["window"], self.smooth["degree"]
            if w % 2 == 0:
                raise ValueError(f"smoothing window must be odd, got {w}")
            if w <= d:
                raise ValueError(f"window {w} must exceed degree {d}")


def _central(values, h, order, axis, periodic):
    """Central differences along one axis, one-sided rows at open edges."""
    u = np.moveaxis(values, axis, 0)
    n = u.shape[0]
    out = np.empty_like(u)

    def sh(k):  # u shifted by k cells (periodic wrap when allowed)
        return np.roll(u, -k, axis=0)

    if periodic:
        if order == 1:
            out = (sh(1) - sh(-1)) / (2 * h)
        elif order == 2:
            out = (sh(1) - 2 * u + sh(-1)) / h**2
        else:
            out = (sh(2) - 2 * sh(1) + 2 * sh(-1) - sh(-2)) / (2 * h**3)
        return np.moveaxis(out, 0, axis)

    if order == 1:
        out[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        out[0] = (-1.5 * u[0] + 2 * u[1] - 0.5 * u[2]) / h
        out[-1] = (1.5 * u[-1] - 2 * u[-2] + 0.5 * u[-3]) / h
    elif order == 2:
        out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
        out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    else:
        out[2:-2] = (u[4:] - 2 * u[3:-1] + 2 * u[1:-3] - u[:-4]) / (2 * h**3)
        edge = (-2.5 * u[0] + 9 * u[1] - 12 * u[2] + 7 * u[3] - 1.5 * u[4]) / h**3
        out[0] = edge
        out[1] = (-2.5 * u[1] + 9 * u[2] - 12 * u[3] + 7 * u[4] - 1.5 * u[5]) / h**3
        out[-1] = (2.5 * u[-1] - 9 * u[-2] + 12 * u[-3] - 7 * u[-4] + 1.5 * u[-5]) / h**3
        out[-2] = (2.5 * u[-2] - 9 * u[-3] + 12 * u[-4] - 7 * u[-5] + 1.5 * u[-6]) / h**3
    return np.moveaxis(out, 0, axis)


def _central4(values, h, order, axis, periodic):
    """Fourth-order central stencils (interior only; edges as central2)."""
    u = np.moveaxis(values, axis, 0)

    def sh(k):
        return np.roll(u, -k, axis=0)

    if periodic:
        if order == 1:
            out = (-sh(2) + 8 * sh(1) - 8 * sh(-1) + sh(-2)) / (12 * h)
        elif order == 2:
            out = (-sh(2) + 16 * sh(1) - 30 * u + 16 * sh(-1) - sh(-2)) / (12 * h**2)
        else:
            out = (
                -sh(3) + 8 * sh(2) - 13 * sh(1) + 13 * sh(-1) - 8 * sh(-2) + sh(-3)
            ) / (8 * h**3)
        return np.moveaxis(out, 0, axis)
    out = np.moveaxis(_central(values, h, order, axis, False), axis, 0)
    if order == 1:
        out[2:-2] = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / (12 * h)
    elif order == 2:
        out[2:-2] = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (
            12 * h**2
        )
    else:
        out[3:-3] = (
            -u[6:] + 8 * u[5:-1] - 13 * u[4:-2] + 13 * u[2:-4] - 8 * u[1:-5] + u[:-6]
        ) / (8 * h**3)
    return np.moveaxis(out, 0, axis)


def fd_jets(field: GridField, config: FdConfig) -> JetBatch:
    """Per-grid-point derivative jets from finite differences.

    With config.smooth set, every x-line and t-line is locally fit by a
    least-squares polynomial (Savitzky-Golay) and derivatives are taken
    from the fit instead of raw differences.  The boundary policy
    "drop" excludes rows whose stencils would leave the grid (always
    keeps periodic x rows); "one_sided" keeps them with skewed stencils.
    """
    spec = field.spec
    if spec.nx < 7:
        raise GridError("need nx >= 7 for third x-derivatives")
    if spec.nt < 3:
        raise GridError("need nt >= 3 for central time derivatives")
    u = field.values
    per = spec.periodic_x

    if config.smooth is not None:
        w, d = config.smooth["window"], config.smooth["degree"]
        if w > spec.nx or w > spec.nt:
            raise GridError(f"smoothing window {w} exceeds grid extent")
        mode = "wrap" if per else "interp"
        u_s = savgol_filter(u, w, d, deriv=0, axis=0, mode=mode)
        dx1 = savgol_filter(u, w, d, deriv=1, delta=spec.dx, axis=0, mode=mode)
        dx2 = savgol_filter(u, w, d, deriv=2, delta=spec.dx, axis=0, mode=mode)
        dx3 = savgol_filter(u, w, d, deriv=3, delta=spec.dx, axis=0, mode=mode)
        dt1 = savgol_filter(u, w, d, deriv=1, delta=spec.dt, axis=1, mode="interp")
        valid_x = np.ones(spec.nx, dtype=bool)
        valid_t = np.ones(spec.nt, dtype=bool)
    else:
        diff = _central if config.scheme == "central2" else _central4
        u_s = u
        dx1 = diff(u, spec.dx, 1, 0, per)
        dx2 = diff(u, spec.dx, 2, 0, per)
        dx3 = diff(u, spec.dx, 3, 0, per)
        dt1 = diff(u, spec.dt, 1, 1, False)
        valid_x = np.ones(spec.nx, dtype=bool)
        valid_t = np.ones(spec.nt, dtype=bool)
        if config.boundary == "drop":
            stencil = 2 if config.scheme == "central2" else 3
            if not per:
                valid_x[:stencil] = valid_x[-stencil:] = False
            t_stencil = 1 if config.scheme == "central2" else 2
            valid_t[:t_stencil] = valid_t[-t_stencil:] = False

    IX, IT = np.meshgrid(
        np.flatnonzero(valid_x), np.flatnonzero(valid_t), indexing="ij"
    )
    ix, it = IX.ravel(), IT.ravel()
    return JetBatch(
        spec.xs[ix],
        spec.ts[it],
        u_s[ix, it],
        dt1[ix, it],
        dx1[ix, it],
        dx2[ix, it],
        dx3[ix, it],
    )


def direct_stridge(
    field: GridField,
    fd: FdConfig,
    catalog: TermCatalog,
    sconfig: StridgeConfig,
) -> DiscoveryResult:
    """Finite-difference jets -> assemble -> normalize -> stridge."""
    jets = fd_jets(field, fd)
    system = normalize(assemble(jets, catalog))
    return stridge(system, sconfig)
