"""Exact input derivatives of a trained network.

Derivatives are computed by forward-mode propagation of a truncated
derivative jet (u, u_t, u_x, u_xx, u_xxx) through the layers.  Affine
maps act slotwise; an activation a -> act(a) updates the slots with the
chain rule

    f   = act(a)
    f_t = act'(a) a_t
    f_x = act'(a) a_x
    f_xx = act''(a) a_x^2 + act'(a) a_xx
    f_xxx = act'''(a) a_x^3 + 3 act''(a) a_x a_xx + act'(a) a_xxx

so the results are exact to rounding, not finite-difference
approximations.  The input-scaling chain-rule factors are applied at
the first layer and everything downstream is in problem units.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .net import Network, input_scale_factors, scale_inputs


class ExtrapolationWarning(UserWarning):
    """Meta-data grid reaches outside the network's training box."""


@dataclass
class DerivativeJet:
    """Network value and partial derivatives at one query point."""

    x: float
    t: float
    u: float
    u_t: float
    u_x: float
    u_xx: float
    u_xxx: float


class JetBatch:
    """Column-array container for many jets; iterates as DerivativeJet."""

    FIELDS = ("x", "t", "u", "u_t", "u_x", "u_xx", "u_xxx")

    def __init__(self, x, t, u, u_t, u_x, u_xx, u_xxx):
        self.x = np.asarray(x, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.u_t = np.asarray(u_t, dtype=float)
        self.u_x = np.asarray(u_x, dtype=float)
        self.u_xx = np.asarray(u_xx, dtype=float)
        self.u_xxx = np.asarray(u_xxx, dtype=float)

    def __len__(self):
        return self.x.size

    def __getitem__(self, i):
        return DerivativeJet(*(getattr(self, f)[i] for f in self.FIELDS))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _act_derivs(activation, a):
    """act(a) and its first three derivatives."""
    if activation == "tanh":
        s = np.tanh(a)
        d1 = 1.0 - s**2
        d2 = -2.0 * s * d1
        d3 = (6.0 * s**2 - 2.0) * d1
        return s, d1, d2, d3
    s = np.sin(a)
    c = np.cos(a)
    return s, c, -s, -c


def jet_batch(net: Network, x, t) -> JetBatch:
    """Jets at arbitrary problem-unit query points (vectorized)."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    xs, ts = scale_inputs(net, x, t)
    sx, st = input_scale_factors(net)
    n = x.size

    # slot arrays over the current layer's units
    v = np.column_stack([xs, ts])
    vt = np.zeros((n, 2))
    vt[:, 1] = st
    v1 = np.zeros((n, 2))
    v1[:, 0] = sx
    v2 = np.zeros((n, 2))
    v3 = np.zeros((n, 2))

    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        Wt = W.T
        a = v @ Wt + b
        at = vt @ Wt
        a1 = v1 @ Wt
        a2 = v2 @ Wt
        a3 = v3 @ Wt
        if l == len(net.weights) - 1:
            v, vt, v1, v2, v3 = a, at, a1, a2, a3
            break
        f, d1, d2, d3 = _act_derivs(net.activation, a)
        v = f
        vt = d1 * at
        v3 = d3 * a1**3 + 3.0 * d2 * a1 * a2 + d1 * a3
        v2 = d2 * a1**2 + d1 * a2
        v1 = d1 * a1
    return JetBatch(x, t, v[:, 0], vt[:, 0], v1[:, 0], v2[:, 0], v3[:, 0])


def jet(net: Network, x, t) -> DerivativeJet:
    """Derivative jet of the network at a single point."""
    return jet_batch(net, [x], [t])[0]


@dataclass
class MetaDataSpec:
    """A regular query grid for bulk meta-data generation.

    The x grid is linspace(x_lo, x_hi, nx) when include_x_endpoint,
    otherwise the half-open grid x_lo + k*(x_hi-x_lo)/nx (used for
    periodic domains so x_hi duplicates x_lo).
    """

    x_lo: float
    x_hi: float
    nx: int
    t_lo: float
    t_hi: float
    nt: int
    include_x_endpoint: bool = True

    def __post_init__(self):
        if self.nx < 1 or self.nt < 1:
            raise ValueError("meta grid needs nx, nt >= 1")
        if not (self.x_hi > self.x_lo and self.t_hi > self.t_lo):
            raise ValueError("meta grid bounds must be increasing")

    @property
    def xs(self):
        if self.include_x_endpoint:
            return np.linspace(self.x_lo, self.x_hi, self.nx)
        return self.x_lo + (self.x_hi - self.x_lo) * np.arange(self.nx) / self.nx

    @property
    def ts(self):
        return np.linspace(self.t_lo, self.t_hi, self.nt)

    @property
    def n_points(self):
        return self.nx * self.nt


def generate_metadata(net: Network, spec: MetaDataSpec, on_outside="warn") -> JetBatch:
    """Jets on the meta grid, row-major (x outer, t inner), deterministic.

    Points outside the network's training box produce extrapolated
    derivatives; that triggers ExtrapolationWarning by default or a
    ValueError with on_outside="error".
    """
    if net.input_box is not None:
        x_lo, x_hi, t_lo, t_hi = net.input_box
        tol_x = 1e-9 * max(abs(x_lo), abs(x_hi), 1.0)
        tol_t = 1e-9 * max(abs(t_lo), abs(t_hi), 1.0)
        xs = spec.xs
        if (
            xs.min() < x_lo - tol_x
            or xs.max() > x_hi + tol_x
            or spec.t_lo < t_lo - tol_t
            or spec.t_hi > t_hi + tol_t
        ):
            msg = (
                f"meta grid x [{xs.min():g}, {xs.max():g}] t [{spec.t_lo:g}, "
                f"{spec.t_hi:g}] exceeds training box x [{x_lo:g}, {x_hi:g}] "
                f"t [{t_lo:g}, {t_hi:g}]; extrapolated derivatives are untrustworthy"
            )
            if on_outside == "error":
                raise ValueError(msg)
            warnings.warn(msg, ExtrapolationWarning)
    X, T = np.meshgrid(spec.xs, spec.ts, indexing="ij")
    return jet_batch(net, X.ravel(), T.ravel())


def save_jets(jets: JetBatch, path) -> None:
    from .grids import fmt

    with open(path, "w") as fh:
        fh.write("# jets v1\n")
        fh.write(f"count {len(jets)}\n")
        cols = [getattr(jets, f) for f in JetBatch.FIELDS]
        for row in zip(*cols):
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def load_jets(path) -> JetBatch:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "# jets v1":
            raise ValueError(f"{path}: not a jets file")
        count = int(fh.readline().split()[1])
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (count, 7):
        raise ValueError(f"{path}: expected {count} x 7 values, got {data.shape}")
    return JetBatch(*(data[:, i] for i in range(7)))
