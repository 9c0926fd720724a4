"""Reference solvers for the benchmark processes.

Four dedicated solvers produce ground-truth fields:

* groundwater head (1-D confined aquifer, diffusion) -- Crank-Nicolson,
  unconditionally stable on coarse grids;
* convection-diffusion -- closed-form translating Gaussian, so the truth
  carries no discretization error;
* Burgers and KdV -- periodic pseudo-spectral space, integrating-factor
  RK4 time stepping with internal substeps.

solve_generic integrates an arbitrary right-hand side built from a term
catalog with the same spectral scheme, so a re-solved discovered
equation differs from the dedicated solution only through its
coefficients.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .grids import GridError, GridField, GridSpec


class ParameterError(ValueError):
    """A PDE parameter is out of its admissible range."""


class ConfigurationError(ValueError):
    """Solver asked to run on a grid it does not support."""


class DivergenceError(RuntimeError):
    """Time integration blew up; .time holds the first bad output time."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


BLOWUP_LIMIT = 1e6


@dataclass
class PdeSpec:
    """A named PDE with coefficients and an initial-condition recipe.

    kind: groundwater | convection_diffusion | burgers | kdv
    params: named coefficients (see the solver for each kind)
    ic: dict with an "ic" key selecting a recipe understood by build_ic;
        None picks the benchmark default.
    """

    kind: str
    params: dict = field(default_factory=dict)
    ic: dict | None = None


_DEFAULT_ICS = {
    "groundwater": {
        "ic": "ramp_gaussian",
        "left": 1.0,
        "right": 0.0,
        "amp": 0.5,
        "center": 500.0,
        "width": 100.0,
    },
    "burgers": {"ic": "gaussian", "amp": 1.0, "center": -2.0, "width": 1.0},
    "kdv": {"ic": "cosine", "amp": 1.0, "freq": 1.0},
}

_DEFAULT_PARAMS = {
    "groundwater": {"K": 1.0, "S_s": 0.01},
    "convection_diffusion": {"v_x": 1.0, "D_L": 0.25, "m": 1.0, "x_src": 2.0, "t_off": 1.0},
    "burgers": {"a": 0.1},
    "kdv": {"b": 0.0025},
}


def default_spec(kind: str) -> PdeSpec:
    """The benchmark PdeSpec for the given kind (paper parameter values)."""
    if kind not in _DEFAULT_PARAMS:
        raise ParameterError(f"unknown PDE kind {kind!r}")
    return PdeSpec(kind, dict(_DEFAULT_PARAMS[kind]), _DEFAULT_ICS.get(kind))


def build_ic(ic: dict, xs: np.ndarray) -> np.ndarray:
    """Evaluate an initial-condition recipe on the grid points."""
    kind = ic["ic"]
    if kind == "ramp_gaussian":
        span = xs[-1] - xs[0]
        ramp = ic["left"] + (ic["right"] - ic["left"]) * (xs - xs[0]) / span
        bump = ic["amp"] * np.exp(-(((xs - ic["center"]) / ic["width"]) ** 2))
        return ramp + bump
    if kind == "gaussian":
        return ic["amp"] * np.exp(-(((xs - ic["center"]) / ic["width"]) ** 2))
    if kind == "cosine":
        return ic["amp"] * np.cos(np.pi * ic["freq"] * xs)
    if kind == "sine_mode":
        # sin(pi*m*(x-x0)/L): vanishes at both ends of [x0, x0+L]
        return ic["amp"] * np.sin(np.pi * ic["m"] * (xs - xs[0]) / (xs[-1] - xs[0]))
    if kind == "linear":
        span = xs[-1] - xs[0]
        return ic["left"] + (ic["right"] - ic["left"]) * (xs - xs[0]) / span
    if kind == "constant":
        return np.full_like(xs, float(ic["value"]))
    if kind == "zero":
        return np.zeros_like(xs)
    raise ParameterError(f"unknown initial-condition recipe {kind!r}")


def _resolve_ic(spec: PdeSpec, xs: np.ndarray) -> np.ndarray:
    ic = spec.ic if spec.ic is not None else _DEFAULT_ICS[spec.kind]
    return build_ic(ic, xs)


# ---------------------------------------------------------------------------
# Crank-Nicolson for linear PDEs with Dirichlet boundaries


def solve_linear_dirichlet(
    grid: GridSpec,
    u0: np.ndarray,
    c2: float,
    c1: float = 0.0,
    c0: float = 0.0,
    substeps: int = 10,
) -> GridField:
    """Integrate u_t = c0 + c1*u_x + c2*u_xx with frozen endpoint values.

    Crank-Nicolson in time (theta = 1/2), second-order central stencils
    in space, `substeps` implicit steps per output interval.  Boundary
    values are held at u0[0] and u0[-1] for all time.
    """
    if grid.periodic_x:
        raise ConfigurationError("Dirichlet solver requires a non-periodic grid")
    nx, nt = grid.nx, grid.nt
    dx, dt = grid.dx, grid.dt / substeps
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (nx,):
        raise GridError(f"initial condition has shape {u0.shape}, expected ({nx},)")

    n_int = nx - 2
    lower = c2 / dx**2 - c1 / (2 * dx)
    diag = -2 * c2 / dx**2
    upper = c2 / dx**2 + c1 / (2 * dx)

    # banded forms of (I -+ dt/2 * A) for solve_banded
    lhs = np.zeros((3, n_int))
    lhs[0, 1:] = -dt / 2 * upper
    lhs[1, :] = 1 - dt / 2 * diag
    lhs[2, :-1] = -dt / 2 * lower

    ul, ur = u0[0], u0[-1]
    values = np.empty((nx, nt))
    values[:, 0] = u0
    u = u0.copy()
    for j in range(1, nt):
        for _ in range(substeps):
            w = u[1:-1]
            rhs = w + dt / 2 * (
                lower * u[:-2] + diag * w + upper * u[2:]
            ) + dt * c0
            # constant boundary contribution of the implicit half step
            rhs[0] += dt / 2 * lower * ul
            rhs[-1] += dt / 2 * upper * ur
            u[1:-1] = solve_banded((1, 1), lhs, rhs)
        values[:, j] = u
    return GridField(grid, values)


def solve_groundwater(spec: PdeSpec, grid: GridSpec, substeps: int = 10) -> GridField:
    """Head evolution K*h_xx = S_s*h_t on a confined 1-D aquifer."""
    if spec.kind != "groundwater":
        raise ConfigurationError(f"expected groundwater spec, got {spec.kind!r}")
    K = spec.params["K"]
    S_s = spec.params["S_s"]
    if K <= 0 or S_s <= 0:
        raise ParameterError(f"K and S_s must be positive (K={K}, S_s={S_s})")
    u0 = _resolve_ic(spec, grid.xs)
    return solve_linear_dirichlet(grid, u0, c2=K / S_s, substeps=substeps)


# ---------------------------------------------------------------------------
# Convection-diffusion: closed-form translating Gaussian


def solve_convection_diffusion(spec: PdeSpec, grid: GridSpec) -> GridField:
    """Exact solution of C_t = -v_x*C_x + D_L*C_xx for a Gaussian plume.

    C(x,t) = m / sqrt(4*pi*D_L*(t+t_off))
             * exp(-(x - x_src - v_x*(t+t_off))^2 / (4*D_L*(t+t_off)))

    The time offset t_off > 0 keeps the profile regular at t = 0.
    """
    if spec.kind != "convection_diffusion":
        raise ConfigurationError(
            f"expected convection_diffusion spec, got {spec.kind!r}"
        )
    p = spec.params
    v, D, m = p["v_x"], p["D_L"], p.get("m", 1.0)
    x_src, t_off = p.get("x_src", 2.0), p.get("t_off", 1.0)
    if D <= 0:
        raise ParameterError(f"D_L must be positive, got {D}")
    if t_off <= 0:
        raise ParameterError(f"t_off must be positive (singular at t=-t_off), got {t_off}")
    x = grid.xs[:, None]
    tau = (grid.ts + t_off)[None, :]
    values = m / np.sqrt(4 * np.pi * D * tau) * np.exp(
        -((x - x_src - v * tau) ** 2) / (4 * D * tau)
    )
    return GridField(grid, values)


def convection_diffusion_exact(spec: PdeSpec, x, t):
    """Point evaluation of the closed form (loose grid not required)."""
    p = spec.params
    v, D, m = p["v_x"], p["D_L"], p.get("m", 1.0)
    x_src, t_off = p.get("x_src", 2.0), p.get("t_off", 1.0)
    tau = np.asarray(t) + t_off
    return m / np.sqrt(4 * np.pi * D * tau) * np.exp(
        -((np.asarray(x) - x_src - v * tau) ** 2) / (4 * D * tau)
    )


# ---------------------------------------------------------------------------
# Periodic pseudo-spectral integration (Burgers, KdV, generic catalogs)


def _spectral_solve(
    grid: GridSpec,
    u0: np.ndarray,
    linear: dict,
    nonlinear: list,
    constant: float = 0.0,
    substeps: int = 10,
) -> GridField:
    """Integrate u_t = constant + sum_q linear[q]*d^q u + nonlinear terms.

    linear maps derivative order q (0..3, with 0 meaning the u term) to
    its coefficient; nonlinear holds (p, q, coeff) triples standing for
    coeff * u^p * d^q u.  Spatial derivatives are spectral (rfft); time
    stepping is RK4 on the integrating-factor transformed system, which
    removes the linear stiffness exactly.
    """
    if not grid.periodic_x:
        raise ConfigurationError("pseudo-spectral solver requires periodic_x")
    nx, nt = grid.nx, grid.nt
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (nx,):
        raise GridError(f"initial condition has shape {u0.shape}, expected ({nx},)")

    k = 2 * np.pi * np.fft.rfftfreq(nx, d=grid.dx)
    deriv = {}
    for q in (1, 2, 3):
        d = (1j * k) ** q
        if q % 2 == 1 and nx % 2 == 0:
            d[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
        deriv[q] = d

    L = np.zeros_like(k, dtype=complex)
    for q, c in linear.items():
        L = L + (c if q == 0 else c * deriv[q])

    dealias = np.ones_like(k)
    dealias[nx // 3 + 1 :] = 0.0

    need_q = sorted({q for _, q, _ in nonlinear if q > 0})

    def nonlinear_hat(vhat):
        u = np.fft.irfft(vhat, nx)
        du = {q: np.fft.irfft(deriv[q] * vhat, nx) for q in need_q}
        acc = np.full(nx, constant) if constant else np.zeros(nx)
        for p, q, c in nonlinear:
            term = du[q] if q > 0 else np.ones(nx)
            if p:
                term = u**p * term
            acc = acc + c * term
        return dealias * np.fft.rfft(acc)

    dt = grid.dt / substeps
    E = np.exp(L * dt / 2)
    E2 = E * E

    values = np.empty((nx, nt))
    values[:, 0] = u0
    v = np.fft.rfft(u0)
    for j in range(1, nt):
        for _ in range(substeps):
            a = dt * nonlinear_hat(v)
            b = dt * nonlinear_hat(E * (v + a / 2))
            c = dt * nonlinear_hat(E * v + b / 2)
            d = dt * nonlinear_hat(E2 * v + E * c)
            v = E2 * v + (E2 * a + 2 * E * (b + c) + d) / 6
        u = np.fft.irfft(v, nx)
        t_now = grid.ts[j]
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_LIMIT:
            raise DivergenceError(f"solution diverged at t={t_now:g}", t_now)
        values[:, j] = u
    return GridField(grid, values)


def solve_burgers(spec: PdeSpec, grid: GridSpec, substeps: int = 10) -> GridField:
    """Burgers equation u_t = -u*u_x + a*u_xx on a periodic grid."""
    if spec.kind != "burgers":
        raise ConfigurationError(f"expected burgers spec, got {spec.kind!r}")
    a = spec.params["a"]
    if a <= 0:
        raise ParameterError(f"diffusion coefficient a must be positive, got {a}")
    u0 = _resolve_ic(spec, grid.xs)
    return _spectral_solve(
        grid, u0, linear={2: a}, nonlinear=[(1, 1, -1.0)], substeps=substeps
    )


def solve_kdv(spec: PdeSpec, grid: GridSpec, substeps: int = 8) -> GridField:
    """KdV equation u_t = -u*u_x - b*u_xxx on a periodic grid."""
    if spec.kind != "kdv":
        raise ConfigurationError(f"expected kdv spec, got {spec.kind!r}")
    b = spec.params["b"]
    u0 = _resolve_ic(spec, grid.xs)
    return _spectral_solve(
        grid, u0, linear={3: -b}, nonlinear=[(1, 1, -1.0)], substeps=substeps
    )


def solve_generic(coeffs, catalog, grid: GridSpec, ic, substeps: int = 10) -> GridField:
    """Integrate u_t = sum_j coeffs[j] * term_j(u) for a term catalog.

    ic is the initial profile on grid.xs (array) so a discovered PDE can
    be restarted from exactly the truth's initial state.  Linear terms
    go into the integrating factor; everything else is treated
    pseudo-spectrally.  Blow-ups raise DivergenceError rather than
    returning garbage.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(catalog),):
        raise ParameterError(
            f"coefficient vector has length {coeffs.size}, catalog has {len(catalog)}"
        )
    linear = {}
    nonlinear = []
    constant = 0.0
    for c, term in zip(coeffs, catalog):
        if c == 0.0:
            continue
        if term.u_power == 0 and term.deriv_order == 0:
            constant += c
        elif term.u_power == 0 or (term.u_power == 1 and term.deriv_order == 0):
            q = term.deriv_order if term.u_power == 0 else 0
            linear[q] = linear.get(q, 0.0) + c
        else:
            nonlinear.append((term.u_power, term.deriv_order, c))
    u0 = np.asarray(ic, dtype=float)
    return _spectral_solve(grid, u0, linear, nonlinear, constant, substeps)
