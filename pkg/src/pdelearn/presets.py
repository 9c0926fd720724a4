"""Published defaults for the four benchmark problems.

Everything an experiment resolves by name lives here: grids, PDE
parameters, network architectures, meta-data domains, solver substeps,
training schedules, and the generating coefficients used for scoring.
The CLI and the experiment pipeline look values up by benchmark name so
a config file only has to say "burgers".
"""

from .autodiff import MetaDataSpec
from .grids import GridSpec
from .solvers import default_spec

BENCHMARKS = ("groundwater", "convection_diffusion", "burgers", "kdv")


def benchmark_grid(name: str) -> GridSpec:
    if name == "groundwater":
        # 101 x 100 points, x in [0, 1000] m, t in [0, 200] d
        return GridSpec(x0=0.0, dx=10.0, nx=101, t0=0.0, dt=200.0 / 99.0, nt=100)
    if name == "convection_diffusion":
        # 120 x 150 points, x in [0, 29.75], t in [0, 14.9]
        return GridSpec(x0=0.0, dx=0.25, nx=120, t0=0.0, dt=0.1, nt=150)
    if name == "burgers":
        # 256 x 201 points, x in [-8, 8) periodic, t in [0, 10]
        return GridSpec(
            x0=-8.0, dx=0.0625, nx=256, t0=0.0, dt=0.05, nt=201, periodic_x=True
        )
    if name == "kdv":
        # 512 x 201 points, x in [-1, 1) periodic, t in [0, 1]
        return GridSpec(
            x0=-1.0, dx=2.0 / 512, nx=512, t0=0.0, dt=0.005, nt=201, periodic_x=True
        )
    raise KeyError(f"unknown benchmark {name!r}")


def benchmark_pde(name: str):
    return default_spec(name)


def solver_substeps(name: str) -> int:
    return {"groundwater": 10, "convection_diffusion": 1, "burgers": 10, "kdv": 8}[name]


#: Generating equations in regression variables (groundwater after the
#: starred rescaling, where the diffusivity is exactly 1).
TRUTH_COEFFICIENTS = {
    "groundwater": {"u_xx": 1.0},
    "convection_diffusion": {"u_x": -1.0, "u_xx": 0.25},
    "burgers": {"u*u_x": -1.0, "u_xx": 0.1},
    "kdv": {"u*u_x": -1.0, "u_xxx": -0.0025},
}


NET_PRESETS = {
    # nine layers, 20 neurons per hidden layer, tanh
    "standard": {"layer_sizes": (2,) + (20,) * 7 + (1,), "activation": "tanh",
                 "freq_factor": 1.0},
    # five layers, 50 neurons per hidden layer, sin
    "kdv": {"layer_sizes": (2,) + (50,) * 3 + (1,), "activation": "sin",
            "freq_factor": 6.0},
    "sin50": {"layer_sizes": (2,) + (50,) * 3 + (1,), "activation": "sin",
              "freq_factor": 6.0},
}


def net_preset(name: str) -> dict:
    return dict(NET_PRESETS[name])


def default_net_preset(benchmark: str) -> str:
    return "kdv" if benchmark == "kdv" else "standard"


def metadata_preset(benchmark: str) -> MetaDataSpec:
    """The dense meta-data query grids (10x the raw data or more)."""
    if benchmark == "groundwater":
        # starred coordinates; 101 x 1000 = 101000 points
        return MetaDataSpec(4.0, 100.0, 101, 0.0, 200.0, 1000)
    if benchmark == "convection_diffusion":
        # 120 x 900 = 108000 points
        return MetaDataSpec(3.0, 15.0, 120, 0.0, 9.0, 900)
    if benchmark == "burgers":
        # half-open periodic x grid; 320 x 180 = 57600 points
        return MetaDataSpec(-8.0, 8.0, 320, 0.0, 9.0, 180, include_x_endpoint=False)
    if benchmark == "kdv":
        # 1000 x 200 = 200000 points
        return MetaDataSpec(-0.5, 0.5, 1000, 0.0, 1.0, 200)
    raise KeyError(f"unknown benchmark {benchmark!r}")


#: Training schedules: a short Adam stage to get into a good basin,
#: then L-BFGS refinement, which reaches the same loss as very long
#: Adam runs in a fraction of the wall time on small networks.
TRAIN_PRESETS = {
    "groundwater": dict(iterations=2000, lbfgs_iterations=3000),
    "convection_diffusion": dict(iterations=2000, lbfgs_iterations=3000),
    "burgers": dict(iterations=2000, lbfgs_iterations=4000),
    "kdv": dict(iterations=2000, lbfgs_iterations=5000),
}


def train_preset(benchmark: str) -> dict:
    return dict(TRAIN_PRESETS[benchmark])
