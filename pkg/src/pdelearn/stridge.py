"""Sequential threshold ridge regression.

One ridge solve gives a dense coefficient vector; coefficients below
the threshold are dropped and the remaining terms are re-solved until
the active set stops changing.  Thresholding happens in the system's
(normalized) column scale so a single tolerance is meaningful across
problems; reported coefficients are mapped back to problem units, by
default re-estimated with an unregularized least-squares fit on the
final support to remove shrinkage bias.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .grids import fmt
from .library import FeatureSystem, TermCatalog, parse_label


class RankError(np.linalg.LinAlgError):
    """Singular normal equations with zero ridge penalty."""


@dataclass
class StridgeConfig:
    lam: float | None = None  # None -> 1e-5 on unit-norm columns
    tol: float = 0.05
    relative_tol: bool = True  # tol as a fraction of the largest coefficient
    max_iter: int = 25
    final_refit: bool = True
    tol_sweep: tuple | None = None
    val_fraction: float = 0.2
    sweep_seed: int = 0
    complexity_penalty: float | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def resolve_lambda(config: StridgeConfig, system: FeatureSystem) -> float:
    """Ridge penalty; fixed small value relative to unit-norm columns.

    With columns scaled to unit 2-norm the Gram matrix has a unit
    diagonal, so a penalty of 1e-5 is a mild conditioning aid that
    leaves coefficients essentially unshrunk.
    """
    if config.lam is not None:
        return config.lam
    return 1e-5


@dataclass
class DiscoveryResult:
    """Selected terms, their coefficients, and solve diagnostics."""

    catalog: TermCatalog
    support: tuple  # strictly increasing catalog indices
    coefficients: np.ndarray  # problem units, aligned with support
    iterations_used: int
    residual_rms: float
    warnings: tuple = ()

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.support = tuple(int(i) for i in self.support)
        if len(self.support) != len(self.coefficients):
            raise ValueError("support and coefficients must align")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support indices must be strictly increasing")

    @property
    def support_labels(self):
        return tuple(self.catalog.labels[i] for i in self.support)

    def coefficient_map(self) -> dict:
        return dict(zip(self.support_labels, self.coefficients))

    def equation(self, precision: int = 3) -> str:
        """Human-readable rendering, e.g. u_t = -0.996*u*u_x + 0.099*u_xx."""
        if not self.support:
            return "u_t = 0"
        parts = []
        for k, (i, c) in enumerate(zip(self.support, self.coefficients)):
            label = self.catalog.labels[i]
            mag = f"{abs(c):.{precision}f}" if precision >= 0 else fmt(abs(c))
            term = mag if label == "1" else f"{mag}*{label}"
            if k == 0:
                parts.append(("-" if c < 0 else "") + term)
            else:
                parts.append(("- " if c < 0 else "+ ") + term)
        return "u_t = " + " ".join(parts)


def ridge(system: FeatureSystem, lam: float) -> np.ndarray:
    """Ridge estimate (theta^T theta + lam I)^-1 theta^T ut.

    Solved via a Cholesky/LU factorization of the regularized normal
    equations, never an explicit inverse.  lam = 0 on a rank-deficient
    system raises RankError.
    """
    theta, ut = system.theta, system.ut
    gram = theta.T @ theta
    rhs = theta.T @ ut
    if lam:
        gram = gram + lam * np.eye(gram.shape[0])
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankError(f"singular system with lam={lam}: {exc}") from exc
    if lam == 0.0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise RankError("rank-deficient system with lam=0")
    return coef


def _residual_rms(system: FeatureSystem, support, coefficients) -> float:
    raw = system.raw_theta()
    pred = raw[:, list(support)] @ coefficients if len(support) else 0.0
    return float(np.sqrt(np.mean((system.ut - pred) ** 2)))


def stridge(system: FeatureSystem, config: StridgeConfig) -> DiscoveryResult:
    """Iterate ridge solve + hard threshold until the support is stable.

    Coefficients strictly smaller in magnitude than the threshold are
    omitted; ties are retained.  An empty final support is a valid
    "no PDE found" outcome, flagged in the warnings.
    """
    lam = resolve_lambda(config, system)
    m = len(system.catalog)
    support = np.arange(m)
    warnings = []
    coef_scaled = None
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        sub = FeatureSystem(
            system.theta[:, support],
            system.ut,
            _subset_catalog(system.catalog, support),
            system.column_scales[support],
        )
        coef_scaled = ridge(sub, lam)
        thr = config.tol * np.max(np.abs(coef_scaled)) if config.relative_tol else config.tol
        keep = np.abs(coef_scaled) >= thr
        if keep.all():
            break
        support = support[keep]
        coef_scaled = coef_scaled[keep]
        if support.size == 0:
            warnings.append("no PDE found: all coefficients fell below tol")
            break
    else:
        warnings.append(f"support did not stabilize within max_iter={config.max_iter}")

    if support.size and config.final_refit:
        raw = system.raw_theta()[:, support]
        coef, *_ = np.linalg.lstsq(raw, system.ut, rcond=None)
    elif support.size:
        coef = coef_scaled / system.column_scales[support]
    else:
        coef = np.empty(0)
    order = np.argsort(support)
    support = support[order]
    coef = np.asarray(coef)[order]
    return DiscoveryResult(
        catalog=system.catalog,
        support=tuple(support.tolist()),
        coefficients=coef,
        iterations_used=iterations,
        residual_rms=_residual_rms(system, support, coef),
        warnings=tuple(warnings),
    )


def _subset_catalog(catalog: TermCatalog, idx) -> TermCatalog:
    return TermCatalog([catalog[i] for i in idx])


def sweep_tol(system: FeatureSystem, config: StridgeConfig) -> DiscoveryResult:
    """Pick tol from config.tol_sweep by validation residual.

    Rows are split deterministically (seeded permutation) into fit and
    validation parts; each candidate tol is scored by validation RMS
    plus a complexity penalty per selected term, and the winner is
    re-run on the full system.
    """
    if not config.tol_sweep:
        raise ValueError("tol_sweep must be a nonempty list of tol values")
    n = system.n_rows
    rng = np.random.default_rng(config.sweep_seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(config.val_fraction * n)))
    val_idx, fit_idx = perm[:n_val], perm[n_val:]

    raw = system.raw_theta()
    fit_sys = FeatureSystem(raw[fit_idx], system.ut[fit_idx], system.catalog)
    from .library import normalize

    fit_sys = normalize(fit_sys)
    theta_val, ut_val = raw[val_idx], system.ut[val_idx]

    def val_rms(support, coef):
        pred = theta_val[:, list(support)] @ coef if len(support) else 0.0
        return float(np.sqrt(np.mean((ut_val - pred) ** 2)))

    kappa = config.complexity_penalty
    if kappa is None:
        # validation RMS of the best single-term model, spread over the catalog
        best_single = np.inf
        for j in range(len(system.catalog)):
            c, *_ = np.linalg.lstsq(raw[fit_idx][:, [j]], system.ut[fit_idx], rcond=None)
            best_single = min(best_single, val_rms((j,), c))
        kappa = best_single / len(system.catalog)

    best = None
    best_score = np.inf
    best_tol = None
    for tol in config.tol_sweep:
        candidate = stridge(fit_sys, replace(config, tol=tol, tol_sweep=None))
        score = val_rms(candidate.support, candidate.coefficients) + kappa * len(
            candidate.support
        )
        if candidate.support and score < best_score:
            best, best_score, best_tol = candidate, score, tol
    if best is None:
        return DiscoveryResult(
            catalog=system.catalog,
            support=(),
            coefficients=np.empty(0),
            iterations_used=0,
            residual_rms=_residual_rms(system, (), np.empty(0)),
            warnings=("no PDE found: every tol in the sweep emptied the support",),
        )
    final = stridge(system, replace(config, tol=best_tol, tol_sweep=None))
    return replace(
        final, warnings=final.warnings + (f"tol={best_tol:g} selected by sweep",)
    )


def save_result(result: DiscoveryResult, path, precision: int = 3) -> None:
    """Structured text report for a DiscoveryResult."""
    lines = [
        "# discovery v1",
        "catalog " + " ".join(result.catalog.labels),
        f"n_terms {len(result.support)}",
    ]
    for i, c in zip(result.support, result.coefficients):
        lines.append(f"term {i} {result.catalog.labels[i]} {fmt(c)}")
    lines.append(f"residual_rms {fmt(result.residual_rms)}")
    lines.append(f"iterations {result.iterations_used}")
    if result.warnings:
        for w in result.warnings:
            lines.append(f"warning {w}")
    else:
        lines.append("warning none")
    lines.append(f"equation {result.equation(precision)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_result(path) -> DiscoveryResult:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "# discovery v1":
            raise ValueError(f"{path}: not a discovery report")
        labels = fh.readline().split()[1:]
        catalog = TermCatalog([parse_label(l) for l in labels])
        n_terms = int(fh.readline().split()[1])
        support, coefficients = [], []
        for _ in range(n_terms):
            parts = fh.readline().split()
            support.append(int(parts[1]))
            coefficients.append(float(parts[3]))
        residual = float(fh.readline().split()[1])
        iterations = int(fh.readline().split()[1])
        warnings = []
        for line in fh:
            if line.startswith("warning"):
                w = line[len("warning "):].strip()
                if w != "none":
                    warnings.append(w)
    return DiscoveryResult(
        catalog=catalog,
        support=tuple(support),
        coefficients=np.array(coefficients),
        iterations_used=iterations,
        residual_rms=residual,
        warnings=tuple(warnings),
    )
