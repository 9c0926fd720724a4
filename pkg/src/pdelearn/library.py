"""Candidate-term catalog and assembly of the regression system.

Each candidate term is u^p * d^q u/dx^q (the derivative factor is 1
when q = 0, so (0,0) is the constant term and (1,0) is plain u).  The
assembled system stacks one row per jet:

    theta[i, j] = term_j evaluated at jet i,   ut[i] = u_t at jet i

and the sparse-regression stage solves ut = theta @ xi.  Columns can be
normalized to unit 2-norm to make thresholds comparable across terms of
very different magnitudes; the scales are recorded so coefficients map
back to problem units.
"""

from dataclasses import dataclass, field

import numpy as np


class AssemblyError(ValueError):
    """Non-finite jet entries or shape problems during assembly."""


class ConditioningError(ValueError):
    """A catalog column is identically zero and cannot be normalized."""


_DERIV_LABEL = {0: "", 1: "u_x", 2: "u_xx", 3: "u_xxx"}


@dataclass(frozen=True)
class TermSpec:
    """One candidate term u^u_power * d^deriv_order u."""

    u_power: int
    deriv_order: int

    def __post_init__(self):
        if self.u_power not in (0, 1, 2):
            raise ValueError(f"u_power must be 0, 1 or 2, got {self.u_power}")
        if self.deriv_order not in (0, 1, 2, 3):
            raise ValueError(f"deriv_order must be 0..3, got {self.deriv_order}")

    @property
    def label(self) -> str:
        if self.u_power == 0 and self.deriv_order == 0:
            return "1"
        u_part = {0: "", 1: "u", 2: "u^2"}[self.u_power]
        d_part = _DERIV_LABEL[self.deriv_order]
        if not d_part:
            return u_part
        if not u_part:
            return d_part
        return f"{u_part}*{d_part}"


def parse_label(label: str) -> TermSpec:
    """Inverse of TermSpec.label."""
    if label == "1":
        return TermSpec(0, 0)
    if label.startswith("u^2"):
        p = 2
        rest = label[4:] if label.startswith("u^2*") else label[3:]
    elif label.startswith("u*") or label == "u":
        p = 1
        rest = label[2:] if label.startswith("u*") else ""
    else:
        p = 0
        rest = label
    for q, d in _DERIV_LABEL.items():
        if rest == d:
            return TermSpec(p, q)
    raise ValueError(f"cannot parse term label {label!r}")


class TermCatalog:
    """Ordered, immutable list of candidate terms; order fixes columns."""

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("catalog must be nonempty")
        if len(set(terms)) != len(terms):
            raise ValueError("catalog terms must be unique")
        self.terms = terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def __eq__(self, other):
        return isinstance(other, TermCatalog) and self.terms == other.terms

    @property
    def labels(self):
        return tuple(t.label for t in self.terms)

    def index_of(self, label: str) -> int:
        return self.labels.index(label)


def default_catalog() -> TermCatalog:
    """Ten-term catalog: constant, pure derivatives, u- and u^2-weighted.

    [1, u_x, u_xx, u_xxx, u*u_x, u*u_xx, u*u_xxx, u^2*u_x, u^2*u_xx, u^2*u_xxx]
    """
    terms = [TermSpec(0, 0)]
    for p in (0, 1, 2):
        for q in (1, 2, 3):
            terms.append(TermSpec(p, q))
    return TermCatalog(terms)


def extended_catalog() -> TermCatalog:
    """Twelve-term variant that also offers plain u and u^2."""
    terms = [TermSpec(0, 0), TermSpec(1, 0), TermSpec(2, 0)]
    for p in (0, 1, 2):
        for q in (1, 2, 3):
            terms.append(TermSpec(p, q))
    return TermCatalog(terms)


def evaluate_term(term: TermSpec, jet):
    """Value of the term at a jet (scalar jets or JetBatch columns)."""
    deriv = {0: 1.0, 1: jet.u_x, 2: jet.u_xx, 3: jet.u_xxx}[term.deriv_order]
    if term.u_power == 0:
        if term.deriv_order == 0:
            return np.ones_like(jet.u) if np.ndim(jet.u) else 1.0
        return deriv
    return jet.u**term.u_power * deriv


@dataclass
class FeatureSystem:
    """The assembled linear system ut = theta @ xi.

    column_scales[j] is the factor column j has been divided by so far
    (1.0 for a raw system); coefficients solved on the scaled system map
    back to problem units as xi_j = xi_hat_j / column_scales[j].
    """

    theta: np.ndarray
    ut: np.ndarray
    catalog: TermCatalog
    column_scales: np.ndarray = field(default=None)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.ut = np.asarray(self.ut, dtype=float)
        if self.column_scales is None:
            self.column_scales = np.ones(self.theta.shape[1])
        self.column_scales = np.asarray(self.column_scales, dtype=float)
        n, m = self.theta.shape
        if self.ut.shape != (n,):
            raise AssemblyError("theta and ut row counts differ")
        if m != len(self.catalog) or self.column_scales.shape != (m,):
            raise AssemblyError("column count does not match catalog")

    @property
    def n_rows(self):
        return self.theta.shape[0]

    def raw_theta(self) -> np.ndarray:
        """Columns mapped back to problem units."""
        return self.theta * self.column_scales

    def subset_rows(self, idx) -> "FeatureSystem":
        return FeatureSystem(
            self.theta[idx], self.ut[idx], self.catalog, self.column_scales.copy()
        )


def assemble(jets, catalog: TermCatalog) -> FeatureSystem:
    """Build the feature matrix and u_t vector from derivative jets."""
    n = len(jets)
    if n < len(catalog):
        raise AssemblyError(
            f"need at least {len(catalog)} jets to fit {len(catalog)} terms, got {n}"
        )
    if hasattr(jets, "u") and np.ndim(jets.u) == 1:  # JetBatch fast path
        cols = jets
    else:
        from .autodiff import JetBatch

        cols = JetBatch(
            *(
                np.array([getattr(j, f) for j in jets], dtype=float)
                for f in JetBatch.FIELDS
            )
        )
    for name in ("u", "u_t", "u_x", "u_xx", "u_xxx"):
        arr = getattr(cols, name)
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise AssemblyError(f"jet {bad[0]} has non-finite {name}")
    theta = np.empty((n, len(catalog)))
    for j, term in enumerate(catalog):
        theta[:, j] = evaluate_term(term, cols)
    return FeatureSystem(theta, np.array(cols.u_t, dtype=float), catalog)


def normalize(system: FeatureSystem) -> FeatureSystem:
    """Divide each column by its 2-norm, accumulating the scales."""
    norms = np.linalg.norm(system.theta, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ConditioningError(
            f"column {system.catalog.labels[zero[0]]!r} is identically zero"
        )
    return FeatureSystem(
        system.theta / norms,
        system.ut,
        system.catalog,
        system.column_scales * norms,
    )
