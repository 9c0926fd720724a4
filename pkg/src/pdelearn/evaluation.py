"""Quality metrics for discovered equations.

The field-level metric compares the truth to the re-solved learned
equation pointwise, normalized by the truth's global range and reported
in percent.  The coefficient-level metric checks support recovery and
relative coefficient errors against the known generating equation.
"""

from dataclasses import dataclass

import numpy as np

from .grids import GridField
from .stridge import DiscoveryResult


class RangeError(ValueError):
    """Relative error is undefined for a constant truth field."""


@dataclass
class ErrorField:
    """Pointwise relative error in percent, plus its extremes."""

    spec: object
    values: np.ndarray
    max_error: float
    mean_error: float


def relative_error(truth: GridField, learned: GridField) -> ErrorField:
    """Pointwise |truth - learned| / (max(truth) - min(truth)) * 100."""
    if truth.spec != learned.spec:
        raise ValueError("truth and learned fields must share a grid")
    rng = float(truth.values.max() - truth.values.min())
    if rng == 0.0:
        raise RangeError("truth field is constant; relative error undefined")
    values = np.abs(truth.values - learned.values) / rng * 100.0
    return ErrorField(
        spec=truth.spec,
        values=values,
        max_error=float(values.max()),
        mean_error=float(values.mean()),
    )


def error_to_field(err: ErrorField) -> GridField:
    """Repackage an ErrorField for the shared grid-file format."""
    return GridField(err.spec, err.values)


@dataclass
class Score:
    support_exact: bool
    max_coeff_rel_error: float


def score(result: DiscoveryResult, truth_coeffs: dict) -> Score:
    """Compare a discovery against known truth coefficients.

    truth_coeffs maps term labels to generating coefficients.  The
    support is exact iff the selected labels equal the truth's; the
    coefficient error is the largest relative error over the terms
    present in both.
    """
    got = result.coefficient_map()
    support_exact = set(got) == set(truth_coeffs)
    shared = [l for l in truth_coeffs if l in got]
    if not shared:
        return Score(support_exact, np.inf)
    errs = [abs(got[l] - truth_coeffs[l]) / abs(truth_coeffs[l]) for l in shared]
    return Score(support_exact, float(max(errs)))
