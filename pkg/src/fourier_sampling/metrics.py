"""Error and edge-recovery measures for reconstructions on a uniform grid."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import GridField, ParameterError, TrigPolynomial, check_aligned, evaluate_on_grid, lp_norm_values
from .reconstruction import GradientGridOperator, Measurements, bv_objective, feasibility_residual

#: Crossover exponent below which the Riesz-product lower bound gives no gain.
P0 = 1.0 / (math.log2(math.pi) - 1.0)

LP_EXPONENTS = (1.0, 1.5, 2.0)


@dataclass
class EdgeReport:
    """Grid-fraction edge measures plus L_p errors.

    ``measure_T``, ``measure_P`` and ``measure_N`` are only defined for
    {0, 1}-valued truths and are ``None`` otherwise; ``edge_discrepancy``
    (fraction of points where the error reaches 1/4) is always filled.
    """

    measure_T: float | None
    measure_P: float | None
    measure_N: float | None
    measure_union: float
    edge_discrepancy: float
    lp_errors: dict = field(default_factory=dict)
    bv_objective: float = float("nan")
    feasibility: float = float("nan")
    G: int = 0

    def __post_init__(self):
        vals = [v for v in (self.measure_T, self.measure_P, self.measure_N) if v is not None]
        for v in vals + [self.measure_union, self.edge_discrepancy]:
            if not 0.0 <= v <= 1.0:
                raise ParameterError("edge measures must lie in [0, 1]")
        if len(vals) == 3 and self.measure_union > sum(vals) + 1e-15:
            raise ParameterError("union measure exceeds the sum of its parts")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lp_errors"] = {str(k): v for k, v in self.lp_errors.items()}
        return d

    def to_json(self, path, **extra) -> None:
        with open(path, "w") as fh:
            json.dump({**self.to_dict(), **extra}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, GridField) else np.asarray(x)


def _is_binary(v: np.ndarray) -> bool:
    return bool(np.all((v == 0) | (v == 1)))


def edge_sets_binary(recon: GridField, truth: GridField) -> EdgeReport:
    """Transition, false-positive and false-negative fractions against a {0,1} truth."""
    check_aligned(recon, truth)
    r, t = recon.values, truth.values
    if not _is_binary(t):
        raise ParameterError("edge_sets_binary needs a {0, 1}-valued truth")
    T = (r >= 0.25) & (r <= 0.75)
    P = (t == 0) & (r > 0.75)
    N = (t == 1) & (r < 0.25)
    return EdgeReport(
        measure_T=float(T.mean()),
        measure_P=float(P.mean()),
        measure_N=float(N.mean()),
        measure_union=float((T | P | N).mean()),
        edge_discrepancy=edge_discrepancy(recon, truth),
        G=r.shape[0],
    )


def edge_discrepancy(recon: GridField, truth: GridField, c: float = 0.25) -> float:
    """Fraction of grid points with ``|recon - truth| >= c``."""
    if not c > 0:
        raise ParameterError("threshold c must be positive")
    check_aligned(recon, truth)
    return float(np.mean(np.abs(recon.values - truth.values) >= c))


def gamma_exponent(p: float) -> float:
    """``max(0, log2(pi / 2^(1 + 1/p)))`` for ``1 < p <= 2``; vanishes for ``p <= P0``."""
    if not 1.0 < p <= 2.0:
        raise ParameterError("gamma_exponent is defined for 1 < p <= 2")
    return max(0.0, math.log2(math.pi) - 1.0 - 1.0 / p)


def recovery_report(recon: TrigPolynomial, phantom, design=None, G: int = 1024) -> EdgeReport:
    """All edge and error measures of ``recon`` against the exact phantom on a ``G x G`` grid.

    ``design`` (a design or frequency array) selects the coefficients used
    for the feasibility residual; without it the residual is ``nan``.
    """
    rv = evaluate_on_grid(recon, G)
    tv = phantom.render(G)
    err = rv.values - tv.values
    if _is_binary(tv.values):
        rep = edge_sets_binary(rv, tv)
    else:
        rep = EdgeReport(None, None, None, edge_discrepancy(rv, tv), edge_discrepancy(rv, tv), G=G)
        # union falls back to the discrepancy set, its multi-level superset
    rep.lp_errors = {p: lp_norm_values(err, p) for p in LP_EXPONENTS}
    m = recon.degree
    rep.bv_objective = bv_objective(GradientGridOperator(m, 4 * m + 1, recon.dim), recon.coeffs) if m else 0.0
    if design is not None:
        rep.feasibility = feasibility_residual(recon, Measurements.from_source(design, phantom))
    return rep
