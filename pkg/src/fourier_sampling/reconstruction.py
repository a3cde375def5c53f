"""Recovery of trigonometric polynomials from sampled Fourier coefficients.

Three estimators share one interface: the Fourier partial sum, the de la
Vallee Poussin sum, and BV (total variation) minimization under exact
coefficient constraints, solved by ADMM on an oversampled grid.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft as sfft

from .core import (
    ParameterError,
    TrigPolynomial,
    block_frequencies,
    linf,
    read_frequency_values_csv,
    sort_lex,
    vdp_weights,
    write_frequency_values_csv,
)

HERMITIAN_ATOL = 1e-12


class InfeasibleError(ValueError):
    """Measurements that no function can satisfy (inconsistent duplicates)."""


@dataclass(frozen=True)
class Measurements:
    """Sampled Fourier coefficients ``value[i] = f^(freqs[i])``.

    ``real`` marks measurements of a real-valued function; the solvers then
    also impose ``f^(-xi) = conj(value)`` for every sampled ``xi``.
    """

    freqs: np.ndarray
    values: np.ndarray
    source: str = ""
    real: bool = True

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64)
        v = np.asarray(self.values, dtype=complex).ravel()
        if f.ndim != 2 or len(f) != len(v):
            raise ParameterError("freqs must be (n, d) with one value per row")
        if len(f) == 0:
            raise ParameterError("no measurements")
        order = np.lexsort(f.T[::-1])
        f, v = f[order], v[order]
        if len(f) > 1 and np.any(np.all(f[1:] == f[:-1], axis=1)):
            raise InfeasibleError("duplicate measured frequency")
        lookup = {tuple(r): i for i, r in enumerate(f.tolist())}
        scale = max(1.0, float(np.abs(v).max()))
        for i, r in enumerate(f.tolist()):
            j = lookup.get(tuple(-x for x in r))
            if j is not None and self.real and abs(v[j] - np.conj(v[i])) > HERMITIAN_ATOL * scale:
                raise InfeasibleError(f"measurements at {tuple(r)} and its negative are not conjugate")
        f.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_source(cls, design, f, source: str = "") -> "Measurements":
        """Sample a coefficient accessor (e.g. a phantom) at the design frequencies."""
        freqs = design.freqs if hasattr(design, "freqs") else np.asarray(design)
        if len(freqs) == 0:
            raise ParameterError("empty design: nothing to measure")
        real = bool(getattr(f, "real_valued", False) or (isinstance(f, TrigPolynomial) and f.real))
        return cls(freqs, np.asarray(f(freqs), dtype=complex), source or getattr(f, "name", ""), real)

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @property
    def max_degree(self) -> int:
        return int(linf(self.freqs).max())

    def scaled(self, t: float) -> "Measurements":
        return Measurements(self.freqs, self.values * t, self.source, self.real and np.isreal(t))

    def pinned(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies and values actually imposed (closed under negation when ``real``)."""
        if not self.real:
            return self.freqs, self.values
        f = np.concatenate([self.freqs, -self.freqs])
        v = np.concatenate([self.values, np.conj(self.values)])
        # measured entries come first, so mirrors of measured frequencies are dropped
        _, first = np.unique(f, axis=0, return_index=True)
        return f[first], v[first]

    def write_csv(self, path) -> None:
        write_frequency_values_csv(self.freqs, self.values, path)

    @classmethod
    def read_csv(cls, path, source: str = "", real: bool = True) -> "Measurements":
        xi, vals = read_frequency_values_csv(path)
        return cls(xi, vals, source, real)


def _pin_into_block(meas: Measurements, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense block with pinned values, and the boolean pin mask."""
    f, v = meas.pinned()
    if linf(f).max() > m:
        raise ParameterError(f"measured frequency of degree {int(linf(f).max())} exceeds block degree {m}")
    d = f.shape[1]
    c = np.zeros((2 * m + 1,) * d, dtype=complex)
    mask = np.zeros(c.shape, dtype=bool)
    idx = tuple((f + m).T)
    c[idx] = v
    mask[idx] = True
    return c, mask


def _require_block(meas: Measurements, m: int) -> np.ndarray:
    c, mask = _pin_into_block(meas, m)
    if not mask.all():
        missing = block_frequencies(m, meas.dim)[~mask.ravel()][0]
        raise ParameterError(f"measurements do not cover the block |xi| <= {m}; missing {tuple(missing)}")
    return c


def partial_sum_recon(meas: Measurements, m: int) -> TrigPolynomial:
    """Fourier partial sum over ``|xi|_inf <= m`` (the block must be fully measured)."""
    return TrigPolynomial(_require_block(meas, m), real=meas.real)


def vdp_recon(meas: Measurements, m: int) -> TrigPolynomial:
    """Tensor de la Vallee Poussin sum ``V_m`` of the measured block."""
    c = _require_block(meas, m)
    return TrigPolynomial(c * vdp_weights(m, c.ndim), real=meas.real)


def feasibility_residual(f: TrigPolynomial, meas: Measurements) -> float:
    """``max_i |f^(xi_i) - value_i|``."""
    return float(np.max(np.abs(f(meas.freqs) - meas.values)))


# ---------------------------------------------------------------------------
# Gradient-on-grid operator


class GradientGridOperator:
    """``B``: Hermitian coefficient block of degree ``m`` -> gradient samples on a ``G^d`` grid.

    The output has shape ``(d,) + (G,) * d`` and is real.  Because the grid
    resolves every frequency of the block (``G >= 2m+1``) the synthesis has
    orthogonal columns and ``B^T B`` is the diagonal ``G^d |xi|^2``.  The
    minimal grid here is ``G >= 4m+1`` so that discrete L1 norms of the
    gradient track continuous ones.
    """

    def __init__(self, m: int, G: int, d: int = 2, workers: int | None = None):
        if G < 4 * m + 1:
            raise ParameterError(f"gradient grid needs G >= 4m+1 = {4 * m + 1}, got {G}")
        self.m, self.G, self.d = int(m), int(G), int(d)
        self.workers = workers
        k = np.arange(-m, m + 1)
        self._k = [k.reshape([-1 if a == j else 1 for a in range(d)]) for j in range(d)]
        self.diag = float(G) ** d * sum(kj.astype(float) ** 2 for kj in self._k)
        self._idx = np.arange(-m, m + 1) % G
        self._half = self._idx[m:]  # last-axis indices for xi_last >= 0

    @property
    def shape_out(self) -> tuple:
        return (self.d,) + (self.G,) * self.d

    def _synth(self, c: np.ndarray) -> np.ndarray:
        G, m, d = self.G, self.m, self.d
        spec = np.zeros((G,) * (d - 1) + (G // 2 + 1,), dtype=complex)
        spec[np.ix_(*([self._idx] * (d - 1) + [self._half]))] = c[..., m:]
        return sfft.irfftn(spec, s=(G,) * d, norm="forward", workers=self.workers)

    def _analyze(self, w: np.ndarray) -> np.ndarray:
        m = self.m
        R = sfft.rfftn(w, workers=self.workers)
        half = R[np.ix_(*([self._idx] * (self.d - 1) + [self._half]))]
        full = np.empty((2 * m + 1,) * self.d, dtype=complex)
        full[..., m:] = half
        full[..., :m] = np.conj(np.flip(half))[..., :m]
        return full

    def forward(self, c: np.ndarray) -> np.ndarray:
        return np.stack([self._synth(1j * kj * c) for kj in self._k])

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        out = np.zeros((2 * self.m + 1,) * self.d, dtype=complex)
        for kj, wj in zip(self._k, w):
            out += -1j * kj * self._analyze(wj)
        return out

    def normal(self, c: np.ndarray) -> np.ndarray:
        """``B^T B c`` through the closed-form diagonal."""
        return self.diag * c


def gradient_grid_operator(m: int, G: int, d: int = 2) -> GradientGridOperator:
    return GradientGridOperator(m, G, d)


def bv_objective(op: GradientGridOperator, c: np.ndarray) -> float:
    """Grid mean of the gradient magnitude (isotropic total variation)."""
    g = op.forward(c)
    return float(np.sqrt(np.sum(g * g, axis=0)).mean())


# ---------------------------------------------------------------------------
# ADMM


@dataclass(frozen=True)
class AdmmParams:
    """Solver settings; the grid has ``oversample * m + 1`` points per axis."""

    m: int = 32
    rho: float = 1.0
    max_iter: int = 5000
    eps_primal: float = 1e-7
    eps_dual: float = 1e-7
    oversample: int = 4

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2 or self.m % 2:
            raise ParameterError("reconstruction degree m must be an even integer >= 2")
        if self.rho <= 0 or self.max_iter < 1 or self.eps_primal <= 0 or self.eps_dual <= 0:
            raise ParameterError("rho, max_iter and tolerances must be positive")
        if self.oversample < 4:
            raise ParameterError("oversample factor must be >= 4")

    @property
    def G(self) -> int:
        return self.oversample * self.m + 1


@dataclass
class AdmmState:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    iter: int = 0
    primal_res: float = np.inf
    dual_res: float = np.inf


@dataclass
class ConvergenceReport:
    iterations: int
    final_objective: float
    primal_res: float
    dual_res: float
    converged: bool
    wall_time_ms: float
    best_iteration: int = 0
    rho: float = 1.0
    m: int = 0
    G: int = 0
    objective_history: list = field(default_factory=list, repr=False)
    best_history: list = field(default_factory=list, repr=False)
    primal_history: list = field(default_factory=list, repr=False)
    dual_history: list = field(default_factory=list, repr=False)

    def to_dict(self, history: bool = False) -> dict:
        d = asdict(self)
        if not history:
            for key in ("objective_history", "best_history", "primal_history", "dual_history"):
                d.pop(key)
        return d

    def to_json(self, path, history: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(history), fh, indent=2)
            fh.write("\n")


def _group_shrink(v: np.ndarray, t: float) -> np.ndarray:
    """Shrink each gradient vector (axis 0) toward zero by ``t``; ties map to zero."""
    mag = np.sqrt(np.sum(v * v, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > t, 1.0 - t / mag, 0.0)
    return v * factor


def bv_min_admm(meas: Measurements, params: AdmmParams = AdmmParams(), callback=None):
    """Minimize the grid total variation subject to the measured coefficients.

    Sampled coefficients (and their conjugate mirrors for real data) are
    pinned and never updated, so every iterate is feasible.  The split is
    ``min sum_p |z_p|`` s.t. ``Bx = z``:

    * x-update: free coefficients solve the normal equations of
      ``(rho/2)||Bx - z + u||^2``, which are diagonal;
    * z-update: isotropic group soft-thresholding of ``Bx + u`` at ``1/rho``;
    * u-update: ``u += Bx - z``.

    Data are divided by ``max|value|`` before iterating and the result is
    scaled back, so the iteration does not depend on the overall amplitude.

    Returns
    -------
    poly : TrigPolynomial
        Best (lowest objective) iterate, degree ``params.m``.
    report : ConvergenceReport
    """
    t0 = time.perf_counter()
    m, G = params.m, params.G
    if 2 * meas.max_degree > m:
        raise ParameterError(f"degree m={m} must be at least twice the largest measured degree {meas.max_degree}")
    d = meas.dim
    b_block, pin = _pin_into_block(meas, m)
    scale = float(np.abs(meas.values).max())
    if scale == 0.0:
        poly = TrigPolynomial.zeros(m, d, real=meas.real)
        report = ConvergenceReport(0, 0.0, 0.0, 0.0, True, (time.perf_counter() - t0) * 1e3,
                                   rho=params.rho, m=m, G=G)
        return poly, report
    if not meas.real:
        raise ParameterError("the ADMM solver reconstructs real-valued functions only")

    op = GradientGridOperator(m, G, d)
    free = ~pin
    diag = op.diag
    solvable = free & (diag > 0)
    inv_diag = np.zeros_like(diag)
    inv_diag[solvable] = 1.0 / diag[solvable]

    x = np.where(pin, b_block / scale, 0.0)
    Bx = op.forward(x)
    z = Bx.copy()
    u = np.zeros_like(z)
    rho = params.rho
    thresh = 1.0 / rho
    state = AdmmState(x, z, u)

    best_obj = np.inf
    best_x = x.copy()
    best_it = 0
    obj_hist, best_hist, pr_hist, du_hist = [], [], [], []
    converged = False
    for it in range(1, params.max_iter + 1):
        rhs = op.adjoint(z - u)
        x = np.where(solvable, rhs * inv_diag, x)
        Bx = op.forward(x)
        z_old = z
        z = _group_shrink(Bx + u, thresh)
        r = Bx - z
        u = u + r

        obj = float(np.sqrt(np.sum(Bx * Bx, axis=0)).mean())
        if obj < best_obj:
            best_obj, best_x, best_it = obj, x, it
        # relative residuals; the dual one is measured in z-space because
        # [B^T u] on free coefficients vanishes at the optimum
        nr = float(np.linalg.norm(r))
        ns = float(np.linalg.norm(z - z_old))
        pr = nr / max(float(np.linalg.norm(Bx)), float(np.linalg.norm(z)), 1e-300) if nr else 0.0
        du = ns / max(float(np.linalg.norm(u)), 1e-300) if ns else 0.0
        obj_hist.append(obj)
        best_hist.append(best_obj)
        pr_hist.append(pr)
        du_hist.append(du)
        state.x, state.z, state.u, state.iter, state.primal_res, state.dual_res = x, z, u, it, pr, du
        if callback is not None:
            callback(state)
        if pr <= params.eps_primal and du <= params.eps_dual:
            converged = True
            break

    poly = TrigPolynomial(best_x * scale, real=True)
    # pinned entries are copied verbatim so they match the data bit-for-bit
    poly = _repin(poly, b_block, pin)
    report = ConvergenceReport(
        iterations=state.iter,
        final_objective=best_obj * scale,
        primal_res=state.primal_res,
        dual_res=state.dual_res,
        converged=converged,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        best_iteration=best_it,
        rho=rho,
        m=m,
        G=G,
        objective_history=[o * scale for o in obj_hist],
        best_history=[o * scale for o in best_hist],
        primal_history=pr_hist,
        dual_history=du_hist,
    )
    return poly, report


def _repin(poly: TrigPolynomial, b_block: np.ndarray, pin: np.ndarray) -> TrigPolynomial:
    c = np.array(poly.coeffs)
    c[pin] = b_block[pin]
    return TrigPolynomial(c, real=poly.real)


def pinned_vdp_comparator(f, meas: Measurements, m: int) -> TrigPolynomial:
    """``V_m f`` with the sampled coefficients copied in; feasible when ``2*max|xi_i| <= m``."""
    from .core import coefficient_block

    c = coefficient_block(f, m, meas.dim) * vdp_weights(m, meas.dim)
    b_block, pin = _pin_into_block(meas, m)
    c[pin] = b_block[pin]
    return TrigPolynomial(c, real=meas.real)


def reconstruct(method: str, meas: Measurements, m: int, params: AdmmParams | None = None):
    """Dispatch on ``method`` in ``{"partial", "vdp", "bvmin"}``; returns ``(poly, report_or_None)``."""
    if method == "partial":
        return partial_sum_recon(meas, m), None
    if method == "vdp":
        return vdp_recon(meas, m), None
    if method == "bvmin":
        params = params or AdmmParams(m=m)
        return bv_min_admm(meas, params)
    raise ParameterError(f"unknown method {method!r}")
