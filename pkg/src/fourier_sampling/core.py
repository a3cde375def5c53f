"""Trigonometric polynomials on the d-torus.

Coefficients of a degree-``m`` polynomial are stored as a dense complex array
of shape ``(2m+1,) * d``; array index ``j`` along an axis holds frequency
``j - m``.  Grid fields sample functions on ``{2*pi*j/G : 0 <= j < G}^d``.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy import fft as sfft

HERMITIAN_RTOL = 1e-12


class ParameterError(ValueError):
    """Raised for out-of-range or inconsistent parameters."""


class AliasingError(ParameterError):
    """Raised when a grid is too coarse to carry a polynomial without aliasing."""


# ---------------------------------------------------------------------------
# Frequencies


def linf(xi) -> np.ndarray:
    """Return ``|xi|_inf`` for a frequency or a stack of frequencies."""
    xi = np.asarray(xi)
    if xi.ndim == 1:
        return np.abs(xi).max() if xi.size else 0
    return np.abs(xi).max(axis=-1)


def block_frequencies(m: int, d: int) -> np.ndarray:
    """All ``xi`` with ``|xi|_inf <= m``, lexicographically sorted, shape ``((2m+1)^d, d)``."""
    axis = np.arange(-m, m + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1).astype(np.int64)


def sort_lex(freqs: np.ndarray) -> np.ndarray:
    """Sort integer frequency rows lexicographically (first coordinate most significant)."""
    freqs = np.asarray(freqs, dtype=np.int64).reshape(len(freqs), -1)
    if len(freqs) == 0:
        return freqs
    order = np.lexsort(freqs.T[::-1])
    return freqs[order]


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TrigPolynomial:
    """Trigonometric polynomial of coordinate-wise degree ``m`` in ``d`` variables.

    Parameters
    ----------
    coeffs : numpy.ndarray
        Complex array of shape ``(2m+1,) * d``; entry ``j`` holds frequency ``j - m``.
    real : bool
        If True, Hermitian symmetry ``c(-xi) = conj(c(xi))`` is enforced on
        construction (violations up to round-off are projected away, larger
        ones raise).
    """

    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim < 1:
            raise ParameterError("coefficient array must have at least one axis")
        n = c.shape[0]
        if n % 2 != 1 or any(s != n for s in c.shape):
            raise ParameterError(f"coefficient block must be (2m+1)^d, got shape {c.shape}")
        if self.real:
            mirror = np.conj(np.flip(c))
            scale = max(np.abs(c).max(), 1.0) if c.size else 1.0
            if np.abs(c - mirror).max() > HERMITIAN_RTOL * scale:
                raise ParameterError("coefficients are not Hermitian-symmetric")
            c = 0.5 * (c + mirror)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    @classmethod
    def zeros(cls, m: int, d: int, real: bool = True) -> "TrigPolynomial":
        return cls(np.zeros((2 * m + 1,) * d, dtype=complex), real=real)

    @classmethod
    def from_function(cls, f, m: int, d: int, real: bool = False) -> "TrigPolynomial":
        """Build the degree-``m`` truncation of a coefficient accessor ``f``."""
        return cls(coefficient_block(f, m, d), real=real)

    def coefficient(self, xi) -> complex:
        xi = np.asarray(xi)
        if linf(xi) > self.degree:
            return 0j
        return complex(self.coeffs[tuple(xi + self.degree)])

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        """Coefficient accessor: ``xi`` is ``(n, d)``; zero outside the block."""
        xi = np.atleast_2d(np.asarray(xi, dtype=np.int64))
        out = np.zeros(len(xi), dtype=complex)
        inside = linf(xi) <= self.degree
        idx = (xi[inside] + self.degree).T
        out[inside] = self.coeffs[tuple(idx)]
        return out

    def resize(self, m: int) -> "TrigPolynomial":
        """Zero-pad or truncate to degree ``m``."""
        return TrigPolynomial(_resize_block(self.coeffs, m), real=self.real)

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        m = max(self.degree, other.degree)
        return TrigPolynomial(
            _resize_block(self.coeffs, m) + _resize_block(other.coeffs, m),
            real=self.real and other.real,
        )

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return self + other.scale(-1.0)

    def scale(self, t) -> "TrigPolynomial":
        real = self.real and np.isreal(t)
        return TrigPolynomial(self.coeffs * t, real=real)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        c = self.coeffs
        scale = max(np.abs(c).max(), 1.0)
        return bool(np.abs(c - np.conj(np.flip(c))).max() <= rtol * scale)


@dataclass(frozen=True)
class GridField:
    """Samples on the uniform grid ``{2*pi*j/G}^d``; ``values`` has shape ``(G,) * d``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim < 1 or v.shape[0] < 1 or any(s != v.shape[0] for s in v.shape):
            raise ParameterError(f"grid values must have shape (G,)*d, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def points_per_axis(self) -> int:
        return self.values.shape[0]

    def nodes(self) -> list[np.ndarray]:
        """Per-axis node coordinates."""
        G = self.points_per_axis
        return [2 * np.pi * np.arange(G) / G] * self.dim

    def __sub__(self, other: "GridField") -> "GridField":
        check_aligned(self, other)
        return GridField(self.values - other.values)


def check_aligned(a: GridField, b: GridField) -> None:
    if a.values.shape != b.values.shape:
        raise ParameterError(f"grid mismatch: {a.values.shape} vs {b.values.shape}")


@dataclass(frozen=True)
class BandDecomposition:
    """Dyadic pieces ``f_0, ..., f_{r-1}``; piece ``k`` has degree ``2^(k+1)``."""

    pieces: tuple = field(default_factory=tuple)

    @property
    def r(self) -> int:
        return len(self.pieces)

    def total(self) -> TrigPolynomial:
        out = self.pieces[0]
        for p in self.pieces[1:]:
            out = out + p
        return out


CoefficientSource = Union[TrigPolynomial, Callable[[np.ndarray], np.ndarray]]


def _resize_block(c: np.ndarray, m: int) -> np.ndarray:
    m0 = (c.shape[0] - 1) // 2
    if m == m0:
        return c.copy()
    if m < m0:
        sl = tuple(slice(m0 - m, m0 + m + 1) for _ in range(c.ndim))
        return c[sl].copy()
    out = np.zeros((2 * m + 1,) * c.ndim, dtype=complex)
    sl = tuple(slice(m - m0, m + m0 + 1) for _ in range(c.ndim))
    out[sl] = c
    return out


def coefficient_block(f: CoefficientSource, m: int, d: int | None = None) -> np.ndarray:
    """Coefficients of ``f`` for ``|xi|_inf <= m`` as a dense block."""
    if isinstance(f, TrigPolynomial):
        if d is not None and d != f.dim:
            raise ParameterError(f"dimension mismatch: {f.dim} vs {d}")
        return _resize_block(f.coeffs, m)
    if d is None:
        raise ParameterError("dimension d is required for a coefficient callable")
    xi = block_frequencies(m, d)
    vals = np.asarray(f(xi), dtype=complex)
    return vals.reshape((2 * m + 1,) * d)


def _is_real_source(f) -> bool:
    if isinstance(f, TrigPolynomial):
        return f.real
    return bool(getattr(f, "real_valued", False))


# ---------------------------------------------------------------------------
# de la Vallee Poussin sums and dyadic bands


def _check_vdp_degree(m) -> int:
    if int(m) != m or m < 2 or int(m) % 2:
        raise ParameterError(f"de la Vallee Poussin degree must be an even integer >= 2, got {m}")
    return int(m)


def vdp_multiplier(m: int, k):
    """One-dimensional de la Vallee Poussin multiplier.

    Equal to 1 for ``|k| <= m/2``, ``2(1 - |k|/(m+1))`` for ``m/2 < |k| <= m``
    and 0 beyond.  Vectorised over ``k``.
    """
    m = _check_vdp_degree(m)
    a = np.abs(np.asarray(k))
    out = np.where(a <= m // 2, 1.0, np.where(a <= m, 2.0 * (1.0 - a / (m + 1.0)), 0.0))
    return float(out) if out.ndim == 0 else out


def vdp_weights(m: int, d: int, degree: int | None = None) -> np.ndarray:
    """Tensor-product multiplier on the block ``|xi|_inf <= degree`` (default ``m``)."""
    degree = m if degree is None else degree
    nu = vdp_multiplier(m, np.arange(-degree, degree + 1))
    w = nu
    for _ in range(d - 1):
        w = np.multiply.outer(w, nu)
    return w


def vdp_sum(f: CoefficientSource, m: int, d: int | None = None) -> TrigPolynomial:
    """De la Vallee Poussin sum ``V_m f`` as a degree-``m`` polynomial."""
    m = _check_vdp_degree(m)
    c = coefficient_block(f, m, d)
    return TrigPolynomial(c * vdp_weights(m, c.ndim), real=_is_real_source(f))


def band_decompose(f: CoefficientSource, r: int, d: int | None = None) -> BandDecomposition:
    """Split ``V_{2^r} f`` into ``f_0 = V_2 f`` and ``f_k = V_{2^(k+1)} f - V_{2^k} f``.

    Piece ``k`` is returned at degree ``2^(k+1)``.  Its coefficients vanish
    identically outside ``2^(k-1) < |xi|_inf <= 2^(k+1)``: both multipliers
    are exactly 1 on the inner block, so the difference is an exact zero.
    """
    if int(r) != r or r < 1:
        raise ParameterError(f"number of bands must be a positive integer, got {r}")
    top = 2**r
    c = coefficient_block(f, top, d)
    d = c.ndim
    real = _is_real_source(f)
    pieces = []
    prev = None
    for k in range(r):
        deg = 2 ** (k + 1)
        cur = _resize_block(c, deg) * vdp_weights(deg, d)
        if prev is None:
            piece = cur
        else:
            piece = cur - _resize_block(prev, deg)
        pieces.append(TrigPolynomial(piece, real=real))
        prev = cur
    return BandDecomposition(tuple(pieces))


def band_mask(k: int, m: int, d: int) -> np.ndarray:
    """Boolean mask of ``B_k = {floor(2^(k-1)) <= |xi|_inf <= 2^(k+1)}`` on the degree-``m`` block.

    For ``k = 0`` the mask is ``|xi|_inf <= 2``.
    """
    a = np.abs(block_frequencies(m, d)).max(axis=1).reshape((2 * m + 1,) * d)
    lo = 0 if k == 0 else 2 ** (k - 1)
    return (a >= lo) & (a <= 2 ** (k + 1))


# ---------------------------------------------------------------------------
# Grid synthesis / analysis


def _spread(c: np.ndarray, G: int) -> np.ndarray:
    """Place a coefficient block into a length-G periodic spectrum (index xi mod G)."""
    m = (c.shape[0] - 1) // 2
    d = c.ndim
    spec = np.zeros((G,) * d, dtype=complex)
    idx = np.arange(-m, m + 1) % G
    spec[np.ix_(*([idx] * d))] = c
    return spec


def _gather(spec: np.ndarray, m: int) -> np.ndarray:
    G = spec.shape[0]
    idx = np.arange(-m, m + 1) % G
    return spec[np.ix_(*([idx] * spec.ndim))]


def synthesize(c: np.ndarray, G: int, workers: int | None = None) -> np.ndarray:
    """Values ``sum_xi c(xi) exp(i xi.x)`` on the G-point grid (no size check)."""
    spec = _spread(c, G)
    return sfft.ifftn(spec, norm="forward", workers=workers)


def analyze(values: np.ndarray, m: int, workers: int | None = None) -> np.ndarray:
    """Discrete projection of grid values onto the frequencies ``|xi|_inf <= m``."""
    spec = sfft.fftn(values, norm="forward", workers=workers)
    return _gather(spec, m)


def evaluate_on_grid(p: TrigPolynomial, G: int) -> GridField:
    """Evaluate ``p`` on the uniform ``G^d`` grid.

    Raises
    ------
    AliasingError
        If ``G < 2m + 1``.
    """
    if G < 2 * p.degree + 1:
        raise AliasingError(f"grid of {G} points cannot carry degree {p.degree} (need {2 * p.degree + 1})")
    vals = synthesize(p.coeffs, G)
    if p.real:
        vals = vals.real
    return GridField(vals)


def project_from_grid(g: GridField, m: int, real: bool = False) -> TrigPolynomial:
    """Recover degree-``m`` coefficients from grid samples (exact for ``G >= 2m+1``)."""
    if g.points_per_axis < 2 * m + 1:
        raise AliasingError(f"grid of {g.points_per_axis} points cannot resolve degree {m}")
    return TrigPolynomial(analyze(g.values, m), real=real)


def gradient(p: TrigPolynomial) -> tuple:
    """Exact gradient; component ``j`` has coefficients ``i xi_j c(xi)``."""
    m, d = p.degree, p.dim
    k = np.arange(-m, m + 1)
    out = []
    for j in range(d):
        shape = [1] * d
        shape[j] = -1
        out.append(TrigPolynomial(1j * k.reshape(shape) * p.coeffs, real=p.real))
    return tuple(out)


# ---------------------------------------------------------------------------
# Norms


def lp_norm_values(v: np.ndarray, p: float) -> float:
    """``(mean |v|^p)^(1/p)``; ``p = inf`` gives ``max |v|``."""
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    a = np.abs(np.asarray(v))
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.mean())
    if p == 2:
        return float(np.sqrt(np.mean(a * a)))
    return float(np.mean(a**p) ** (1.0 / p))


def lp_norm_grid(g: GridField, p: float) -> float:
    """L_p norm of grid values under the normalized counting measure."""
    return lp_norm_values(g.values, p)


def coefficient_l2(p: TrigPolynomial) -> float:
    return float(np.sqrt(np.sum(np.abs(p.coeffs) ** 2)))


def gradient_magnitude(p: TrigPolynomial, G: int) -> GridField:
    """Pointwise Euclidean gradient magnitude on the G-point grid."""
    comps = [evaluate_on_grid(q, G).values for q in gradient(p)]
    return GridField(np.sqrt(sum(np.abs(c) ** 2 for c in comps)))


def bv_seminorm(p: TrigPolynomial, G: int | None = None) -> float:
    """Grid approximation of ``||grad p||_{L_1}`` (default grid ``4m+1``)."""
    G = 4 * p.degree + 1 if G is None else G
    return lp_norm_grid(gradient_magnitude(p, G), 1)


def besov_proxy(f: CoefficientSource, s: float, k_max: int, d: int | None = None, oversample: int = 4) -> float:
    """Upper proxy for the ``B^s_inf(L_1)`` semi-norm.

    Returns ``max_{0<=k<=k_max} 2^(ks) ||f - V_{2^(k+1)} f||_{L_1}`` with the
    norm evaluated on an oversampled grid.  A callable ``f`` is truncated at
    degree ``2^(k_max+1)``; a polynomial of higher degree is used in full.
    The value carries an unknown absolute constant and is meant for
    comparisons only.
    """
    if s <= 0:
        raise ParameterError("smoothness s must be positive")
    M = 2 ** (k_max + 1)
    if isinstance(f, TrigPolynomial):
        M = max(M, f.degree)
    c = coefficient_block(f, M, d)
    d = c.ndim
    G = oversample * M + 1
    best = 0.0
    for k in range(k_max + 1):
        deg = 2 ** (k + 1)
        w = vdp_weights(deg, d, degree=M)
        resid = synthesize(c * (1.0 - w), G)
        best = max(best, 2.0 ** (k * s) * lp_norm_values(resid, 1))
    return best


# ---------------------------------------------------------------------------
# Dumps


def write_coefficients_csv(p: TrigPolynomial, path) -> None:
    """Write ``xi_1,...,xi_d,re,im`` rows in lexicographic order with ``%.17g``."""
    xi = block_frequencies(p.degree, p.dim)
    vals = p.coeffs.ravel()
    write_frequency_values_csv(xi, vals, path)


def write_frequency_values_csv(xi: np.ndarray, vals: np.ndarray, path) -> None:
    xi = np.asarray(xi, dtype=np.int64)
    order = np.lexsort(xi.T[::-1]) if len(xi) else np.arange(0)
    d = xi.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join([f"xi_{j + 1}" for j in range(d)] + ["re", "im"]) + "\n")
        for i in order:
            row = [str(int(v)) for v in xi[i]] + ["%.17g" % vals[i].real, "%.17g" % vals[i].imag]
            fh.write(",".join(row) + "\n")


def read_frequency_values_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a coefficient/measurement CSV; returns ``(xi, values)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 3 or header[-2:] != ["re", "im"]:
            raise ValueError(f"{path}:1: bad header {header!r}")
        d = len(header) - 2
        xi, vals = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise ValueError(f"{path}:{lineno}: expected {d + 2} fields, got {len(row)}")
            try:
                xi.append([int(v) for v in row[:d]])
                vals.append(complex(float(row[d]), float(row[d + 1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return np.array(xi, dtype=np.int64).reshape(-1, d), np.array(vals, dtype=complex)


def read_coefficients_csv(path, real: bool | None = None) -> TrigPolynomial:
    xi, vals = read_frequency_values_csv(path)
    d = xi.shape[1]
    m = int(np.abs(xi).max()) if len(xi) else 0
    c = np.zeros((2 * m + 1,) * d, dtype=complex)
    c[tuple((xi + m).T)] = vals
    if real is None:
        real = bool(np.allclose(c, np.conj(np.flip(c)), rtol=0, atol=HERMITIAN_RTOL * max(1.0, np.abs(c).max())))
    return TrigPolynomial(c, real=real)


def write_pgm(g: GridField, path, vmin: float | None = None, vmax: float | None = None) -> dict:
    """Write a 2-D real field as 16-bit binary PGM plus a ``.json`` sidecar.

    Image rows follow the second grid axis (``y``), columns the first (``x``),
    so the picture shows ``x`` horizontally.  Values are mapped linearly from
    ``[vmin, vmax]`` onto ``[0, 65535]``.
    """
    v = np.real(g.values)
    if v.ndim != 2:
        raise ParameterError("PGM output needs a 2-D field")
    vmin = float(v.min()) if vmin is None else float(vmin)
    vmax = float(v.max()) if vmax is None else float(vmax)
    span = vmax - vmin if vmax > vmin else 1.0
    q = np.clip(np.rint((v - vmin) / span * 65535), 0, 65535).astype(">u2")
    img = q.T
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n65535\n" % (img.shape[1], img.shape[0]))
        fh.write(img.tobytes(order="C"))
    meta = {"vmin": vmin, "vmax": vmax, "width": img.shape[1], "height": img.shape[0],
            "layout": "rows=y, cols=x, row-major, big-endian uint16"}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta


def read_pgm(path) -> tuple[np.ndarray, dict]:
    """Read a PGM written by :func:`write_pgm`; returns raw uint16 image and sidecar."""
    path = Path(path)
    data = path.read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    img = np.frombuffer(parts[3], dtype=">u2").reshape(h, w)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return img, meta


def write_grid_csv(g: GridField, path) -> None:
    """Write ``j_1,...,j_d,re,im`` for every grid point in C order."""
    d = g.dim
    with open(path, "w") as fh:
        fh.write(",".join([f"j_{k + 1}" for k in range(d)] + ["re", "im"]) + "\n")
        for idx in itertools.product(range(g.points_per_axis), repeat=d):
            v = complex(g.values[idx])
            fh.write(",".join([str(i) for i in idx] + ["%.17g" % v.real, "%.17g" % v.imag]) + "\n")
