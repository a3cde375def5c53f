"""Finite abelian groups, greedy dissociated sets and modified Riesz products.

Groups ``Z/N_1 x ... x Z/N_r`` are written additively.  Elements are stored
either as integer tuples or as boolean masks of shape ``moduli``; the
canonical order is lexicographic on tuples with entries in ``[0, N_j)``.
Characters are indexed by the same tuples, ``chi_a(g) = exp(2 pi i sum a_j g_j / N_j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .core import (ParameterError, TrigPolynomial, evaluate_on_grid, linf, lp_norm_values,
                   write_coefficients_csv, write_frequency_values_csv)

MAX_GROUP_SIZE = 2**16
UNIMODULAR_TOL = 1e-12


@dataclass(frozen=True)
class GroupSpec:
    moduli: tuple

    def __post_init__(self):
        mods = tuple(int(n) for n in self.moduli)
        if not mods or any(n < 2 for n in mods):
            raise ParameterError("group moduli must be integers >= 2")
        object.__setattr__(self, "moduli", mods)

    @property
    def size(self) -> int:
        return math.prod(self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def reduce(self, g) -> np.ndarray:
        return np.mod(np.asarray(g, dtype=np.int64), self.moduli)

    def index(self, g) -> np.ndarray:
        """Canonical linear index of element(s) ``g`` (shape ``(..., r)``)."""
        g = self.reduce(g)
        return np.ravel_multi_index(tuple(np.moveaxis(g, -1, 0)), self.moduli)

    def element(self, idx) -> np.ndarray:
        return np.stack(np.unravel_index(idx, self.moduli), axis=-1)

    def elements(self) -> np.ndarray:
        return self.element(np.arange(self.size))

    def mask(self, subset) -> np.ndarray:
        m = np.zeros(self.moduli, dtype=bool)
        subset = np.asarray(subset, dtype=np.int64).reshape(-1, self.rank)
        m[tuple(self.reduce(subset).T)] = True
        return m

    def shift(self, mask: np.ndarray, g) -> np.ndarray:
        """``mask + g``: the set translated by ``g``."""
        return np.roll(mask, tuple(int(x) for x in g), axis=tuple(range(self.rank)))

    def character_table(self, a) -> np.ndarray:
        """``chi_a`` evaluated on the whole group, shape ``moduli``."""
        a = self.reduce(a)
        phase = sum(
            np.arange(n).reshape([-1 if i == j else 1 for i in range(self.rank)]) * a[j] / n
            for j, n in enumerate(self.moduli)
        )
        return np.exp(2j * np.pi * phase)


@dataclass(frozen=True)
class CharacterIndex:
    a: tuple

    def check(self, G: GroupSpec) -> None:
        if len(self.a) != G.rank or any(not 0 <= x < n for x, n in zip(self.a, G.moduli)):
            raise ParameterError(f"character index {self.a} out of range for {G.moduli}")


def character_eval(G: GroupSpec, a, g) -> complex:
    """``chi_a(g)``; ``a`` must satisfy ``0 <= a_j < N_j``."""
    a = a if isinstance(a, CharacterIndex) else CharacterIndex(tuple(int(x) for x in np.atleast_1d(a)))
    a.check(G)
    g = G.reduce(np.atleast_1d(g))
    # integer phase first keeps the value exact modulo rounding of one exp call
    num = sum((ai * int(gi)) % n * (G.size // n) for ai, gi, n in zip(a.a, g, G.moduli)) % G.size
    return complex(np.exp(2j * np.pi * num / G.size))


# ---------------------------------------------------------------------------
# Greedy lacunary-set construction


@dataclass
class GreedyResult:
    S: list
    h: tuple
    Lambda_sizes: list
    delta: float
    group: GroupSpec
    E_sizes: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.S)

    def size_bound(self, Lambda_size: int | None = None) -> float:
        return greedy_size_bound(self.group.size, Lambda_size or self.Lambda_sizes[0], self.delta)

    def subset_sums(self) -> np.ndarray:
        """All ``2^n`` sums ``sum_{g in T} g`` (reduced), subsets ordered by bitmask."""
        r = self.group.rank
        sums = np.zeros((1, r), dtype=np.int64)
        for g in self.S:
            sums = np.concatenate([sums, sums + np.asarray(g)])
        return self.group.reduce(sums)


def greedy_size_bound(group_size: int, lambda_size: int, delta: float) -> float:
    """``(1/2) min{delta log|G| / log(|G|/|L|), (|G|^(1-delta)/16)^(2/3)}`` (infinite term dropped if L = G)."""
    second = (group_size ** (1 - delta) / 16.0) ** (2.0 / 3.0)
    if lambda_size >= group_size:
        return 0.5 * second
    first = delta * math.log(group_size) / math.log(group_size / lambda_size)
    return 0.5 * min(first, second)


def intersection_counts(mask: np.ndarray) -> np.ndarray:
    """``|L ∩ (L - g)|`` for every ``g`` at once, via FFT autocorrelation."""
    F = sfft.fftn(mask.astype(float))
    return np.rint(sfft.ifftn(F * np.conj(F)).real).astype(np.int64)


def intersection_counts_direct(G: GroupSpec, mask: np.ndarray) -> np.ndarray:
    """Reference implementation of :func:`intersection_counts` by explicit translation."""
    out = np.empty(G.moduli, dtype=np.int64)
    for g in G.elements():
        out[tuple(g)] = np.count_nonzero(mask & G.shift(mask, -g))
    return out


def greedy_select(G: GroupSpec, Lambda, delta: float = 0.5, max_size: int = MAX_GROUP_SIZE) -> GreedyResult:
    """Build ``S`` and ``h`` with every ``h + sum_T g`` in ``Lambda`` and distinct subset sums.

    Parameters
    ----------
    Lambda : array_like
        Boolean mask of shape ``G.moduli`` or an ``(k, r)`` array of elements.
    delta : float
        Only enters the reported size bound.
    """
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if G.size > max_size:
        raise ParameterError(f"group of size {G.size} exceeds the limit {max_size}")
    lam = np.asarray(Lambda)
    lam = lam.astype(bool) if lam.shape == G.moduli and lam.dtype == bool else G.mask(lam)
    if lam.sum() < 2:
        raise ParameterError("Lambda needs at least two elements")

    E = np.zeros(G.moduli, dtype=bool)
    E[(0,) * G.rank] = True
    S, sizes, e_sizes = [], [int(lam.sum())], [1]
    while not E.all():
        counts = np.where(E, -1, intersection_counts(lam))
        best = int(np.argmax(counts))  # first maximum = smallest canonical index
        if counts.flat[best] <= 0:
            break
        g = tuple(int(x) for x in G.element(best))
        lam = lam & G.shift(lam, [-x for x in g])
        E = E | G.shift(E, g) | G.shift(E, [-x for x in g])
        S.append(g)
        sizes.append(int(lam.sum()))
        e_sizes.append(int(E.sum()))
    h = tuple(int(x) for x in G.element(int(np.flatnonzero(lam)[0])))
    return GreedyResult(S, h, sizes, float(delta), G, e_sizes)


# ---------------------------------------------------------------------------
# Riesz products


@dataclass
class WitnessFunction:
    """Function on ``G`` with its character coefficients (``coeffs[a]`` multiplies ``chi_a``)."""

    values: np.ndarray
    coeffs: np.ndarray
    n: int
    phases: np.ndarray
    group: GroupSpec
    h: tuple = ()
    S: list = field(default_factory=list)

    def norm(self, p: float) -> float:
        return lp_norm_values(self.values, p)

    def support(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coeffs) > 0.5)


def _check_phases(phases, n: int) -> np.ndarray:
    z = np.asarray(phases, dtype=complex).ravel()
    if len(z) != n:
        raise ParameterError(f"need {n} phases, got {len(z)}")
    if np.any(np.abs(np.abs(z) - 1) > UNIMODULAR_TOL):
        raise ParameterError("phases must be unimodular")
    return z


def riesz_product(G: GroupSpec, S, h, phases=None) -> WitnessFunction:
    """``chi_h * prod_j (1 + z_j chi_{s_j})`` as values on ``G`` and character coefficients.

    Coefficients are obtained by expanding the product one factor at a
    time (a translate-and-add per factor), not by a transform.
    """
    S = [tuple(int(x) for x in s) for s in S]
    z = _check_phases(np.ones(len(S)) if phases is None else phases, len(S))
    values = G.character_table(h)
    coeffs = np.zeros(G.moduli, dtype=complex)
    coeffs[tuple(G.reduce(h))] = 1.0
    for s, zj in zip(S, z):
        values = values * (1 + zj * G.character_table(s))
        coeffs = coeffs + zj * G.shift(coeffs, s)
    return WitnessFunction(values, coeffs, len(S), z, G, tuple(int(x) for x in G.reduce(h)), S)


def transform_coefficients(w: WitnessFunction) -> np.ndarray:
    """Character coefficients recomputed from the values: ``fft(values) / |G|``."""
    return sfft.fftn(w.values) / w.group.size


@dataclass
class PhaseSearchResult:
    phases: np.ndarray
    ell1: float
    mean_ell1: float
    target: float
    met: bool
    trials: int
    ell1_samples: np.ndarray = field(repr=False, default=None)


def phase_search(G: GroupSpec, S, h=None, trials: int = 10_000, seed: int = 0, batch: int = 256) -> PhaseSearchResult:
    """Random-restart search for phases with small ``||rho||_{l1}``.

    Phases are i.i.d. uniform on the circle; all draws come from one
    generator so results depend only on ``seed`` and ``trials``.  ``met``
    tells whether the best trial reaches the average value ``(4/pi)^n``.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    n = len(S)
    target = (4.0 / math.pi) ** n
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(trials, n))
    z_all = np.exp(1j * theta)
    tables = np.stack([G.character_table(s).ravel() for s in S]) if n else np.zeros((0, G.size))
    ell1 = np.empty(trials)
    for start in range(0, trials, batch):
        zb = z_all[start:start + batch]
        mod = np.ones((len(zb), G.size))
        for j in range(n):
            mod *= np.abs(1 + zb[:, j:j + 1] * tables[j])
        ell1[start:start + batch] = mod.mean(axis=1)  # |chi_h| = 1 drops out
    best = int(np.argmin(ell1))
    return PhaseSearchResult(z_all[best], float(ell1[best]), float(ell1.mean()), target,
                             bool(ell1[best] <= target), trials, ell1)


def witness_ratio(w, p: float) -> float:
    """``||w||_p / ||w||_1`` under the normalized counting measure."""
    if not 1 <= p <= 2:
        raise ParameterError("witness_ratio needs 1 <= p <= 2")
    v = w.values if hasattr(w, "values") else np.asarray(w)
    l1 = lp_norm_values(v, 1)
    if l1 == 0:
        raise ParameterError("zero function has no norm ratio")
    return lp_norm_values(v, p) / l1


def riesz_lower_bound(n: int, p: float) -> float:
    """``2^(n (1 - 1/p))``: lower bound for ``||rho||_p`` from ``||rho||_2^2 = 2^n`` and ``||rho||_inf <= 2^n``."""
    return 2.0 ** (n * (1 - 1 / p))


# ---------------------------------------------------------------------------
# Witness for sampled Fourier frequencies


@dataclass
class WitnessReport:
    k: int
    d: int
    group: tuple
    delta: float
    n: int
    n_sampled: int
    allowed_size: int
    size_bound: float
    ell1: float
    ell2_sq: float
    ratios: dict
    grid_ratios: dict
    phase_target: float
    phase_met: bool
    vanishing_residual: float
    Lambda_sizes: list

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ratios"] = {str(k): v for k, v in self.ratios.items()}
        d["grid_ratios"] = {str(k): v for k, v in self.grid_ratios.items()}
        return d


def _signed(a: np.ndarray, N: int) -> np.ndarray:
    return np.where(a >= N // 2, a - N, a)


def theorem2_witness(k: int, d: int, sampled, delta: float = 0.5, trials: int = 2000, seed: int = 0,
                     ps=(1.25, 1.5, 2.0), oversample: int = 4):
    """Polynomial of degree ``2^k`` vanishing at the sampled frequencies with a large ``L_p/L_1`` ratio.

    The frequencies ``|xi| <= 2^k`` outside the sample are identified with
    characters of ``(Z/2^(k+2))^d``; the greedy construction on that set and
    a Riesz product with searched phases give the coefficients.  Norms are
    reported both on the group (the ``2^(k+2)`` grid) and on a finer grid.

    Raises
    ------
    ParameterError
        If ``(2^k + 1)^d < 2 |sampled|``.
    """
    freqs = np.asarray(getattr(sampled, "freqs", sampled), dtype=np.int64).reshape(-1, d)
    if (2**k + 1) ** d < 2 * len(freqs):
        raise ParameterError(f"balance condition (2^k+1)^d >= 2n fails: {(2**k + 1) ** d} < {2 * len(freqs)}")
    N = 2 ** (k + 2)
    G = GroupSpec((N,) * d)
    low = np.zeros(G.moduli, dtype=bool)
    idx = np.arange(-(2**k), 2**k + 1) % N
    low[np.ix_(*([idx] * d))] = True
    inside = freqs[linf(freqs) <= 2**k] if len(freqs) else freqs
    allowed = low & ~G.mask(inside) if len(inside) else low
    greedy = greedy_select(G, allowed, delta)
    search = phase_search(G, greedy.S, greedy.h, trials, seed)
    w = riesz_product(G, greedy.S, greedy.h, search.phases)

    l1 = w.norm(1)
    m = 2**k
    block = np.zeros((2 * m + 1,) * d, dtype=complex)
    sup = G.element(np.flatnonzero(np.abs(w.coeffs.ravel()) > 0.5))
    xi = _signed(sup, N)
    block[tuple((xi + m).T)] = w.coeffs[tuple(sup.T)] / l1
    poly = TrigPolynomial(block)

    fine = evaluate_on_grid(poly, max(oversample * m + 1, N)).values
    grid_l1 = lp_norm_values(fine, 1)
    report = WitnessReport(
        k=k, d=d, group=G.moduli, delta=delta, n=greedy.n, n_sampled=len(freqs),
        allowed_size=int(allowed.sum()), size_bound=greedy.size_bound(),
        ell1=1.0, ell2_sq=w.norm(2) ** 2 / l1**2,
        ratios={p: witness_ratio(w, p) for p in ps},
        grid_ratios={p: lp_norm_values(fine, p) / grid_l1 for p in ps},
        phase_target=search.target, phase_met=search.met,
        vanishing_residual=float(np.max(np.abs(poly(freqs)))) if len(freqs) else 0.0,
        Lambda_sizes=greedy.Lambda_sizes,
    )
    return poly, report


def write_witness(w: WitnessFunction, coeff_path, meta_path, delta: float | None = None,
                  ps=(1.25, 1.5, 2.0), extra: dict | None = None) -> dict:
    """Coefficient CSV (group indices as frequencies) and a JSON metadata file."""
    G = w.group
    rows = G.elements()
    write_frequency_values_csv(rows, w.coeffs.ravel(), coeff_path)
    meta = {
        "group": list(G.moduli),
        "delta": delta,
        "n": w.n,
        "S": [list(s) for s in w.S],
        "h": list(w.h),
        "phases_re": w.phases.real.tolist(),
        "phases_im": w.phases.imag.tolist(),
        "ell1": w.norm(1),
        "ell2_sq": w.norm(2) ** 2,
        "ratios": {str(p): witness_ratio(w, p) for p in ps},
        **(extra or {}),
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return meta


def write_witness_polynomial(poly: TrigPolynomial, report: WitnessReport, coeff_path, meta_path) -> None:
    write_coefficients_csv(poly, coeff_path)
    with open(meta_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")

