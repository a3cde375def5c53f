"""Frequency sampling designs: lowest block, hierarchical sub-sampling, uniform random.

Randomness comes from ``numpy.random.PCG64`` seeded through
``numpy.random.SeedSequence(seed, spawn_key=(stream,))``.  Stream ``k`` drives
the draw from band ``B_k``; stream ``TRIM_STREAM`` drives exact-count
trimming; the uniform scheme uses stream 0.  The rule is written into every
design file header.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ParameterError, block_frequencies, linf, sort_lex

TRIM_STREAM = 1000
RNG_DESCRIPTION = (
    "numpy.random.PCG64 via SeedSequence(seed, spawn_key=(stream,)); "
    f"stream=k for band B_k, stream={TRIM_STREAM} for count trimming, stream=0 for uniform draws; "
    "band draws reject from the bounding block below a quarter of the band, else choice over the free set"
)
SCHEMES = ("lowest_block", "hierarchical", "uniform_random")
SCHEME_ALIASES = {"lowest-block": "lowest_block", "uniform": "uniform_random", "uniform-random": "uniform_random"}


class DesignFileError(ValueError):
    """Malformed or invalid design file."""


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class SamplingDesign:
    """Duplicate-free, lexicographically sorted set of sampled frequencies.

    ``freqs`` has shape ``(n, d)``.  ``params`` records the scheme parameters
    that produced it and is written verbatim to the design file.
    """

    freqs: np.ndarray
    scheme: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        f = np.asarray(self.freqs, dtype=np.int64)
        if f.ndim != 2:
            raise ParameterError("freqs must be a 2-D array of shape (n, d)")
        f = sort_lex(f)
        if len(f) > 1 and np.any(np.all(f[1:] == f[:-1], axis=1)):
            raise ParameterError("design contains duplicate frequencies")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        f.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "seed", int(self.seed))

    def __len__(self) -> int:
        return len(self.freqs)

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @property
    def max_degree(self) -> int:
        return int(linf(self.freqs).max()) if len(self.freqs) else 0

    def __eq__(self, other):
        return (isinstance(other, SamplingDesign) and self.scheme == other.scheme
                and self.seed == other.seed and self.params == other.params
                and self.freqs.shape == other.freqs.shape and bool(np.all(self.freqs == other.freqs)))

    def __hash__(self):
        return hash((self.scheme, self.seed, self.freqs.tobytes()))

    def as_set(self) -> set:
        return {tuple(int(v) for v in row) for row in self.freqs}


@dataclass(frozen=True)
class HierarchicalParams:
    """Parameters of hierarchical random sub-sampling.

    Band ``k`` with ``k0 < k <= k_cap`` receives ``ceil(2^(d*k0 - alpha*(k-k0)))``
    draws from ``B_k = {2^(k-1) <= |xi|_inf <= 2^(k+1)}``.
    """

    k0: int
    alpha: float
    k_cap: int
    n_target: int

    def __post_init__(self):
        if int(self.k0) != self.k0 or self.k0 < 2:
            raise ParameterError("k0 must be an integer >= 2")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.k_cap < self.k0:
            raise ParameterError("k_cap must be >= k0")
        if self.n_target < 1:
            raise ParameterError("n_target must be positive")

    def band_budget(self, k: int, d: int) -> int:
        e = d * self.k0 - self.alpha * (k - self.k0)
        if e < -1074:
            return 1
        return int(math.ceil(2.0**e))

    def to_dict(self) -> dict:
        return {"k0": int(self.k0), "alpha": float(self.alpha), "k_cap": int(self.k_cap),
                "n_target": int(self.n_target)}


def default_k0(n_target: int, d: int) -> int:
    """Largest ``k0 >= 2`` whose full low block ``|xi|_inf <= 2^k0`` uses at most half of ``n_target``."""
    k0 = 2
    while (2 ** (k0 + 2) + 1) ** d <= n_target / 2:
        k0 += 1
    return k0


def default_k_cap(k0: int, alpha: float, d: int, limit: int = 9) -> int:
    return max(k0, min(math.ceil(k0 * (1 + d / alpha)) - 1, limit))


def lowest_block(m: int, d: int = 2) -> SamplingDesign:
    """All frequencies with ``|xi|_inf <= m``: ``(2m+1)^d`` of them."""
    if m < 0:
        raise ParameterError("m must be non-negative")
    return SamplingDesign(block_frequencies(m, d), "lowest_block", {"m": int(m), "d": int(d)}, 0)


def _band_candidates(k: int, d: int) -> np.ndarray:
    """Frequencies of ``B_k`` in lexicographic order."""
    hi = 2 ** (k + 1)
    lo = 2 ** (k - 1)
    blk = block_frequencies(hi, d)
    return blk[linf(blk) >= lo]


def _band_size(k: int, d: int) -> int:
    return (2 ** (k + 2) + 1) ** d - (2**k - 1) ** d


def _encode(freqs: np.ndarray, width: int) -> np.ndarray:
    """Injective integer key for frequencies with ``|xi|_inf <= width``."""
    base = 2 * width + 1
    key = np.zeros(len(freqs), dtype=np.int64)
    for j in range(freqs.shape[1]):
        key = key * base + (freqs[:, j] + width)
    return key


def _draw_from_band(rng, k: int, d: int, count: int, chosen: set, width: int) -> np.ndarray:
    """Draw ``count`` distinct unselected frequencies of ``B_k`` uniformly.

    Small requests use sequential rejection from the bounding block (batches
    of ``4*count + 16`` linear indices); requests above a quarter of the band
    enumerate the free set and call ``rng.choice`` without replacement.
    """
    if count <= 0:
        return np.zeros((0, d), dtype=np.int64)
    hi, lo = 2 ** (k + 1), 2 ** (k - 1)
    if 4 * count > _band_size(k, d):
        cand = _band_candidates(k, d)
        keys = _encode(cand, width)
        free = cand[~np.isin(keys, np.fromiter(chosen, np.int64, len(chosen)))]
        count = min(count, len(free))
        return free[np.sort(rng.choice(len(free), size=count, replace=False))]
    side = 2 * hi + 1
    out, seen = [], set()
    while len(out) < count:
        lin = rng.integers(0, side**d, size=4 * count + 16)
        xi = np.stack(np.unravel_index(lin, (side,) * d), axis=-1) - hi
        keys = _encode(xi, width)
        ok = linf(xi) >= lo
        for row, key, good in zip(xi, keys.tolist(), ok):
            if good and key not in chosen and key not in seen:
                seen.add(key)
                out.append(row)
                if len(out) == count:
                    break
    return np.array(out, dtype=np.int64)


def hierarchical(p: HierarchicalParams, d: int = 2, seed: int = 0) -> SamplingDesign:
    """Hierarchical random sub-sampling with an exact final count.

    The full block ``|xi|_inf <= 2^k0`` is taken first, then each band
    ``k0 < k <= k_cap`` contributes its budget drawn uniformly without
    replacement among the not-yet-selected frequencies of ``B_k``.  If the
    total overshoots ``n_target``, samples are removed uniformly at random
    starting from the highest band (the low block last); if it falls short,
    frequencies are added uniformly at random starting from the lowest band
    that still has room.
    """
    width = 2 ** (p.k_cap + 1)
    total_budget = (2 * width + 1) ** d
    if p.n_target > total_budget:
        raise ParameterError(f"n_target={p.n_target} exceeds the {total_budget} frequencies available up to band {p.k_cap}")
    low = block_frequencies(2**p.k0, d)
    chosen = set(_encode(low, width).tolist())
    groups = {p.k0: low}
    for k in range(p.k0 + 1, p.k_cap + 1):
        pick = _draw_from_band(_rng(seed, k), k, d, p.band_budget(k, d), chosen, width)
        groups[k] = pick
        chosen.update(_encode(pick, width).tolist())

    count = sum(len(g) for g in groups.values())
    trim = _rng(seed, TRIM_STREAM)
    if count > p.n_target:
        excess = count - p.n_target
        for k in sorted(groups, reverse=True):
            if excess == 0:
                break
            g = groups[k]
            drop = min(excess, len(g))
            keep = np.sort(trim.choice(len(g), size=len(g) - drop, replace=False))
            groups[k] = g[keep]
            excess -= drop
    elif count < p.n_target:
        short = p.n_target - count
        for k in range(p.k0 + 1, p.k_cap + 1):
            if short == 0:
                break
            in_band = sum(int(np.sum((linf(g) >= 2 ** (k - 1)) & (linf(g) <= 2 ** (k + 1))))
                          for g in groups.values() if len(g))
            add = min(short, _band_size(k, d) - in_band)
            extra = _draw_from_band(trim, k, d, add, chosen, width)
            groups[k] = np.concatenate([groups[k], extra])
            chosen.update(_encode(extra, width).tolist())
            short -= len(extra)
        if short:
            raise ParameterError(f"could not place {short} remaining frequencies below band {p.k_cap}")
    freqs = np.concatenate([groups[k] for k in sorted(groups)])
    return SamplingDesign(freqs, "hierarchical", p.to_dict() | {"d": int(d)}, seed)


def uniform_random(n_target: int, half_width: int, d: int = 2, seed: int = 0) -> SamplingDesign:
    """``n_target`` distinct frequencies drawn uniformly from ``|xi|_inf <= half_width``."""
    side = 2 * half_width + 1
    total = side**d
    if not 1 <= n_target <= total:
        raise ParameterError(f"n_target must lie in [1, {total}]")
    rng = _rng(seed, 0)
    lin = np.sort(rng.choice(total, size=n_target, replace=False))
    freqs = np.stack(np.unravel_index(lin, (side,) * d), axis=-1) - half_width
    params = {"n_target": int(n_target), "half_width": int(half_width), "d": int(d)}
    return SamplingDesign(freqs, "uniform_random", params, seed)


def make_design(scheme: str, params: dict, seed: int = 0) -> SamplingDesign:
    """Build a design from a scheme name and a parameter dict (as stored in files)."""
    params = dict(params)
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    d = int(params.pop("d", 2))
    if scheme == "lowest_block":
        return lowest_block(int(params["m"]), d)
    if scheme == "hierarchical":
        n = int(params["n_target"])
        alpha = float(params.get("alpha", 1.0))
        k0 = int(params.get("k0") or default_k0(n, d))
        k_cap = params.get("k_cap")
        k_cap = default_k_cap(k0, alpha, d) if k_cap is None else int(k_cap)
        return hierarchical(HierarchicalParams(k0, alpha, k_cap, n), d, seed)
    if scheme == "uniform_random":
        return uniform_random(int(params["n_target"]), int(params["half_width"]), d, seed)
    raise ParameterError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Files


def design_dumps(design: SamplingDesign) -> str:
    lines = [
        f"# scheme={design.scheme}",
        f"# seed={design.seed}",
        f"# params={json.dumps(design.params, sort_keys=True)}",
        f"# rng={RNG_DESCRIPTION}",
    ]
    lines += [" ".join(str(int(v)) for v in row) for row in design.freqs]
    return "\n".join(lines) + "\n"


def design_write(design: SamplingDesign, path) -> None:
    Path(path).write_text(design_dumps(design))


def design_loads(text: str, source: str = "<string>") -> SamplingDesign:
    header = {}
    rows = []
    lineno_of = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise DesignFileError(f"{source}:{lineno}: malformed header line {raw!r}")
            key, val = body.split("=", 1)
            header[key.strip()] = val.strip()
            continue
        try:
            row = tuple(int(t) for t in line.split())
        except ValueError:
            raise DesignFileError(f"{source}:{lineno}: non-integer frequency row {raw!r}") from None
        if rows and len(row) != len(rows[0]):
            raise DesignFileError(f"{source}:{lineno}: expected {len(rows[0])} entries, got {len(row)}")
        if row in lineno_of:
            raise DesignFileError(f"{source}:{lineno}: duplicate frequency {row} (first at line {lineno_of[row]})")
        lineno_of[row] = lineno
        rows.append(row)
    for key in ("scheme", "seed", "params"):
        if key not in header:
            raise DesignFileError(f"{source}: missing header '# {key}=...'")
    try:
        params = json.loads(header["params"])
        seed = int(header["seed"])
    except (ValueError, json.JSONDecodeError) as exc:
        raise DesignFileError(f"{source}: bad header value: {exc}") from None
    d = len(rows[0]) if rows else int(params.get("d", 2))
    freqs = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    try:
        return SamplingDesign(freqs, header["scheme"], params, seed)
    except ParameterError as exc:
        raise DesignFileError(f"{source}: {exc}") from None


def design_read(path) -> SamplingDesign:
    return design_loads(Path(path).read_text(), source=str(path))
