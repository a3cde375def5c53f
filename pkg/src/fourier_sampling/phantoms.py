"""Piecewise-constant phantoms with exact continuous Fourier coefficients.

Coefficients use the normalized convention
``f^(xi) = (2 pi)^-2 * integral over [0, 2pi)^2 of f(x) exp(-i xi.x) dx``.
Real and imaginary parts are assembled from explicit cosines and sines so
that ``coeff(-xi) == conj(coeff(xi))`` holds bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon, box

from .core import GridField, ParameterError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle ``[a, b] x [c, d]`` with a constant weight."""

    a: float
    b: float
    c: float
    d: float
    weight: float = 1.0

    def __post_init__(self):
        if not (0 <= self.a < self.b <= TWO_PI and 0 <= self.c < self.d <= TWO_PI):
            raise ParameterError(f"rectangle {self} must lie in [0, 2pi)^2 with a<b, c<d")

    def coeff(self, xi: np.ndarray) -> np.ndarray:
        return rect_coeff(self, xi)

    def indicator(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.a) & (x <= self.b) & (y >= self.c) & (y <= self.d)

    def area(self) -> float:
        return (self.b - self.a) * (self.d - self.c)

    def polygon(self) -> Polygon:
        return box(self.a, self.c, self.b, self.d)

    def to_json(self) -> dict:
        return {"type": "rect", "params": {"a": self.a, "b": self.b, "c": self.c, "d": self.d},
                "weight": self.weight}


@dataclass(frozen=True)
class DiamondRegion:
    """Solid diamond ``|x - x0| + |y - y0| <= r`` with a constant weight."""

    x0: float
    y0: float
    r: float
    weight: float = 1.0

    def __post_init__(self):
        if self.r <= 0:
            raise ParameterError("diamond radius must be positive")
        if not (0 <= self.x0 - self.r and self.x0 + self.r <= TWO_PI
                and 0 <= self.y0 - self.r and self.y0 + self.r <= TWO_PI):
            raise ParameterError(f"diamond {self} must lie in [0, 2pi)^2")

    def coeff(self, xi: np.ndarray) -> np.ndarray:
        return diamond_coeff(self, xi)

    def indicator(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.abs(x - self.x0) + np.abs(y - self.y0) <= self.r

    def area(self) -> float:
        return 2.0 * self.r**2

    def polygon(self) -> Polygon:
        x0, y0, r = self.x0, self.y0, self.r
        return Polygon([(x0 + r, y0), (x0, y0 + r), (x0 - r, y0), (x0, y0 - r)])

    def to_json(self) -> dict:
        return {"type": "diamond", "params": {"x0": self.x0, "y0": self.y0, "r": self.r},
                "weight": self.weight}


def _interval_parts(a: float, b: float, k: np.ndarray):
    """Real/imag parts of ``(2pi)^-1 * int_a^b exp(-ikx) dx``."""
    k = k.astype(float)
    nz = k != 0
    ks = np.where(nz, k, 1.0)
    re = np.where(nz, (np.sin(ks * b) - np.sin(ks * a)) / ks, b - a) / TWO_PI
    im = np.where(nz, (np.cos(ks * b) - np.cos(ks * a)) / ks, 0.0) / TWO_PI
    return re, im


def _as_freqs(xi) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(xi, dtype=np.int64))
    if xi.shape[1] != 2:
        raise ParameterError("phantom coefficients are defined for d = 2")
    return xi


def _squeeze(out, xi):
    return complex(out[0]) if np.asarray(xi).ndim == 1 else out


def rect_coeff(rect: RectRegion, xi) -> np.ndarray:
    """Exact Fourier coefficient(s) of a weighted rectangle indicator."""
    f = _as_freqs(xi)
    r1, i1 = _interval_parts(rect.a, rect.b, f[:, 0])
    r2, i2 = _interval_parts(rect.c, rect.d, f[:, 1])
    out = rect.weight * ((r1 * r2 - i1 * i2) + 1j * (r1 * i2 + i1 * r2))
    return _squeeze(out, xi)


def _diamond_profile(r: float, w: np.ndarray) -> np.ndarray:
    """``int_{-r}^{r} exp(-i a w/2) da``: ``2 sin(rw/2)/(w/2)``, or ``2r`` at ``w = 0``."""
    w = w.astype(float)
    nz = w != 0
    ws = np.where(nz, w, 1.0)
    return np.where(nz, 2.0 * np.sin(r * ws / 2.0) / (ws / 2.0), 2.0 * r)


def diamond_coeff(dia: DiamondRegion, xi) -> np.ndarray:
    """Exact Fourier coefficient(s) of a weighted solid diamond.

    In rotated coordinates ``a = s + t``, ``b = s - t`` the diamond is the
    square ``max(|a|, |b|) <= r`` and ``ds dt = da db / 2``.
    """
    f = _as_freqs(xi)
    u = f[:, 0] + f[:, 1]
    v = f[:, 0] - f[:, 1]
    mag = 0.5 * _diamond_profile(dia.r, u) * _diamond_profile(dia.r, v) / TWO_PI**2
    phase = f[:, 0] * dia.x0 + f[:, 1] * dia.y0
    out = dia.weight * mag * (np.cos(phase) - 1j * np.sin(phase))
    return _squeeze(out, xi)


def diamond_annulus(x0: float, y0: float, r_in: float, r_out: float, weight: float = 1.0) -> list:
    """Regions whose sum is the indicator of ``r_in < |x-x0|+|y-y0| <= r_out`` (up to a null set)."""
    if not 0 < r_in < r_out:
        raise ParameterError("annulus needs 0 < r_in < r_out")
    return [DiamondRegion(x0, y0, r_out, weight), DiamondRegion(x0, y0, r_in, -weight)]


class Phantom:
    """Weighted sum of rectangle and diamond indicators, extended 2pi-periodically.

    Instances are callable as coefficient accessors: ``ph(xi)`` with ``xi`` of
    shape ``(n, 2)`` returns the exact coefficients.
    """

    real_valued = True

    def __init__(self, regions, name: str = "custom"):
        regions = tuple(regions)
        if not regions:
            raise ParameterError("a phantom needs at least one region")
        self.regions = regions
        self.name = name

    def __call__(self, xi) -> np.ndarray:
        return phantom_coeff(self, xi)

    def __repr__(self):
        return f"Phantom({self.name!r}, {len(self.regions)} regions)"

    def __eq__(self, other):
        return isinstance(other, Phantom) and self.regions == other.regions

    def __hash__(self):
        return hash(self.regions)

    def value_at(self, x, y) -> np.ndarray:
        """Exact pointwise values; points are reduced mod 2pi first."""
        x = np.mod(np.asarray(x, dtype=float), TWO_PI)
        y = np.mod(np.asarray(y, dtype=float), TWO_PI)
        out = np.zeros(np.broadcast(x, y).shape)
        for reg in self.regions:
            out = out + reg.weight * reg.indicator(x, y)
        return out

    def l2_norm_sq(self) -> float:
        """Exact normalized ``||f||_{L_2}^2`` from region areas and pairwise overlaps."""
        total = sum(reg.weight**2 * reg.area() for reg in self.regions)
        polys = [reg.polygon() for reg in self.regions]
        for i, ri in enumerate(self.regions):
            for j in range(i + 1, len(self.regions)):
                total += 2 * ri.weight * self.regions[j].weight * polys[i].intersection(polys[j]).area
        return float(total / TWO_PI**2)

    def to_json(self) -> list:
        return [reg.to_json() for reg in self.regions]

    def value_range(self) -> tuple[float, float]:
        """Range of values over the fundamental domain (via a fine render)."""
        v = self.render(512).values
        return float(min(v.min(), 0.0)), float(max(v.max(), 0.0))

    def render(self, G: int) -> GridField:
        return phantom_render(self, G)


def phantom_coeff(ph: Phantom, xi) -> np.ndarray:
    """Sum of the exact region coefficients."""
    out = 0
    for reg in ph.regions:
        out = out + reg.coeff(xi)
    return out


def phantom_render(ph: Phantom, G: int) -> GridField:
    """Exact indicator evaluation on the ``G x G`` grid (closed regions)."""
    if G < 1:
        raise ParameterError("grid size must be positive")
    x = TWO_PI * np.arange(G) / G
    X, Y = np.meshgrid(x, x, indexing="ij")
    return GridField(ph.value_at(X, Y))


def standard_phantom(diamond_radius: float = 1.0) -> Phantom:
    """Rectangle ``[1,5] x [2,4]`` weighted -0.75 plus a solid diamond at (3, 4) weighted -1.0."""
    return Phantom(
        [RectRegion(1.0, 5.0, 2.0, 4.0, -0.75), DiamondRegion(3.0, 4.0, diamond_radius, -1.0)],
        name="standard",
    )


def binary_phantom() -> Phantom:
    """A {0, 1}-valued test phantom (one rectangle), for the binary edge sets."""
    return Phantom([RectRegion(1.0, 4.0, 2.0, 5.0, 1.0)], name="binary-rect")


def phantom_from_json(obj) -> Phantom:
    """Build a phantom from ``[{type, params, weight}, ...]`` (or ``"standard"``)."""
    if obj == "standard":
        return standard_phantom()
    if isinstance(obj, dict):
        name = obj.get("name", "custom")
        obj = obj["regions"]
    else:
        name = "custom"
    regions = []
    for i, item in enumerate(obj):
        try:
            kind = item["type"]
            params = item["params"]
            weight = float(item.get("weight", 1.0))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"region {i}: missing field {exc}") from None
        if kind == "rect":
            regions.append(RectRegion(params["a"], params["b"], params["c"], params["d"], weight))
        elif kind == "diamond":
            regions.append(DiamondRegion(params["x0"], params["y0"], params["r"], weight))
        elif kind == "diamond_annulus":
            regions.extend(diamond_annulus(params["x0"], params["y0"], params["r_in"], params["r_out"], weight))
        else:
            raise ParameterError(f"region {i}: unknown type {kind!r}")
    return Phantom(regions, name=name)


def load_phantom(path) -> Phantom:
    """Read a phantom spec file; the literal path ``standard`` gives the default phantom."""
    if str(path) == "standard":
        return standard_phantom()
    return phantom_from_json(json.loads(Path(path).read_text()))


def save_phantom(ph: Phantom, path) -> None:
    Path(path).write_text(json.dumps({"name": ph.name, "regions": ph.to_json()}, indent=2) + "\n")
