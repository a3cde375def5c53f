import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from fourier_sampling.core import ParameterError, coefficient_block
from fourier_sampling.phantoms import (
    DiamondRegion, Phantom, RectRegion, binary_phantom, diamond_annulus, diamond_coeff, load_phantom,
    standard_phantom, phantom_from_json, phantom_render, rect_coeff, save_phantom,
)

PI2 = np.pi**2


def _frozen(frozen, key):
    return {tuple(int(t) for t in k.split(",")): complex(*v) for k, v in frozen[key].items()}


def test_rect_examples(frozen):
    r = RectRegion(1, 5, 2, 4, 1.0)
    assert rect_coeff(r, (0, 0)) == pytest.approx(2 / PI2, abs=1e-16)
    expected = (np.exp(-1j) - np.exp(-5j)) / (2j * np.pi) * (2 / (2 * np.pi))
    assert rect_coeff(r, (1, 0)) == pytest.approx(expected, abs=1e-15)
    for xi, v in _frozen(frozen, "rect_unit_coeffs_1_5_2_4").items():
        assert abs(rect_coeff(r, xi) - v) < 1e-10
    assert np.all(rect_coeff(RectRegion(1, 5, 2, 4, 0.0), np.array([[1, 2], [3, 4]])) == 0)


def test_diamond_examples(frozen):
    dia = DiamondRegion(3, 4, 1, 1.0)
    assert diamond_coeff(dia, (0, 0)) == pytest.approx(2 / (4 * PI2), abs=1e-16)
    for xi, v in _frozen(frozen, "diamond_unit_coeffs_3_4_1").items():
        assert abs(diamond_coeff(dia, xi) - v) < 1e-8
    assert abs(diamond_coeff(dia, (1, -1)) - oracles.diamond_quad(3, 4, 1, (1, -1))) < 1e-8


def test_standard_phantom_dc_and_frozen(frozen):
    ph = standard_phantom()
    assert ph((0, 0)) == pytest.approx(-0.75 * 8 / (4 * PI2) - 2 / (4 * PI2), abs=1e-16)
    for xi, v in _frozen(frozen, "standard_phantom_coeffs").items():
        assert abs(ph(xi) - v) < 1e-8


def test_random_frequencies_vs_quadrature():
    rng = np.random.default_rng(11)
    ph = standard_phantom()
    for xi in rng.integers(-8, 9, size=(6, 2)):
        assert abs(ph(tuple(xi)) - oracles.standard_phantom_quad(tuple(xi))) < 1e-8


@given(st.integers(-300, 300), st.integers(-300, 300))
def test_hermitian_symmetry_exact(a, b):
    ph = standard_phantom()
    assert ph((-a, -b)) == np.conj(ph((a, b)))


def test_render_points():
    ph = standard_phantom()
    assert ph.value_at(2.0, 3.0) == -0.75
    assert ph.value_at(3.0, 3.0) == -1.75  # on the closed diamond boundary
    assert ph.value_at(3.0, 4.0) == -1.75
    assert ph.value_at(0.0, 0.0) == 0
    assert ph.value_at(1.0, 2.0) == -0.75  # closed corner
    assert ph.value_at(3.0 + 2 * np.pi, 4.0 - 2 * np.pi) == -1.75
    g = phantom_render(ph, 64)
    assert set(np.unique(g.values)) <= {0.0, -0.75, -1.0, -1.75}


def test_empty_and_invalid_regions():
    with pytest.raises(ParameterError):
        Phantom([])
    with pytest.raises(ParameterError):
        RectRegion(5, 1, 2, 4)
    with pytest.raises(ParameterError):
        DiamondRegion(0.5, 3, 1)
    with pytest.raises(ParameterError):
        diamond_annulus(3, 3, 1, 0.5)


def test_parseval_lower_bound():
    ph = standard_phantom()
    exact = ph.l2_norm_sq()
    # rectangle 8*0.5625 + diamond 2*1 + overlap 2*0.75*(area 1.5)? no: overlap area from geometry
    assert exact == pytest.approx((8 * 0.5625 + 2 + 2 * 0.75 * ph.regions[0].polygon().intersection(
        ph.regions[1].polygon()).area) / (4 * PI2))
    grid_est = np.mean(phantom_render(ph, 2048).values ** 2)
    assert exact == pytest.approx(grid_est, rel=2e-3)
    prev = 0.0
    for m in (2, 4, 8, 16, 32, 64):
        s = np.sum(np.abs(coefficient_block(ph, m, 2)) ** 2)
        assert prev < s < exact
        prev = s


def test_annulus_coefficients():
    regs = diamond_annulus(3, 3, 0.5, 1.0, 2.0)
    ph = Phantom(regs)
    xi = (2, -1)
    ref = 2.0 * (oracles.diamond_quad(3, 3, 1.0, xi) - oracles.diamond_quad(3, 3, 0.5, xi))
    assert abs(ph(xi) - ref) < 1e-8
    assert ph.value_at(3.0, 3.0) == 0 and ph.value_at(3.75, 3.0) == 2.0


def test_json_round_trip(tmp_path):
    ph = standard_phantom()
    save_phantom(ph, tmp_path / "p.json")
    assert load_phantom(tmp_path / "p.json") == ph
    assert load_phantom("standard") == ph
    spec = [{"type": "rect", "params": {"a": 1, "b": 2, "c": 1, "d": 2}, "weight": 1},
            {"type": "diamond_annulus", "params": {"x0": 4, "y0": 4, "r_in": 0.5, "r_out": 1}}]
    assert len(phantom_from_json(spec).regions) == 3
    with pytest.raises(ParameterError):
        phantom_from_json([{"type": "circle", "params": {}}])
    with pytest.raises(ParameterError):
        phantom_from_json([{"params": {}}])
    (tmp_path / "q.json").write_text(json.dumps(spec))
    assert load_phantom(tmp_path / "q.json").name == "custom"


def test_binary_phantom_values():
    assert set(np.unique(binary_phantom().render(32).values)) == {0.0, 1.0}
