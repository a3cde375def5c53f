import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import random_block
from fourier_sampling.core import (
    AliasingError, GridField, ParameterError, TrigPolynomial, band_decompose, band_mask, besov_proxy,
    block_frequencies, bv_seminorm, coefficient_l2, evaluate_on_grid, gradient, lp_norm_grid,
    project_from_grid, read_coefficients_csv, read_frequency_values_csv, read_pgm, synthesize,
    vdp_multiplier, vdp_sum, vdp_weights, write_coefficients_csv, write_grid_csv, write_pgm,
)
from fourier_sampling.phantoms import standard_phantom

# --- multipliers ------------------------------------------------------------


def test_vdp_multiplier_examples():
    assert vdp_multiplier(4, 2) == 1.0
    assert vdp_multiplier(4, 4) == pytest.approx(0.4, abs=1e-15)
    assert vdp_multiplier(4, 5) == 0.0


def test_vdp_multiplier_matches_frozen(frozen):
    for k, v in frozen["vdp_m4"].items():
        assert vdp_multiplier(4, int(k)) == pytest.approx(v, abs=1e-15)


@pytest.mark.parametrize("m", [0, 3, -2, 2.5])
def test_vdp_multiplier_rejects_bad_degree(m):
    with pytest.raises(ParameterError):
        vdp_multiplier(m, 1)


@given(st.sampled_from([2, 4, 6, 8, 16, 32]), st.integers(-100, 100))
def test_vdp_multiplier_even_and_bounded(m, k):
    w = vdp_multiplier(m, k)
    assert w == vdp_multiplier(m, -k)
    assert 0.0 <= w <= 1.0
    assert w == pytest.approx(float(oracles.vdp_weight_clip(m, k)), abs=1e-15)


# --- vdp sums -----------------------------------------------------------------


@given(st.sampled_from([4, 8, 16]), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_vdp_reproduces_low_degree(m, d, seed):
    rng = np.random.default_rng(seed)
    p = TrigPolynomial(random_block(rng, m // 2, d))
    out = vdp_sum(p, m)
    assert out.degree == m
    assert np.abs(out.resize(m // 2).coeffs - p.coeffs).max() <= 1e-12
    assert np.abs(out.coeffs).sum() - np.abs(out.resize(m // 2).coeffs).sum() <= 1e-12


def test_vdp_single_mode_example():
    c = np.zeros(9, dtype=complex)
    c[4 + 3] = 1.0
    out = vdp_sum(TrigPolynomial(c), 4)
    # 2(1 - 3/5); the weight 0.4 belongs to |k| = 4
    assert out.coefficient([3]) == pytest.approx(0.8, abs=1e-15)
    c = np.zeros(9, dtype=complex)
    c[4 + 4] = 1.0
    assert vdp_sum(TrigPolynomial(c), 4).coefficient([4]) == pytest.approx(0.4, abs=1e-15)


def test_vdp_matches_kernel_convolution():
    rng = np.random.default_rng(3)
    c = random_block(rng, 6, 1)
    got = vdp_sum(TrigPolynomial(c), 6).coeffs
    ref = oracles.vdp_by_kernel(c, 6, 25)
    assert np.abs(got - ref).max() < 1e-12


def test_vdp_zero_and_highest_frequency():
    assert np.all(vdp_sum(TrigPolynomial.zeros(8, 2), 8).coeffs == 0)
    w = vdp_weights(8, 2)
    assert w[0, 0] == pytest.approx((2 / 9) ** 2)


def test_vdp_preserves_hermitian():
    out = vdp_sum(standard_phantom(), 16, 2)
    assert out.real and out.is_hermitian()


# --- bands --------------------------------------------------------------------


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_band_telescoping_and_support(r, seed):
    rng = np.random.default_rng(seed)
    d = 1 if r > 4 else 2
    p = TrigPolynomial(random_block(rng, 2**r, d))
    bd = band_decompose(p, r)
    assert bd.r == r
    total = bd.total().resize(2**r).coeffs
    ref = vdp_sum(p, 2**r).coeffs
    assert np.abs(total - ref).max() <= 1e-12
    for k, piece in enumerate(bd.pieces):
        outside = ~band_mask(k, piece.degree, d)
        assert np.all(piece.coeffs[outside] == 0)


def test_band_zero_coefficient_propagates():
    rng = np.random.default_rng(1)
    c = random_block(rng, 8, 2)
    c[8 + 3, 8 - 2] = 0
    for piece in band_decompose(TrigPolynomial(c), 3).pieces:
        assert piece.coefficient([3, -2]) == 0


def test_band_decompose_rejects_r0():
    with pytest.raises(ParameterError):
        band_decompose(TrigPolynomial.zeros(2, 1), 0)


def test_band_decompose_hermitian():
    bd = band_decompose(standard_phantom(), 4, 2)
    assert all(p.is_hermitian() for p in bd.pieces)


# --- grids --------------------------------------------------------------------


def test_evaluate_constant_and_single_mode():
    c = np.zeros((3, 3), dtype=complex)
    c[1, 1] = 1
    assert np.allclose(evaluate_on_grid(TrigPolynomial(c), 5).values, 1)
    c = np.zeros((3, 3), dtype=complex)
    c[2, 1] = 1
    g = evaluate_on_grid(TrigPolynomial(c), 7)
    x = 2 * np.pi * np.arange(7) / 7
    assert np.allclose(g.values, np.exp(1j * x)[:, None] * np.ones(7), atol=1e-14)


@pytest.mark.parametrize("d,m,G", [(1, 4, 9), (2, 4, 9), (2, 3, 16), (1, 10, 33)])
def test_synthesis_matches_direct_sum(d, m, G):
    rng = np.random.default_rng(m * G)
    c = random_block(rng, m, d)
    got = evaluate_on_grid(TrigPolynomial(c), G).values
    assert np.abs(got - oracles.synth_direct(c, G)).max() < 1e-11
    back = oracles.analyze_direct(got, m)
    assert np.abs(back - c).max() / np.abs(c).max() < 1e-10
    assert np.abs(project_from_grid(GridField(got), m).coeffs - c).max() < 1e-12


def test_aliasing_refused():
    with pytest.raises(AliasingError):
        evaluate_on_grid(TrigPolynomial.zeros(4, 1), 8)
    with pytest.raises(AliasingError):
        project_from_grid(GridField(np.zeros(8)), 4)


def test_real_flag_returns_real_values():
    g = evaluate_on_grid(TrigPolynomial.from_function(standard_phantom(), 8, 2, real=True), 33)
    assert np.isrealobj(g.values)


def test_hermitian_violation_rejected():
    c = np.zeros(5, dtype=complex)
    c[3] = 1.0
    with pytest.raises(ParameterError):
        TrigPolynomial(c, real=True)


def test_bad_block_shape():
    with pytest.raises(ParameterError):
        TrigPolynomial(np.zeros((3, 5)))
    with pytest.raises(ParameterError):
        TrigPolynomial(np.zeros(4))


# --- gradient -----------------------------------------------------------------


def test_gradient_single_mode_and_constant():
    c = np.zeros((3, 3), dtype=complex)
    c[2, 1] = 1
    gx, gy = gradient(TrigPolynomial(c))
    assert gx.coefficient([1, 0]) == 1j
    assert np.all(gy.coeffs == 0)
    c0 = np.zeros((3, 3), dtype=complex)
    c0[1, 1] = 2
    assert all(np.all(g.coeffs == 0) for g in gradient(TrigPolynomial(c0)))


def test_gradient_cos2x_vs_finite_difference():
    c = np.zeros(5, dtype=complex)
    c[0] = c[4] = 0.5
    (gx,) = gradient(TrigPolynomial(c, real=True))
    pts = np.linspace(0, 2 * np.pi, 50)[:, None]
    fd = oracles.central_diff4(lambda x: oracles.eval_poly_points(c, x), pts, 1e-5, 0)
    assert np.abs(fd - (-2 * np.sin(2 * pts[:, 0]))).max() < 1e-6
    assert np.abs(oracles.eval_poly_points(gx.coeffs, pts) - fd).max() < 1e-6
    assert gx.real


@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_gradient_vs_finite_difference_property(m, seed):
    rng = np.random.default_rng(seed)
    c = np.zeros((2 * m + 1,) * 2, dtype=complex)
    idx = rng.integers(0, 2 * m + 1, size=(4, 2))
    c[tuple(idx.T)] = np.exp(2j * np.pi * rng.random(4))
    grads = gradient(TrigPolynomial(c))
    pts = rng.uniform(0, 2 * np.pi, size=(20, 2))
    for axis, g in enumerate(grads):
        fd = oracles.central_diff4(lambda x: oracles.eval_poly_points(c, x), pts, 1e-5, axis)
        assert np.abs(oracles.eval_poly_points(g.coeffs, pts) - fd).max() <= 1e-6


# --- norms --------------------------------------------------------------------


def test_lp_norm_examples():
    assert lp_norm_grid(GridField(np.ones((4, 4))), 1) == 1
    assert lp_norm_grid(GridField(np.ones((4, 4))), 3) == pytest.approx(1)
    assert lp_norm_grid(GridField(np.ones((4, 4))), np.inf) == 1
    v = np.zeros((4, 4))
    v[1, 2] = -3
    assert lp_norm_grid(GridField(v), 1) == pytest.approx(3 / 16)
    with pytest.raises(ParameterError):
        lp_norm_grid(GridField(v), 0.5)


@given(st.integers(1, 8), st.integers(1, 2), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_parseval(m, d, seed, extra):
    rng = np.random.default_rng(seed)
    p = TrigPolynomial(random_block(rng, m, d))
    G = 2 * m + 1 + extra
    assert lp_norm_grid(evaluate_on_grid(p, G), 2) == pytest.approx(coefficient_l2(p), rel=1e-10)


def test_bv_seminorm_single_mode():
    c = np.zeros(5, dtype=complex)
    c[3] = c[1] = 0.5  # cos x, |f'| = |sin x| has mean 2/pi
    # |sin| has kinks, so the grid mean converges like G^-2
    assert bv_seminorm(TrigPolynomial(c, real=True), 401) == pytest.approx(2 / np.pi, rel=1e-4)


def test_besov_proxy():
    assert besov_proxy(TrigPolynomial.zeros(8, 2), 1.0, 3) == 0
    f = TrigPolynomial.from_function(standard_phantom(), 64, 2, real=True)
    a, b = besov_proxy(f, 1.0, 6), besov_proxy(f, 1.0, 8)
    assert abs(a - b) <= 0.2 * a
    rng = np.random.default_rng(0)
    low = TrigPolynomial(random_block(rng, 4, 1))
    # terms with 2^k >= 4 vanish; the two calls differ only through the grid size
    assert besov_proxy(low, 1.0, 2) == pytest.approx(besov_proxy(low, 1.0, 5), rel=1e-2)
    with pytest.raises(ParameterError):
        besov_proxy(low, 0.0, 2)


# --- dumps --------------------------------------------------------------------


def test_coefficient_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    p = TrigPolynomial(random_block(rng, 3, 2, real=True), real=True)
    path = tmp_path / "c.csv"
    write_coefficients_csv(p, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "xi_1,xi_2,re,im"
    assert lines[1].startswith("-3,-3,")
    q = read_coefficients_csv(path)
    assert np.array_equal(q.coeffs, p.coeffs) and q.real
    xi, vals = read_frequency_values_csv(path)
    assert np.array_equal(xi, block_frequencies(3, 2))


def test_csv_parse_error_has_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("xi_1,re,im\n0,1,0\n1,zz,0\n")
    with pytest.raises(ValueError, match=":3"):
        read_frequency_values_csv(path)


def test_pgm_round_trip(tmp_path):
    v = np.linspace(-1, 1, 12).reshape(3, 4)
    meta = write_pgm(GridField(np.zeros((4, 4))), tmp_path / "z.pgm")
    assert meta["vmin"] == meta["vmax"] == 0
    write_pgm(GridField(np.pad(v, ((0, 1), (0, 0)))), tmp_path / "a.pgm", -1, 1)
    img, meta = read_pgm(tmp_path / "a.pgm")
    assert img.shape == (4, 4) and meta["vmin"] == -1
    assert img[0, 0] == 0 and img.max() == 65535
    write_grid_csv(GridField(np.eye(2)), tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0].startswith("j_1,j_2")


def test_synthesize_is_linear():
    rng = np.random.default_rng(9)
    a, b = random_block(rng, 3, 2), random_block(rng, 3, 2)
    assert np.allclose(synthesize(a + 2 * b, 9), synthesize(a, 9) + 2 * synthesize(b, 9))
