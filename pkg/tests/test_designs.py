import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourier_sampling.core import ParameterError, linf
from fourier_sampling.designs import (
    DesignFileError, HierarchicalParams, SamplingDesign, default_k0, default_k_cap, design_dumps,
    design_loads, design_read, design_write, hierarchical, lowest_block, make_design, uniform_random,
)


def test_lowest_block_examples():
    assert len(lowest_block(8, 2)) == 289
    assert lowest_block(0, 2).freqs.tolist() == [[0, 0]]
    assert lowest_block(1, 1).freqs.tolist() == [[-1], [0], [1]]


def test_lowest_block_sorted():
    f = lowest_block(3, 2).freqs
    keys = [tuple(r) for r in f.tolist()]
    assert keys == sorted(keys)


def test_hierarchical_example_k0_3():
    des = hierarchical(HierarchicalParams(3, 1.0, 9, 289), 2, 7)
    assert len(des) == 289 and len(des.as_set()) == 289
    assert des.max_degree <= 2**10


def _band_ok(des, k0, k_cap):
    a = linf(des.freqs)
    beyond = a[a > 2**k0]
    # B_k = [2^(k-1), 2^(k+1)]; the union over k0 < k <= k_cap is [2^k0, 2^(k_cap+1)]
    return np.all(beyond <= 2 ** (k_cap + 1))


@given(st.integers(0, 2**63), st.sampled_from([(289, 2, 5), (1089, 3, 5), (500, 2, 6)]))
def test_hierarchical_exact_count_and_bands(seed, cfg):
    n, k0, k_cap = cfg
    des = hierarchical(HierarchicalParams(k0, 1.0, k_cap, n), 2, seed)
    assert len(des) == n
    assert len(des.as_set()) == n
    assert _band_ok(des, k0, k_cap)


def test_hierarchical_keeps_low_block_when_budget_allows():
    des = hierarchical(HierarchicalParams(2, 1.0, 5, 289), 2, 7)
    low = lowest_block(4, 2).as_set()
    assert low <= des.as_set()
    assert des.max_degree > 8


def test_hierarchical_determinism():
    p = HierarchicalParams(2, 1.0, 5, 289)
    a, b, c = hierarchical(p, 2, 7), hierarchical(p, 2, 7), hierarchical(p, 2, 8)
    assert design_dumps(a) == design_dumps(b)
    assert a.as_set() != c.as_set()


def test_hierarchical_huge_alpha():
    # one draw per band beyond the 81-point low block, then filling up to 100
    des = hierarchical(HierarchicalParams(2, 50.0, 6, 100), 2, 1)
    assert HierarchicalParams(2, 50.0, 6, 100).band_budget(3, 2) == 1
    assert len(des) == 100
    assert lowest_block(4, 2).as_set() <= des.as_set()


def test_hierarchical_fill_when_short():
    des = hierarchical(HierarchicalParams(2, 4.0, 3, 200), 2, 3)
    assert len(des) == 200


@given(st.integers(2, 6), st.floats(0.25, 4.0), st.integers(0, 4))
def test_budget_monotone(k0, alpha, extra):
    p = HierarchicalParams(k0, alpha, k0 + 1 + extra, 10)
    b = [p.band_budget(k, 2) for k in range(k0 + 1, p.k_cap + 1)]
    assert all(x >= y for x, y in zip(b, b[1:]))


def test_hierarchical_params_validation():
    with pytest.raises(ParameterError):
        HierarchicalParams(1, 1.0, 3, 10)
    with pytest.raises(ParameterError):
        HierarchicalParams(3, 0.0, 3, 10)
    with pytest.raises(ParameterError):
        HierarchicalParams(3, 1.0, 2, 10)
    with pytest.raises(ParameterError):
        hierarchical(HierarchicalParams(2, 1.0, 2, 10**6), 2, 0)


def test_defaults():
    assert default_k0(289, 2) == 2
    assert default_k0(1089, 2) == 3
    assert default_k_cap(2, 1.0, 2) == 5
    assert default_k_cap(5, 0.5, 2) == 9


def test_uniform_examples():
    des = uniform_random(289, 1024, 2, 7)
    assert len(des) == 289 and len(des.as_set()) == 289 and des.max_degree <= 1024
    full = uniform_random(25, 2, 2, 99)
    assert full.as_set() == lowest_block(2, 2).as_set()
    assert design_dumps(uniform_random(289, 1024, 2, 7)) == design_dumps(des)
    with pytest.raises(ParameterError):
        uniform_random(26, 2, 2, 0)


@given(st.integers(0, 2**64 - 1))
def test_uniform_counts(seed):
    des = uniform_random(289, 64, 2, seed)
    assert len(des) == 289 and len(des.as_set()) == 289


def test_file_round_trip(tmp_path):
    for des in (lowest_block(2, 2), hierarchical(HierarchicalParams(2, 1.0, 4, 60), 2, 5),
                uniform_random(10, 5, 1, 3)):
        design_write(des, tmp_path / "d.txt")
        assert design_read(tmp_path / "d.txt") == des
    text = design_dumps(lowest_block(1, 2))
    assert text.splitlines()[0] == "# scheme=lowest_block"
    assert text.splitlines()[4] == "-1 -1"


def test_handwritten_lowest_block_file(tmp_path):
    rows = "\n".join(f"{a} {b}" for a in range(-1, 2) for b in range(-1, 2))
    text = '# scheme=lowest_block\n# seed=0\n# params={"d": 2, "m": 1}\n' + rows + "\n"
    assert design_loads(text).as_set() == lowest_block(1, 2).as_set()
    assert design_loads(text) == lowest_block(1, 2)


def test_file_errors():
    head = '# scheme=lowest_block\n# seed=0\n# params={"m": 1}\n'
    with pytest.raises(DesignFileError, match=":5: duplicate"):
        design_loads(head + "0 0\n0 0\n", "x")
    with pytest.raises(DesignFileError, match=":4"):
        design_loads(head + "a b\n", "x")
    with pytest.raises(DesignFileError, match=":5"):
        design_loads(head + "0 0\n1\n", "x")
    with pytest.raises(DesignFileError, match="seed"):
        design_loads('# scheme=lowest_block\n# params={}\n0\n')


def test_sampling_design_validation():
    with pytest.raises(ParameterError):
        SamplingDesign(np.array([[0, 0], [0, 0]]), "lowest_block")
    with pytest.raises(ParameterError):
        SamplingDesign(np.array([[0]]), "spiral")
    with pytest.raises(ParameterError):
        SamplingDesign(np.array([[0]]), "lowest_block", seed=-1)


def test_make_design_aliases():
    assert make_design("lowest-block", {"m": 2}, 0) == lowest_block(2, 2)
    assert len(make_design("uniform", {"n_target": 5, "half_width": 3}, 1)) == 5
    assert len(make_design("hierarchical", {"n_target": 289}, 1)) == 289
    with pytest.raises(ParameterError):
        make_design("spiral", {}, 0)
