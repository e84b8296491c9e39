import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from adiabound import (
    DistanceSampler,
    DsqPolicy,
    TspFormatError,
    TspInstance,
    brute_force_shortest,
    effective_length,
    effective_lengths_all,
    index_to_tuple,
    is_tour,
    parse_instance,
    random_instance,
    rank_to_tour,
    serialize_instance,
    sigma_m,
    sigma_scaling_study,
    tour_fraction_decay,
    tour_index_mask,
    tour_length,
    tour_lengths_by_rank,
    tour_to_rank,
    tuple_to_index,
)

SEED = 20260825


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

def test_instance_validation():
    with pytest.raises(ValueError):
        TspInstance.from_distances(np.zeros((2, 2)))  # too few cities
    with pytest.raises(ValueError):
        TspInstance.from_distances(np.zeros((3, 4)))  # not square
    bad = np.ones((3, 3)) - np.eye(3)
    bad[0, 1] = -0.5
    with pytest.raises(ValueError):
        TspInstance.from_distances(bad)  # negative distance
    bad = np.ones((3, 3))
    with pytest.raises(ValueError):
        TspInstance.from_distances(bad)  # nonzero diagonal
    bad = np.ones((3, 3)) - np.eye(3)
    bad[1, 2] = np.inf
    with pytest.raises(ValueError):
        TspInstance.from_distances(bad)  # non-finite


def test_instance_distances_read_only():
    inst = random_instance(4, SEED)
    with pytest.raises(ValueError):
        inst.d[0, 1] = 99.0


def test_l_max_small_m_is_worst_tour(cyclic4):
    worst = max(tour_length(cyclic4, p) for p in itertools.permutations(range(4)))
    assert cyclic4.l_max == pytest.approx(1.1 * worst, rel=0, abs=0)


def test_l_max_large_m_uses_max_leg():
    m = 12
    d = np.abs(np.subtract.outer(np.arange(float(m)), np.arange(float(m))))
    inst = TspInstance.from_distances(d)
    assert inst.l_max == 1.1 * m * d.max()


def test_random_instance_reproducible():
    a = random_instance(5, 7)
    b = random_instance(5, 7)
    c = random_instance(5, 7, stream=1)
    e = random_instance(5, 8)
    assert np.array_equal(a.d, b.d)
    assert not np.array_equal(a.d, c.d)
    assert not np.array_equal(a.d, e.d)


def test_symmetric_sampler(rng):
    d = DistanceSampler(symmetric=True).sample(6, rng)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0.0)


def test_constant_sampler(rng):
    d = DistanceSampler(kind="constant", value=2.5).sample(4, rng)
    assert np.all(d[~np.eye(4, dtype=bool)] == 2.5)


# ---------------------------------------------------------------------------
# tour lengths and ranking
# ---------------------------------------------------------------------------

def test_tour_length_hand_sum(cyclic4):
    # 0->1->2->3->0: legs 1+1+1 and the closing leg 3
    assert tour_length(cyclic4, (0, 1, 2, 3)) == 6.0
    # 0->2->1->3->0: 2+1+2+3
    assert tour_length(cyclic4, (0, 2, 1, 3)) == 8.0


def test_rank_roundtrip_exhaustive():
    for m in (3, 4, 5):
        perms = list(itertools.permutations(range(m)))
        for k, perm in enumerate(perms, start=1):
            assert rank_to_tour(k, m) == perm  # rank order is lexicographic
            assert tour_to_rank(perm) == k


def test_rank_roundtrip_m8():
    m = 8
    for k in range(1, math.factorial(m) + 1):
        assert tour_to_rank(rank_to_tour(k, m)) == k


def test_rank_bounds():
    with pytest.raises(ValueError):
        rank_to_tour(0, 4)
    with pytest.raises(ValueError):
        rank_to_tour(25, 4)
    with pytest.raises(ValueError):
        tour_to_rank((0, 1, 1))


def test_tour_lengths_by_rank_matches_scalar(cyclic4):
    table = tour_lengths_by_rank(cyclic4)
    for k, perm in enumerate(itertools.permutations(range(4)), start=1):
        assert table[k - 1] == tour_length(cyclic4, perm)  # bit-identical


def test_brute_force_cyclic4(cyclic4):
    res = brute_force_shortest(cyclic4)
    assert res.length == 6.0
    assert tour_length(cyclic4, res.tour) == res.length
    # the full argmin set, by independent enumeration
    ties = [k for k, p in enumerate(itertools.permutations(range(4)), start=1)
            if tour_length(cyclic4, p) == 6.0]
    assert list(res.tied_ranks) == ties
    for rank in res.tied_ranks:
        assert tour_length(cyclic4, rank_to_tour(rank, 4)) == 6.0


def test_brute_force_rotation_degeneracy():
    # generic asymmetric distances: exactly the M cyclic rotations tie
    inst = random_instance(4, SEED)
    res = brute_force_shortest(inst)
    assert len(res.tied_ranks) == 4
    tours = {rank_to_tour(k, 4) for k in res.tied_ranks}
    base = res.tour
    rotations = {tuple(base[(i + r) % 4] for i in range(4)) for r in range(4)}
    assert tours == rotations


def test_brute_force_matches_enumeration():
    inst = random_instance(6, SEED)
    best = min(tour_length(inst, p) for p in itertools.permutations(range(6)))
    assert brute_force_shortest(inst).length == best


# ---------------------------------------------------------------------------
# tuple codec
# ---------------------------------------------------------------------------

def test_tuple_named_values():
    assert index_to_tuple(1, 3) == (0, 0, 0)
    assert index_to_tuple(27, 3) == (2, 2, 2)
    assert tuple_to_index((1, 0, 0)) == 2  # first component is least significant
    assert tuple_to_index((0, 1, 0)) == 4


def test_tuple_roundtrip_exhaustive():
    for m in (3, 4, 6):
        for s in range(1, m ** m + 1):
            digits = index_to_tuple(s, m)
            assert len(digits) == m
            assert all(0 <= v < m for v in digits)
            assert tuple_to_index(digits) == s


def test_tuple_roundtrip_m8_sampled(rng):
    m = 8
    for s in rng.integers(1, m ** m + 1, size=2000):
        assert tuple_to_index(index_to_tuple(int(s), m)) == int(s)


def test_tuple_bounds():
    with pytest.raises(ValueError):
        index_to_tuple(0, 3)
    with pytest.raises(ValueError):
        index_to_tuple(28, 3)
    with pytest.raises(ValueError):
        tuple_to_index((0, 3, 0))


def test_is_tour():
    assert is_tour((2, 0, 1))
    assert not is_tour((0, 0, 1))
    assert not is_tour((0, 1, 3))


def test_tour_index_mask_counts():
    for m in (3, 4, 5):
        mask = tour_index_mask(m)
        assert mask.shape == (m ** m,)
        assert int(mask.sum()) == math.factorial(m)
        for s in np.nonzero(mask)[0][:10] + 1:
            assert is_tour(index_to_tuple(int(s), m))


# ---------------------------------------------------------------------------
# effective lengths
# ---------------------------------------------------------------------------

def test_effective_length_parity(cyclic4):
    policy = DsqPolicy("parity")
    lm = cyclic4.l_max
    # s=1 is (0,0,0,0): not a tour, odd, so penalty 2*l_max on top of l_max
    assert effective_length(cyclic4, 1, policy) == 3.0 * lm
    assert effective_length(cyclic4, 2, policy) == lm  # even non-tour
    s_tour = tuple_to_index((0, 1, 2, 3))
    assert effective_length(cyclic4, s_tour, policy) == 6.0


def test_effective_length_random_policy(cyclic4):
    p1 = DsqPolicy("random", sigma_d=1.0, seed=5)
    p2 = DsqPolicy("random", sigma_d=2.0, seed=5)
    p3 = DsqPolicy("random", sigma_d=1.0, seed=6)
    v1 = [p1.dsq(s, cyclic4.l_max) for s in (1, 2, 9)]
    assert v1 == [p1.dsq(s, cyclic4.l_max) for s in (1, 2, 9)]  # pure in (seed, s)
    assert all(v >= 0.0 for v in v1)
    # doubling sigma scales the underlying draw exactly
    assert [p2.dsq(s, cyclic4.l_max) for s in (1, 2, 9)] == [4.0 * v for v in v1]
    assert v1 != [p3.dsq(s, cyclic4.l_max) for s in (1, 2, 9)]


def test_effective_lengths_all_matches_scalar():
    inst = random_instance(3, SEED)
    for policy in (DsqPolicy("parity"), DsqPolicy("random", sigma_d=0.7, seed=3)):
        vec = effective_lengths_all(inst, policy)
        for s in range(1, 28):
            assert vec[s - 1] == effective_length(inst, s, policy)  # bit-identical


def test_effective_lengths_tours_below_penalties():
    inst = random_instance(4, SEED)
    vec = effective_lengths_all(inst, DsqPolicy("random", sigma_d=0.5, seed=1))
    mask = tour_index_mask(4)
    assert vec[mask].max() < inst.l_max  # l_max has 10% headroom over the worst tour
    assert vec[~mask].min() >= inst.l_max


# ---------------------------------------------------------------------------
# spread statistics
# ---------------------------------------------------------------------------

def test_sigma_m_flagged_example():
    # all six tours enumerate to lengths {3,3,3,6,6,6}: population std 1.5
    d = np.array([[0.0, 1.0, 2.0], [2.0, 0.0, 1.0], [1.0, 2.0, 0.0]])
    inst = TspInstance.from_distances(d)
    lengths = [tour_length(inst, p) for p in itertools.permutations(range(3))]
    assert sorted(lengths) == [3.0, 3.0, 3.0, 6.0, 6.0, 6.0]
    assert sigma_m(inst) == pytest.approx(1.5, abs=1e-15)
    assert sigma_m(inst) == pytest.approx(np.std(lengths), abs=1e-15)


def test_sigma_m_matches_enumeration():
    inst = random_instance(5, SEED)
    lengths = [tour_length(inst, p) for p in itertools.permutations(range(5))]
    assert sigma_m(inst) == pytest.approx(np.std(lengths), rel=1e-13)


def test_sigma_scaling_study_reproducible():
    sampler = DistanceSampler()
    rep1 = sigma_scaling_study(sampler, [5, 6], samples=8, seed=11)
    rep2 = sigma_scaling_study(sampler, [5, 6], samples=8, seed=11)
    assert rep1.to_csv() == rep2.to_csv()
    rows = rep1.rows
    assert [r.m for r in rows] == [5, 6]
    for r in rows:
        assert r.samples == 8
        assert r.ratio_sqrtm == r.sigma_mean / math.sqrt(r.m)
        assert r.sigma_stderr < r.sigma_mean


def test_sigma_scaling_csv_header():
    rep = sigma_scaling_study(DistanceSampler(), [5], samples=2, seed=0)
    assert rep.to_csv().splitlines()[0] == "M,samples,sigma_mean,sigma_stderr,ratio_sqrtM"


# ---------------------------------------------------------------------------
# tour fraction decay
# ---------------------------------------------------------------------------

def test_tour_fraction_exact_values():
    rep = tour_fraction_decay([3, 8])
    r3, r8 = rep.rows
    assert r3.exact_ratio == float(Fraction(math.factorial(3), 3 ** 3))
    assert r8.exact_ratio == float(Fraction(math.factorial(8), 8 ** 8))
    assert r3.log_exact == pytest.approx(math.log(6.0 / 27.0), rel=1e-15)


def test_tour_fraction_closed_forms():
    rep = tour_fraction_decay([10])
    row = rep.rows[0]
    bare = math.sqrt(2 * math.pi * 10) * math.exp(-10)
    assert row.stirling == pytest.approx(bare, rel=1e-15)
    assert row.stirling_rel_dev == pytest.approx(abs(row.exact_ratio / bare - 1.0), rel=1e-12)
    inverted = math.exp(-10) / math.sqrt(10)
    assert row.sqrt_m_form == pytest.approx(inverted, rel=1e-15)
    assert row.sqrt_m_form_rel_dev > 1.0  # that form is off by orders of magnitude


def test_tour_fraction_large_m_log_space():
    rep = tour_fraction_decay([40])
    row = rep.rows[0]
    expected = math.lgamma(41) - 40 * math.log(40)
    assert row.log_exact == pytest.approx(expected, rel=1e-12)
    assert row.exact_ratio == pytest.approx(math.exp(expected), rel=1e-12)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def test_matrix_roundtrip(tmp_path, cyclic4):
    path = tmp_path / "inst.mat"
    path.write_text(serialize_instance(cyclic4))
    back = parse_instance(path, fmt="matrix")
    assert back.M == 4
    assert np.array_equal(back.d, cyclic4.d)  # bit-exact through repr
    assert back.l_max == cyclic4.l_max


def test_matrix_roundtrip_random(tmp_path):
    inst = random_instance(5, SEED)
    path = tmp_path / "inst.mat"
    path.write_text(serialize_instance(inst))
    assert np.array_equal(parse_instance(path, fmt="matrix").d, inst.d)


def test_matrix_comments_and_errors(tmp_path):
    path = tmp_path / "inst.mat"
    path.write_text("# a comment\n3\n0 1 2\n1 0 1\n")
    with pytest.raises(TspFormatError) as err:
        parse_instance(path, fmt="matrix")
    assert "expected 9 matrix entries" in str(err.value)
    assert err.value.line == 4


def test_tsplib_euc2d(tmp_path):
    path = tmp_path / "tri.tsp"
    path.write_text("\n".join([
        "NAME : tri",
        "TYPE : TSP",
        "DIMENSION : 3",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        "NODE_COORD_SECTION",
        "1 0.0 0.0",
        "2 3.0 0.0",
        "3 0.0 4.0",
        "EOF",
    ]) + "\n")
    inst = parse_instance(path)
    assert inst.name == "tri"
    assert inst.d[0, 1] == 3.0 and inst.d[0, 2] == 4.0 and inst.d[1, 2] == 5.0
    assert np.array_equal(inst.d, inst.d.T)


def test_tsplib_explicit_matrix(tmp_path):
    path = tmp_path / "ex.tsp"
    path.write_text("\n".join([
        "NAME: ex",
        "TYPE: TSP",
        "DIMENSION: 3",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
        "0 2 4",
        "2 0 6 4 6 0",
        "EOF",
    ]) + "\n")
    inst = parse_instance(path)
    assert inst.d[0, 2] == 4.0 and inst.d[2, 1] == 6.0


def test_tsplib_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.tsp"
    path.write_text("\n".join([
        "NAME: bad",
        "TYPE: TSP",
        "DIMENSION: 3",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
        "0 2 4",
        "2 0 x",
        "4 6 0",
        "EOF",
    ]) + "\n")
    with pytest.raises(TspFormatError) as err:
        parse_instance(path)
    assert err.value.line == 8


def test_tsplib_rejects_unsupported(tmp_path):
    path = tmp_path / "geo.tsp"
    path.write_text("NAME: g\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\nEOF\n")
    with pytest.raises(TspFormatError):
        parse_instance(path)


def test_parse_missing_file():
    with pytest.raises(TspFormatError):
        parse_instance("/nonexistent/foo.tsp")
