import numpy as np
import pytest

from stocenter.errors import NotFull, StateSpaceGuardExceeded
from stocenter.grid_coreset import CoresetBuilder
from stocenter.model import (CenterSet, ExistentialInstance,
                             LocationalInstance, enumerate_realizations)
from stocenter.objective import expected_objective_exact, kcenter_value
from stocenter.oracle import oracle_holant_direct, oracle_partition_masses
from stocenter.partition import (build_weighted_image, enumerate_sequences,
                                 forbidden_and_tail_sets, holant_value,
                                 image_cost, membership_check,
                                 prob_existential, prob_locational,
                                 subset_probability)


def _rand_exist(rng, n, d=2):
    return ExistentialInstance(points=rng.uniform(-10, 10, (n, d)),
                               probs=rng.uniform(0.05, 0.95, n))


def _rand_loc(rng, n, m, d=2):
    rows = rng.uniform(0.1, 1.0, (n, m))
    rows /= rows.sum(axis=1, keepdims=True)
    return LocationalInstance(locations=rng.uniform(-10, 10, (m, d)),
                              probs=rows)


def test_membership_small_sets_are_singletons():
    rng = np.random.default_rng(1)
    inst = _rand_exist(rng, 8)
    assert membership_check((), inst, 2, 0.5).kind == "Singleton"
    assert membership_check((3,), inst, 2, 0.5).kind == "Singleton"
    assert membership_check((0, 5), inst, 2, 0.5).kind == "Singleton"


def test_membership_cellmates_not_in_image():
    # two points in the same tiny cell next to a distant anchor: the
    # construction drops one of them, so the pair is not a fixed point
    pts = np.array([[0.0, 0.0], [100.0, 100.0], [100.0001, 100.0]])
    inst = ExistentialInstance(points=pts, probs=np.full(3, 0.5))
    verdict = membership_check((0, 1, 2), inst, 1, 0.5)
    assert verdict.kind == "NotInImage"


def test_membership_fixed_points_are_full():
    rng = np.random.default_rng(2)
    inst = _rand_exist(rng, 10)
    builder = CoresetBuilder(inst.points, 1, 0.5)
    seen_full = False
    for real, _ in enumerate_realizations(inst):
        ids = real.point_ids()
        if not ids:
            continue
        core = builder.build(ids).coreset
        if len(core) > 1:
            assert membership_check(core, inst, 1, 0.5).kind == "Full"
            seen_full = True
    assert seen_full


def test_prob_existential_matches_grouping_oracle():
    rng = np.random.default_rng(3)
    for _ in range(5):
        inst = _rand_exist(rng, int(rng.integers(6, 11)))
        k, eps = 1, 0.5
        brute = dict(oracle_partition_masses(inst, k, eps).entries)
        builder = CoresetBuilder(inst.points, k, eps)
        for S, mass in brute.items():
            if not S:
                continue
            algo = prob_existential(S, inst, k, eps, builder)
            assert algo == pytest.approx(mass, abs=1e-12)


def test_prob_existential_not_in_image_is_zero():
    pts = np.array([[0.0, 0.0], [100.0, 100.0], [100.0001, 100.0]])
    inst = ExistentialInstance(points=pts, probs=np.full(3, 0.5))
    assert prob_existential((0, 1, 2), inst, 1, 0.5) == 0.0


def test_forbidden_tail_partition_property():
    rng = np.random.default_rng(4)
    inst = _rand_exist(rng, 12)
    builder = CoresetBuilder(inst.points, 1, 0.5)
    core = builder.build(tuple(range(12))).coreset
    verdict = membership_check(core, inst, 1, 0.5, builder)
    if verdict.kind != "Full":
        pytest.skip("sampled instance produced no Full class")
    forbidden, tail = forbidden_and_tail_sets(core, inst, 1, 0.5, verdict)
    assert forbidden.isdisjoint(tail)
    assert set(core).isdisjoint(forbidden | tail)
    assert set(core) | forbidden | tail == set(range(12))


def test_forbidden_tail_requires_full():
    rng = np.random.default_rng(5)
    inst = _rand_exist(rng, 6)
    with pytest.raises(NotFull):
        forbidden_and_tail_sets((0,), inst, 2, 0.5)


def test_enumerate_sequences():
    seqs = enumerate_sequences(3, 2)
    assert seqs == [(1, 1, 1), (1, 2, 0), (2, 1, 0)]
    assert all(sum(s) == 3 for s in seqs)
    assert enumerate_sequences(4, 0) == [(4,)]


def test_holant_dp_matches_direct_summation():
    rng = np.random.default_rng(6)
    inst = _rand_loc(rng, 4, 3)
    S_ids, tail = (0, 2), {1}
    for seq in enumerate_sequences(inst.n, len(S_ids)):
        dp = holant_value(inst, S_ids, tail, seq)
        direct = oracle_holant_direct(inst, S_ids, tail, seq)
        assert dp == pytest.approx(direct, abs=1e-12)


def test_holant_guard():
    rows = np.full((30, 6), 1 / 6)
    inst = LocationalInstance(locations=np.arange(12.0).reshape(6, 2),
                              probs=rows)
    with pytest.raises(StateSpaceGuardExceeded):
        holant_value(inst, (0, 1, 2, 3, 4), {5}, (1, 1, 1, 1, 1, 25))


def test_prob_locational_matches_grouping_oracle():
    rng = np.random.default_rng(7)
    for _ in range(4):
        inst = _rand_loc(rng, int(rng.integers(2, 5)),
                         int(rng.integers(2, 5)))
        k, eps = 1, 0.5
        brute = dict(oracle_partition_masses(inst, k, eps).entries)
        for S, mass in brute.items():
            algo = prob_locational(S, inst, k, eps)
            assert algo == pytest.approx(mass, abs=1e-12)
        for S in [(0,), tuple(range(inst.m))]:
            algo = subset_probability(S, inst, k, eps)
            assert algo == pytest.approx(brute.get(S, 0.0), abs=1e-12)


def test_image_modes_agree_and_sum_to_one():
    rng = np.random.default_rng(8)
    inst = _rand_exist(rng, 9)
    ex = build_weighted_image(inst, 1, 0.5, mode="exhaustive")
    su = build_weighted_image(inst, 1, 0.5, mode="subsets")
    assert ex.total_weight == pytest.approx(1.0, abs=1e-9)
    assert su.total_weight == pytest.approx(1.0, abs=1e-9)
    dex, dsu = dict(ex.entries), dict(su.entries)
    for S in set(dex) | set(dsu):
        assert dex.get(S, 0.0) == pytest.approx(dsu.get(S, 0.0), abs=1e-12)


def test_deterministic_instance_single_class():
    inst = ExistentialInstance(points=[[0.0, 0.0], [9.0, 2.0], [1.0, 7.0]],
                               probs=np.ones(3))
    image = build_weighted_image(inst, 1, 0.5)
    assert len(image.entries) == 1
    assert image.entries[0][1] == pytest.approx(1.0)


def test_image_cost_sandwich():
    rng = np.random.default_rng(9)
    inst = _rand_exist(rng, 10)
    eps = 0.5
    image = build_weighted_image(inst, 1, eps, mode="subsets")
    for _ in range(200):
        F = CenterSet(centers=rng.uniform(-12, 12, (1, 2)))
        approx = image_cost(image, inst, F)
        exact = expected_objective_exact(inst, F).value
        assert (1 - eps) * exact - 1e-9 <= approx <= (1 + eps) * exact + 1e-9


def test_image_cost_definition():
    inst = ExistentialInstance(points=[[0.0], [4.0]], probs=[0.5, 0.5])
    image = build_weighted_image(inst, 1, 0.5)
    F = CenterSet(centers=[[0.0]])
    manual = sum(w * kcenter_value(inst.points[list(ids)], F)
                 for ids, w in image.entries if ids)
    assert image_cost(image, inst, F) == pytest.approx(manual)
