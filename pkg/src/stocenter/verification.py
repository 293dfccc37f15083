"""Acceptance checks shared by the CLI verify command and the test suite.

Each criterion is a seeded, deterministic function returning a CheckResult;
run_all executes them in order.  The quick scale trims instance counts for
interactive runs, the full scale uses the acceptance counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gkm import (WeightedCollection, enumerate_candidate_coresets,
                  skc_pipeline)
from .grid_coreset import CoresetBuilder, coreset_image_size_bound
from .jflat import (build_S1, build_S2, sjfc_pipeline, sweep_convexK)
from .model import (CenterSet, ExistentialInstance, Flat, LocationalInstance)
from .objective import (expected_flatcenter_exact, expected_objective_exact,
                        shape_distances)
from .oracle import minimum_enclosing_ball, oracle_partition_masses
from .partition import (build_weighted_image, holant_value,
                        membership_check, forbidden_and_tail_sets)
from .serialize import dumps_json


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


COUNTS = {
    "full": dict(c1_exist=200, c1_F=50, c1_loc=50, c1_locF=20,
                 c2_reals=200, c2_F=500, c4_inst=100, c5_inst=50,
                 c6_F=200, c7_inst=100, c8_inst=10, c9_inst=50,
                 c10_inst=20, c10_F=100, c11_inst=20, c11_N=2000,
                 c11_F=100),
    "quick": dict(c1_exist=20, c1_F=10, c1_loc=10, c1_locF=5,
                  c2_reals=20, c2_F=60, c4_inst=10, c5_inst=6,
                  c6_F=40, c7_inst=12, c8_inst=3, c9_inst=5,
                  c10_inst=4, c10_F=20, c11_inst=3, c11_N=300,
                  c11_F=20),
}


# ---------------------------------------------------------------------------
# Random-instance helpers (all seeded)


def _rand_exist(rng, n, d, prob_lo=0.05, prob_hi=0.95, scale=10.0):
    return ExistentialInstance(
        points=rng.uniform(-scale, scale, size=(n, d)),
        probs=rng.uniform(prob_lo, prob_hi, size=n))


def _rand_loc(rng, n, m, d, scale=10.0):
    rows = rng.uniform(0.05, 1.0, size=(n, m))
    rows /= rows.sum(axis=1, keepdims=True)
    return LocationalInstance(
        locations=rng.uniform(-scale, scale, size=(m, d)), probs=rows)


def _rand_centers(rng, count, k, d, scale=12.0):
    return rng.uniform(-scale, scale, size=(count, k, d))


@lru_cache(maxsize=None)
def _mask_matrix(n: int) -> np.ndarray:
    idx = np.arange(2 ** n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(bool)


def _exist_mask_probs(probs: np.ndarray) -> np.ndarray:
    out = np.ones(1)
    for p in probs:
        out = np.concatenate([out * (1.0 - p), out * p])
    return out


def _enum_value_exist(instance: ExistentialInstance, dists: np.ndarray,
                      masks=None, mprobs=None) -> float:
    """Expected max distance by full 2^n enumeration, vectorized."""
    if masks is None:
        masks = _mask_matrix(instance.n)
    if mprobs is None:
        mprobs = _exist_mask_probs(instance.probs)
    vals = np.where(masks, dists[None, :], -np.inf).max(axis=1)
    vals[0] = 0.0  # empty realization
    return float(mprobs @ np.maximum(vals, 0.0))


def _assignment_matrix(n: int, m: int) -> np.ndarray:
    idx = np.arange(m ** n, dtype=np.int64)
    cols = []
    for _ in range(n):
        cols.append(idx % m)
        idx //= m
    return np.stack(cols, axis=1)


def _enum_value_loc(instance: LocationalInstance, dists: np.ndarray) -> float:
    assign = _assignment_matrix(instance.n, instance.m)
    pr = np.prod(instance.probs[np.arange(instance.n)[None, :], assign],
                 axis=1)
    vals = dists[assign].max(axis=1)
    return float(pr @ vals)


def _min_center_dists(points: np.ndarray, F_batch: np.ndarray) -> np.ndarray:
    """(n_points, n_F) min distance to each batch center set."""
    diff = points[:, None, None, :] - F_batch[None, :, :, :]
    return np.sqrt((diff ** 2).sum(axis=3)).min(axis=2)


# ---------------------------------------------------------------------------
# Criteria


def criterion_1(scale: str, seed: int = 101, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _i in range(c["c1_exist"]):
        n = int(rng.integers(4, 16))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 3))
        inst = _rand_exist(rng, n, d)
        masks = _mask_matrix(n)
        mprobs = _exist_mask_probs(inst.probs)
        F_batch = _rand_centers(rng, c["c1_F"], k, d)
        dmat = _min_center_dists(inst.points, F_batch)
        for f in range(c["c1_F"]):
            F = CenterSet(centers=F_batch[f])
            exact = expected_objective_exact(inst, F).value
            enum = _enum_value_exist(inst, dmat[:, f], masks, mprobs)
            worst = max(worst, abs(exact - enum))
    for _i in range(c["c1_loc"]):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, 5))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 3))
        inst = _rand_loc(rng, n, m, d)
        F_batch = _rand_centers(rng, c["c1_locF"], k, d)
        dmat = _min_center_dists(inst.locations, F_batch)
        for f in range(c["c1_locF"]):
            F = CenterSet(centers=F_batch[f])
            exact = expected_objective_exact(inst, F).value
            enum = _enum_value_loc(inst, dmat[:, f])
            worst = max(worst, abs(exact - enum))
    ok = worst <= 1e-9
    return CheckResult("criterion 1 exact-objective equivalence", ok,
                       f"max |exact - enumeration| = {worst:.3e} (tol 1e-9)")


def _c2_cases(scale: str, seed: int):
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    for i in range(c["c2_reals"]):
        n = int(rng.integers(8, 41))
        k = 1 + i % 2
        eps = (0.25, 0.5)[(i // 2) % 2]
        inst = _rand_exist(rng, n, 2)
        builder = CoresetBuilder(inst.points, k, eps)
        mask = rng.random(n) < 0.6
        if not mask.any():
            mask[0] = True
        ids = tuple(int(v) for v in np.flatnonzero(mask))
        yield rng, inst, builder, ids, k, eps


def criterion_2(scale: str, seed: int = 102, **_) -> CheckResult:
    c = COUNTS[scale]
    violations = 0
    size_viol = 0
    for rng, inst, builder, ids, k, eps in _c2_cases(scale, seed):
        out = builder.build(ids)
        if out.size > coreset_image_size_bound(k, 2, eps):
            size_viol += 1
        F_batch = _rand_centers(rng, c["c2_F"], k, 2)
        P = inst.points[list(ids)]
        E = inst.points[list(out.coreset)]
        KP = _min_center_dists(P, F_batch).max(axis=0)
        KE = _min_center_dists(E, F_batch).max(axis=0)
        violations += int(np.sum(KP > (1.0 + eps) * KE * (1 + 1e-12)))
    ok = violations == 0 and size_viol == 0
    return CheckResult("criterion 2 additive-coreset coverage", ok,
                       f"{violations} coverage violations, "
                       f"{size_viol} size-bound violations")


def criterion_3(scale: str, seed: int = 102, **_) -> CheckResult:
    bad = 0
    for _rng, _inst, builder, ids, _k, eps in _c2_cases(scale, seed):
        out = builder.build(ids)
        r_P = builder.r_of(ids)
        r_E = builder.r_of(out.coreset)
        if not ((1.0 - eps) * r_P <= r_E <= r_P):
            bad += 1
            continue
        rerun = builder.build(out.coreset)
        if rerun.coreset != out.coreset or rerun.grid != out.grid \
                or rerun.cells != out.cells:
            bad += 1
    return CheckResult("criterion 3 r-monotonicity and grid stability",
                       bad == 0, f"{bad} violations")


def _c4_instances(scale: str, seed: int):
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    for i in range(c["c4_inst"]):
        n = int(rng.integers(6, 13))
        k = 1 + i % 2
        eps = (0.25, 0.5)[(i // 2) % 2]
        yield rng, _rand_exist(rng, n, 2), k, eps


def criterion_4(scale: str, seed: int = 104, perturb: float = 0.0,
                **_) -> CheckResult:
    worst = 0.0
    worst_sum = 0.0
    for _rng, inst, k, eps in _c4_instances(scale, seed):
        algo = dict(build_weighted_image(inst, k, eps, mode="subsets").entries)
        if perturb and algo:
            key = max(algo, key=algo.get)
            algo[key] *= 1.0 + perturb
        brute = dict(oracle_partition_masses(inst, k, eps).entries)
        keys = set(algo) | set(brute)
        for key in keys:
            worst = max(worst, abs(algo.get(key, 0.0) - brute.get(key, 0.0)))
        worst_sum = max(worst_sum, abs(sum(algo.values()) - 1.0))
    ok = worst <= 1e-12 and worst_sum <= 1e-9
    return CheckResult("criterion 4 coreset-class probabilities (existential)",
                       ok, f"max mass error {worst:.3e} (tol 1e-12), "
                           f"max sum error {worst_sum:.3e} (tol 1e-9)")


def criterion_5(scale: str, seed: int = 105, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    worst = 0.0
    z_worst = 0.0
    from .oracle import oracle_holant_direct
    from .partition import enumerate_sequences
    for i in range(c["c5_inst"]):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(2, 5))
        k = 1
        eps = 0.5
        inst = _rand_loc(rng, n, m, 2)
        algo = dict(build_weighted_image(inst, k, eps, mode="subsets").entries)
        brute = dict(oracle_partition_masses(inst, k, eps).entries)
        for key in set(algo) | set(brute):
            worst = max(worst, abs(algo.get(key, 0.0) - brute.get(key, 0.0)))
        # per-sequence holant values on one Full class, if any
        for S in sorted(algo):
            verdict = membership_check(S, inst, k, eps)
            if verdict.kind != "Full":
                continue
            _, tail = forbidden_and_tail_sets(S, inst, k, eps, verdict)
            for seq in enumerate_sequences(n, len(S)):
                z_dp = holant_value(inst, S, tail, seq)
                z_direct = oracle_holant_direct(inst, S, tail, seq)
                z_worst = max(z_worst, abs(z_dp - z_direct))
            break
    ok = worst <= 1e-12 and z_worst <= 1e-12
    return CheckResult("criterion 5 locational occupancy DP", ok,
                       f"max mass error {worst:.3e}, "
                       f"max per-sequence error {z_worst:.3e} (tol 1e-12)")


def criterion_6(scale: str, seed: int = 104, perturb: float = 0.0,
                **_) -> CheckResult:
    c = COUNTS[scale]
    violations = 0
    for rng, inst, k, eps in _c4_instances(scale, seed):
        image = build_weighted_image(inst, k, eps, mode="subsets")
        entries = list(image.entries)
        if perturb and entries:
            # hit the heaviest nonempty class so the injected error actually
            # moves the estimated cost
            pos = max((i for i, (ids, _) in enumerate(entries) if ids),
                      key=lambda i: entries[i][1], default=0)
            ids0, w0 = entries[pos]
            entries[pos] = (ids0, w0 * (1.0 + perturb))
        F_batch = _rand_centers(rng, c["c6_F"], k, 2)
        dmat = _min_center_dists(inst.points, F_batch)  # (n, F)
        approx = np.zeros(c["c6_F"])
        for ids, w in entries:
            if ids:
                approx += w * dmat[list(ids)].max(axis=0)
        for f in range(c["c6_F"]):
            exact = expected_objective_exact(
                inst, CenterSet(centers=F_batch[f])).value
            lo = (1.0 - eps) * exact - 1e-9
            hi = (1.0 + eps) * exact + 1e-9
            if not (lo <= approx[f] <= hi):
                violations += 1
    return CheckResult("criterion 6 weighted-image cost sandwich",
                       violations == 0, f"{violations} violations")


def _rand_gkm(rng, max_sets=8, max_size=4, d=2) -> WeightedCollection:
    n_sets = int(rng.integers(2, max_sets + 1))
    sets, weights = [], []
    for _ in range(n_sets):
        sz = int(rng.integers(1, max_size + 1))
        sets.append(rng.uniform(-10, 10, size=(sz, d)))
        weights.append(float(rng.uniform(0.1, 2.0)))
    return WeightedCollection(sets=tuple(sets), weights=np.array(weights))


def _oracle_sens_fast(S: WeightedCollection, k: int,
                      resolution: int = 7) -> np.ndarray:
    """Vectorized brute-force sensitivity lower bounds."""
    from .oracle import center_grid
    from itertools import combinations
    pts = np.unique(S.union_points(), axis=0)
    cand = np.unique(np.vstack([center_grid(pts, resolution, margin=1.0),
                                pts]), axis=0)
    dist = [np.sqrt(((s[:, None, :] - cand[None, :, :]) ** 2).sum(axis=2))
            for s in S.sets]  # per set: (n_i, C)
    if k == 1:
        K = np.stack([d.max(axis=0) for d in dist])        # (sets, C)
    else:
        combos = np.array(list(combinations(range(cand.shape[0]), k)))
        K = np.stack([
            np.minimum.reduce([d[:, combos[:, j]] for j in range(k)])
            .max(axis=0) for d in dist])                   # (sets, n_combos)
    cost = S.weights @ K
    good = cost > 1e-12
    shares = (S.weights[:, None] * K[:, good]) / cost[good]
    return shares.max(axis=1)


def criterion_7(scale: str, seed: int = 107, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for i in range(c["c7_inst"]):
        k = 1 + i % 2
        S = _rand_gkm(rng)
        total = float(_oracle_sens_fast(S, k).sum())
        worst = max(worst, total - (4 * k + 3))
    ok = worst <= 1e-9
    return CheckResult("criterion 7 total sensitivity cap", ok,
                       f"max excess over 4k+3 = {worst:.3e} (tol 1e-9)")


def criterion_8(scale: str, seed: int = 108, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    eps = 0.5
    failures = 0
    for _i in range(c["c8_inst"]):
        S = _rand_gkm(rng, max_sets=4, max_size=3)
        from .oracle import center_grid
        cand = np.vstack([center_grid(S.union_points(), 5, margin=2.0),
                          S.union_points()])
        K = np.stack([
            np.sqrt(((s[:, None, :] - cand[None, :, :]) ** 2).sum(axis=2))
            .max(axis=0) for s in S.sets])  # (sets, F) for k=1
        cost_full = S.weights @ K
        found = False
        for core in enumerate_candidate_coresets(S, M=2, L_exp=6, eps=eps):
            w = np.zeros(S.size)
            for i, wi in zip(core.indices, core.weights):
                w[i] = wi
            cost_c = w @ K
            lo = (1.0 - 3 * eps) * cost_full - 1e-9
            hi = (1.0 + 3 * eps) * cost_full + 1e-9
            if np.all((cost_c >= lo) & (cost_c <= hi)):
                found = True
                break
        if not found:
            failures += 1
    return CheckResult("criterion 8 enumerated-coreset existence",
                       failures == 0, f"{failures} instances without a "
                                      f"(1 +- 3 eps) candidate")


def criterion_9(scale: str, seed: int = 109, **_) -> CheckResult:
    from .oracle import oracle_solver_instance
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    eps = 0.5
    worst_ratio = 0.0
    det_err = 0.0
    for i in range(c["c9_inst"]):
        n = int(rng.integers(4, 11))
        deterministic = i % 5 == 4
        if deterministic:
            inst = ExistentialInstance(
                points=rng.uniform(-10, 10, size=(n, 2)), probs=np.ones(n))
        else:
            inst = _rand_exist(rng, n, 2)
        F, value, _info = skc_pipeline(inst, 1, eps, strategy="full")
        if deterministic:
            _, r = minimum_enclosing_ball(inst.points)
            det_err = max(det_err, abs(value - r))
        else:
            _oF, ov = oracle_solver_instance(inst, 1, resolution=15)
            if ov > 0:
                worst_ratio = max(worst_ratio, value / ov)
    ok = worst_ratio <= 1.0 + eps and det_err <= 1e-6
    return CheckResult("criterion 9 end-to-end k-center pipeline", ok,
                       f"max ratio to grid oracle {worst_ratio:.6f} "
                       f"(cap {1 + eps}), deterministic error "
                       f"{det_err:.2e} (tol 1e-6)")


def _rand_flat(rng, j, d, scale=12.0) -> Flat:
    base = rng.uniform(-scale, scale, size=d)
    if j == 0:
        return Flat(j=0, base=base)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return Flat(j=1, base=base, basis=v.reshape(1, -1))


def criterion_10(scale: str, seed: int = 110, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    eps = 0.5
    violations = 0
    for i in range(c["c10_inst"]):
        n = int(rng.integers(4, 12))
        d = 2
        probs = rng.uniform(0.01, 1.0, size=n)
        probs *= rng.uniform(0.2, 0.9) * eps / probs.sum()
        inst = ExistentialInstance(points=rng.uniform(-10, 10, size=(n, d)),
                                   probs=probs)
        j = i % 2
        for _f in range(c["c10_F"]):
            F = _rand_flat(rng, j, d)
            dists = shape_distances(inst.points, F)
            surrogate = float(inst.probs @ dists)
            exact = expected_flatcenter_exact(inst, F).value
            if not ((1 - eps) * exact - 1e-12 <= surrogate
                    <= (1 + eps) * exact + 1e-12):
                violations += 1
    return CheckResult("criterion 10 low-mass linear surrogate",
                       violations == 0, f"{violations} violations")


def criterion_11(scale: str, seed: int = 111, **_) -> CheckResult:
    c = COUNTS[scale]
    rng = np.random.default_rng(seed)
    eps = 0.2
    max_outside = 0.0
    max_delta = 0.0
    for _i in range(c["c11_inst"]):
        n = int(rng.integers(10, 31))
        # a few near-zero probabilities so the sweep leaves points outside K
        # and the weighted outside coreset is exercised
        inst = _rand_exist(rng, n, 2, prob_lo=0.0005)
        K = sweep_convexK(inst, 0, eps, net_size=32)
        inside = K.inside_mask(inst.points)
        max_outside = max(max_outside, float(inst.probs[~inside].sum()))
        s1 = build_S1(inst, K, eps, c["c11_N"], seed=seed + _i)
        s2_pts, s2_w = build_S2(inst, K, 0, eps)
        # stack nonempty kernels for batched evaluation
        nonempty = [E for E in s1 if E.shape[0]]
        sizes = np.array([E.shape[0] for E in nonempty], dtype=int)
        stacked = np.vstack(nonempty) if nonempty else np.zeros((0, 2))
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]) if len(sizes) \
            else np.zeros(0, dtype=int)
        for _f in range(c["c11_F"]):
            F = _rand_flat(rng, 0, 2)
            exact = expected_flatcenter_exact(inst, F).value
            est = 0.0
            if stacked.shape[0]:
                dists = shape_distances(stacked, F)
                est += float(np.maximum.reduceat(dists, starts).sum()) \
                    / c["c11_N"]
            if s2_pts.shape[0]:
                est += float(s2_w @ shape_distances(s2_pts, F))
            if exact > 0:
                max_delta = max(max_delta,
                                abs(est / exact - 1.0) - 4 * eps)
    max_delta = max(max_delta, 0.0)
    # deterministic pipeline vs the enclosing-ball reference
    rng2 = np.random.default_rng(seed + 999)
    pts = rng2.uniform(-8, 8, size=(12, 2))
    det = ExistentialInstance(points=pts, probs=np.ones(12))
    _F, value, _ = sjfc_pipeline(det, 0, eps, seed=seed, N=50)
    _c, r = minimum_enclosing_ball(pts)
    det_err = abs(value - r)
    ok = max_outside <= eps and max_delta <= eps and det_err <= 1e-4
    return CheckResult("criterion 11 sampled-kernel estimator", ok,
                       f"outside mass {max_outside:.4f} (cap {eps}), "
                       f"slack delta {max_delta:.4f} (cap {eps}), "
                       f"deterministic error {det_err:.2e} (tol 1e-4)")


def criterion_12(scale: str, seed: int = 112, **_) -> CheckResult:
    from .cli import bench_rows
    from .serialize import rows_to_csv

    def bench_text():
        header, rows = bench_rows(seed, eps_list=(0.5,), n_list=(6, 8),
                                  k_list=(1,))
        drop = header.index("wall_seconds")
        header2 = header[:drop] + header[drop + 1:]
        rows2 = [r[:drop] + r[drop + 1:] for r in rows]
        return rows_to_csv(header2, rows2)

    def verify_text():
        rng = np.random.default_rng(seed)
        inst = _rand_exist(rng, 8, 2)
        F, value, info = skc_pipeline(inst, 1, 0.5, strategy="sampling",
                                      seed=seed)
        jF, jvalue, jinfo = sjfc_pipeline(inst, 0, 0.3, seed=seed, N=60)
        return dumps_json({
            "centers": F.centers, "value": value, "info": info,
            "flat_base": jF.base, "jvalue": jvalue, "jinfo": jinfo,
        })

    ok = bench_text() == bench_text() and verify_text() == verify_text()
    return CheckResult("criterion 12 determinism of seeded runs", ok,
                       "byte-identical" if ok else "outputs differ between runs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
            criterion_11, criterion_12]


def run_all(scale: str = "quick", perturb: float = 0.0) -> list[CheckResult]:
    return [fn(scale, perturb=perturb) for fn in CRITERIA]
