"""Generalized k-median over weighted collections of point sets.

An instance is a weighted collection of finite point sets; the cost of a
k-point center set F is sum_i w_i * max_{s in S_i} d(s, F).  The module
provides sensitivity estimates, importance-sampling coresets, exhaustive
candidate-coreset enumeration, numerical solvers, and the end-to-end
stochastic k-center pipeline built on the partition module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np
from scipy.optimize import minimize

from .errors import EnumerationGuardExceeded, ZeroCostCandidate
from .model import CenterSet, ExistentialInstance, Instance
from .objective import expected_objective_exact, shape_distances
from .partition import WeightedImage, build_weighted_image

MAX_CANDIDATE_STREAM = 10 ** 7
MAX_DISCRETE_SUBSETS = 10 ** 5


@dataclass(frozen=True)
class WeightedCollection:
    sets: tuple  # tuple of (n_i, d) arrays; empty sets allowed (cost 0)
    weights: np.ndarray

    def __post_init__(self):
        sets = tuple(np.atleast_2d(np.asarray(s, dtype=float)) if np.size(s)
                     else np.zeros((0, self._dim_guess())) for s in self.sets)
        w = np.asarray(self.weights, dtype=float)
        if len(sets) != len(w):
            raise ValueError("one weight per set required")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "weights", w)

    def _dim_guess(self) -> int:
        for s in self.sets:
            if np.size(s):
                return np.atleast_2d(np.asarray(s)).shape[1]
        return 1

    @property
    def size(self) -> int:
        return len(self.sets)

    @property
    def max_set_size(self) -> int:
        return max((s.shape[0] for s in self.sets), default=0)

    @property
    def d(self) -> int:
        return self._dim_guess()

    def union_points(self) -> np.ndarray:
        nonempty = [s for s in self.sets if s.shape[0]]
        return np.vstack(nonempty) if nonempty else np.zeros((0, self.d))


def collection_from_image(image: WeightedImage,
                          instance: Instance) -> WeightedCollection:
    support = instance.support_points
    sets, weights = [], []
    for ids, w in image.entries:
        if w > 0.0:
            sets.append(support[list(ids)] if ids else np.zeros((0, support.shape[1])))
            weights.append(w)
    return WeightedCollection(sets=tuple(sets), weights=np.array(weights))


@dataclass(frozen=True)
class SensitivityEstimate:
    values: np.ndarray
    kind: str  # "BruteForceLower" | "ProjectionUpper" | "Uniform"

    @property
    def q(self) -> np.ndarray:
        """Sampling scores: sensitivity estimate plus the 1/N floor."""
        return self.values + 1.0 / len(self.values)


@dataclass(frozen=True)
class GeneralizedCoreset:
    indices: tuple[int, ...]
    weights: np.ndarray

    def as_collection(self, S: WeightedCollection) -> WeightedCollection:
        return WeightedCollection(
            sets=tuple(S.sets[i] for i in self.indices),
            weights=np.asarray(self.weights, dtype=float))


def set_cost(points: np.ndarray, F: CenterSet) -> float:
    if points.shape[0] == 0:
        return 0.0
    return float(shape_distances(points, F).max())


def gkm_cost(S: WeightedCollection, F: CenterSet) -> float:
    return float(sum(w * set_cost(s, F) for s, w in zip(S.sets, S.weights)))


def sensitivity_bruteforce(S: WeightedCollection,
                           candidate_family) -> SensitivityEstimate:
    """Max over the explicit family of each set's cost share.

    A certified lower bound on the true sensitivities (the supremum ranges
    over all center sets, the family over finitely many).
    """
    if not candidate_family:
        raise ValueError("candidate family must be nonempty")
    values = np.zeros(S.size)
    for F in candidate_family:
        total = gkm_cost(S, F)
        if total <= 0.0:
            raise ZeroCostCandidate("candidate with zero total cost")
        for i, (s, w) in enumerate(zip(S.sets, S.weights)):
            values[i] = max(values[i], w * set_cost(s, F) / total)
    return SensitivityEstimate(values=values, kind="BruteForceLower")


def sensitivity_projection_upper(S: WeightedCollection, k: int,
                                 F_hat: CenterSet | None = None) -> SensitivityEstimate:
    """Heuristic upper bound from an approximate optimum F_hat.

    Each set is reduced to its farthest point, projected to its nearest
    center of F_hat; the projected weighted k-median instance has the usual
    distance-share plus cluster-mass sensitivity bound.  Falls back to the
    uniform estimate when F_hat fits every set exactly.
    """
    if F_hat is None:
        F_hat, _ = solve_gkm(S, k)
    total = gkm_cost(S, F_hat)
    N = S.size
    if total <= 0.0:
        return SensitivityEstimate(values=np.full(N, 1.0 / N), kind="Uniform")
    # Nearest reference center of each set's farthest point; the projected
    # points coincide with centers, so their distance share vanishes and
    # only the cluster-mass term survives.
    nearest = np.zeros(N, dtype=int)
    for i, s in enumerate(S.sets):
        if s.shape[0] == 0:
            continue
        far = s[int(np.argmax(shape_distances(s, F_hat)))]
        diff = F_hat.centers - far
        nearest[i] = int(np.argmin((diff ** 2).sum(axis=1)))
    cluster_mass = np.zeros(F_hat.k)
    for i in range(N):
        cluster_mass[nearest[i]] += S.weights[i]
    values = np.empty(N)
    for i, (s, w) in enumerate(zip(S.sets, S.weights)):
        share = w * set_cost(s, F_hat) / total
        mass_term = 2.0 * w / cluster_mass[nearest[i]] if cluster_mass[nearest[i]] > 0 else 0.0
        values[i] = min(max(share + mass_term, 0.0), 1.0)
    return SensitivityEstimate(values=values, kind="ProjectionUpper")


def importance_sample_coreset(S: WeightedCollection, q: SensitivityEstimate,
                              M: int, rng: np.random.Generator) -> GeneralizedCoreset:
    """M draws proportional to q, duplicates merged by summing weights."""
    if M < 1:
        raise ValueError("M must be >= 1")
    scores = q.q
    total_q = float(scores.sum())
    probs = scores / total_q
    draws = rng.choice(S.size, size=M, p=probs)
    acc: dict[int, float] = {}
    for i in draws:
        i = int(i)
        acc[i] = acc.get(i, 0.0) + total_q * S.weights[i] / (scores[i] * M)
    indices = tuple(sorted(acc))
    return GeneralizedCoreset(indices=indices,
                              weights=np.array([acc[i] for i in indices]))


def default_weight_exponent(eps: float, M: int, N: int, k: int) -> int:
    """Default exponent-grid range for enumerated candidate weights."""
    return math.ceil((10.0 / eps) * (math.log(max(M, 2)) + math.log(max(N, 2))
                                     + math.log(max(k, 2))))


def enumerate_candidate_coresets(S: WeightedCollection, M: int, L_exp: int,
                                 eps: float):
    """Every subcollection of size <= M crossed with every weight-exponent
    tuple, in lexicographic order; weights w' = (1+eps)^a * w / M."""
    if S.size == 0:
        return
    if S.size ** M * M ** (L_exp + 1) > MAX_CANDIDATE_STREAM:
        raise EnumerationGuardExceeded(
            f"candidate stream {S.size}^{M} * {M}^{L_exp + 1} exceeds cap")
    for size in range(1, M + 1):
        for idx in combinations(range(S.size), size):
            for exps in product(range(L_exp + 1), repeat=size):
                weights = np.array([(1.0 + eps) ** a * S.weights[i] / M
                                    for i, a in zip(idx, exps)])
                yield GeneralizedCoreset(indices=idx, weights=weights)


# ---------------------------------------------------------------------------
# Solvers


def _lex_key(centers: np.ndarray):
    return tuple(tuple(float(c) for c in row)
                 for row in centers[np.lexsort(centers.T[::-1])])


def _solve_k1(S: WeightedCollection, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Minimize the convex map c -> sum_i w_i max_{s in S_i} ||s - c||."""
    d = S.d
    pts = S.union_points()
    if pts.shape[0] == 0:
        return np.zeros(d), 0.0

    def fval(c):
        F = CenterSet(centers=c.reshape(1, -1))
        return gkm_cost(S, F)

    c0 = pts.mean(axis=0)
    # Init at the weighted centroid of per-set farthest points from c0.
    fars, ws = [], []
    for s, w in zip(S.sets, S.weights):
        if s.shape[0]:
            far = s[int(np.argmax(np.linalg.norm(s - c0, axis=1)))]
            fars.append(far)
            ws.append(w)
    if fars:
        c0 = np.average(np.array(fars), axis=0, weights=np.array(ws))
    best_c, best_v = c0.copy(), fval(c0)
    # Subgradient descent with step halving on rejected moves.
    c = c0.copy()
    scale = max(float(np.linalg.norm(pts - c0, axis=1).max()), 1e-12)
    step = 0.5 * scale
    for _ in range(200):
        g = np.zeros(d)
        for s, w in zip(S.sets, S.weights):
            if s.shape[0] == 0:
                continue
            dists = np.linalg.norm(s - c, axis=1)
            far = s[int(np.argmax(dists))]
            norm = np.linalg.norm(c - far)
            if norm > 1e-15:
                g += w * (c - far) / norm
        gn = np.linalg.norm(g)
        if gn < 1e-13 or step < 1e-14 * scale:
            break
        cand = c - step * g / gn
        v = fval(cand)
        if v < best_v - tol * max(best_v, 1.0):
            best_c, best_v = cand, v
            c = cand
        else:
            step *= 0.5
    res = minimize(fval, best_c, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    if res.fun <= best_v:
        best_c, best_v = np.asarray(res.x), float(res.fun)
    return best_c, best_v


def _discrete_pass(S: WeightedCollection, k: int):
    pts = S.union_points()
    uniq = np.unique(pts, axis=0)
    if math.comb(uniq.shape[0], k) > MAX_DISCRETE_SUBSETS:
        return None
    best = None
    for idx in combinations(range(uniq.shape[0]), k):
        F = CenterSet(centers=uniq[list(idx)])
        v = gkm_cost(S, F)
        if best is None or v < best[1] - 1e-15 or \
                (abs(v - best[1]) <= 1e-15 and _lex_key(F.centers) < _lex_key(best[0].centers)):
            best = (F, v)
    return best


def _alternating(S: WeightedCollection, k: int, F0: CenterSet,
                 rounds: int = 30) -> tuple[CenterSet, float]:
    F = F0
    value = gkm_cost(S, F)
    for _ in range(rounds):
        groups: dict[int, list[int]] = {}
        for i, s in enumerate(S.sets):
            if s.shape[0] == 0:
                continue
            far = s[int(np.argmax(shape_distances(s, F)))]
            j = int(np.argmin(((F.centers - far) ** 2).sum(axis=1)))
            groups.setdefault(j, []).append(i)
        new_centers = F.centers.copy()
        for j, members in groups.items():
            sub = WeightedCollection(sets=tuple(S.sets[i] for i in members),
                                     weights=S.weights[list(members)])
            c, _ = _solve_k1(sub)
            new_centers[j] = c
        F2 = CenterSet(centers=new_centers)
        v2 = gkm_cost(S, F2)
        if v2 >= value - 1e-12 * max(value, 1.0):
            break
        F, value = F2, v2
    return F, value


def _exact_tiny(S: WeightedCollection, k: int):
    """Enumerate per-set (argmax point, responsible center) descriptors and
    minimize each resulting smooth piece; infeasibility is handled by always
    scoring the true cost of the produced centers."""
    choices = []
    for s in S.sets:
        if s.shape[0] == 0:
            choices.append([None])
        else:
            choices.append([(b, j) for b in range(s.shape[0]) for j in range(k)])
    total = 1
    for c in choices:
        total *= len(c)
        if total > 20000:
            return None
    best = None
    for combo in product(*choices):
        per_center: dict[int, list[tuple[np.ndarray, float]]] = {}
        for i, pick in enumerate(combo):
            if pick is None:
                continue
            b, j = pick
            per_center.setdefault(j, []).append((S.sets[i][b], S.weights[i]))
        centers = np.zeros((k, S.d))
        for j in range(k):
            if j in per_center:
                pts = np.array([p for p, _ in per_center[j]])
                ws = np.array([w for _, w in per_center[j]])
                sub = WeightedCollection(
                    sets=tuple(p.reshape(1, -1) for p in pts), weights=ws)
                centers[j], _ = _solve_k1(sub)
            else:
                centers[j] = S.union_points().mean(axis=0)
        F = CenterSet(centers=centers)
        v = gkm_cost(S, F)
        if best is None or v < best[1] - 1e-15 or \
                (abs(v - best[1]) <= 1e-15 and _lex_key(F.centers) < _lex_key(best[0].centers)):
            best = (F, v)
    return best


def solve_gkm(S: WeightedCollection, k: int,
              exact_tiny: bool = False) -> tuple[CenterSet, float]:
    """Best center set found; deterministic for fixed inputs."""
    if S.size == 0:
        raise ValueError("collection must be nonempty")
    if all(s.shape[0] == 0 for s in S.sets):
        return CenterSet(centers=np.zeros((k, S.d))), 0.0
    if k == 1:
        c, v = _solve_k1(S)
        return CenterSet(centers=c.reshape(1, -1)), float(v)
    candidates = []
    disc = _discrete_pass(S, k)
    if disc is not None:
        candidates.append(disc)
        candidates.append(_alternating(S, k, disc[0]))
    if exact_tiny:
        tiny = _exact_tiny(S, k)
        if tiny is not None:
            candidates.append(tiny)
    if not candidates:
        pts = S.union_points()
        F0 = CenterSet(centers=pts[np.linspace(0, pts.shape[0] - 1, k).astype(int)])
        candidates.append(_alternating(S, k, F0))
    best = min(candidates, key=lambda fv: (fv[1], _lex_key(fv[0].centers)))
    return best[0], float(best[1])


# ---------------------------------------------------------------------------
# End-to-end stochastic k-center


def _polish_on_exact(instance: Instance, k: int, F: CenterSet) -> CenterSet:
    """Local refinement of the centers directly on the exact expected
    objective; cheap because each evaluation is a sort."""
    d = instance.d

    def fval(flat):
        return expected_objective_exact(
            instance, CenterSet(centers=flat.reshape(k, d))).value

    res = minimize(fval, F.centers.reshape(-1), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return CenterSet(centers=np.asarray(res.x).reshape(k, d))


def skc_pipeline(instance: Instance, k: int, eps: float,
                 strategy: str = "full", seed: int = 0,
                 M: int | None = None, L_exp: int | None = None,
                 image_mode: str | None = None):
    """Full stochastic k-center pipeline.

    Builds the coreset-class image, derives candidate collections per the
    strategy, solves each, and returns the candidate minimizing the exact
    expected objective.  Returns (CenterSet, value, info dict).
    """
    if isinstance(instance, ExistentialInstance) and float(instance.probs.max(initial=0.0)) == 0.0:
        F = CenterSet(centers=np.zeros((k, instance.d)))
        return F, 0.0, {"strategy": strategy, "candidates_evaluated": 0}
    if image_mode is None:
        image_mode = "exhaustive" if instance.support_points.shape[0] <= 14 \
            and isinstance(instance, ExistentialInstance) else "subsets"
    image = build_weighted_image(instance, k, eps, mode=image_mode)
    S = collection_from_image(image, instance)
    collections = []
    if strategy == "full" or S.size == 0:
        collections.append(S)
    elif strategy == "sampling":
        M_eff = M if M is not None else max(2 * S.size // 3, 1)
        est = sensitivity_projection_upper(S, k)
        rng = np.random.default_rng(seed)
        core = importance_sample_coreset(S, est, M_eff, rng)
        collections.append(core.as_collection(S))
        collections.append(S)  # keep the safe fallback candidate
    elif strategy == "enumerate":
        M_eff = M if M is not None else min(S.size, 2)
        L_eff = L_exp if L_exp is not None else min(
            default_weight_exponent(eps, M_eff, S.size, k), 6)
        # Screen the stream cheaply: keep the candidate whose cost tracks the
        # full image best over a probe grid, and solve only that one.
        from .oracle import center_grid
        support = instance.support_points
        probes = np.unique(np.vstack([center_grid(support, 5), support]),
                           axis=0)
        K_rows = np.stack([
            np.sqrt(((s[:, None, :] - probes[None, :, :]) ** 2).sum(axis=2))
            .max(axis=0) if s.shape[0] else np.zeros(probes.shape[0])
            for s in S.sets])
        full_cost = S.weights @ K_rows
        mask = full_cost > 1e-12
        best_core, best_dev = None, math.inf
        for core in enumerate_candidate_coresets(S, M_eff, L_eff, eps):
            cand_cost = np.zeros(probes.shape[0])
            for i, wi in zip(core.indices, core.weights):
                cand_cost += wi * K_rows[i]
            dev = float(np.abs(cand_cost[mask] / full_cost[mask] - 1.0).max())
            if dev < best_dev - 1e-15:
                best_core, best_dev = core, dev
        if best_core is not None:
            collections.append(best_core.as_collection(S))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    extra_starts = []
    if k == 1:
        # The enclosing-ball center of the support is the exact optimum for
        # deterministic instances and a strong start elsewhere.
        from .oracle import minimum_enclosing_ball
        c, _ = minimum_enclosing_ball(instance.support_points)
        extra_starts.append(CenterSet(centers=c.reshape(1, -1)))
    best = None
    evaluated = 0
    starts = [(coll, None) for coll in collections] + \
             [(None, F0) for F0 in extra_starts]
    for coll, F0 in starts:
        if coll is not None:
            if coll.size == 0 or all(s.shape[0] == 0 for s in coll.sets):
                continue
            F, _ = solve_gkm(coll, k)
        else:
            F = F0
        F = _polish_on_exact(instance, k, F)
        v = expected_objective_exact(instance, F).value
        evaluated += 1
        if best is None or v < best[1] - 1e-15 or \
                (abs(v - best[1]) <= 1e-15 and _lex_key(F.centers) < _lex_key(best[0].centers)):
            best = (F, v)
    if best is None:
        best = (CenterSet(centers=np.zeros((k, instance.d))), 0.0)
    return best[0], float(best[1]), {"strategy": strategy,
                                     "candidates_evaluated": evaluated}
