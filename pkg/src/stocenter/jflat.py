"""Coresets and solvers for the stochastic minimum j-flat-center problem.

Two regimes, split on the total probability mass B of the instance.  When
B < eps the objective is within (1 +- eps) of the linear surrogate
sum_i p_i d(s_i, F), so a weighted flat-median coreset suffices (Case 1).
Otherwise (Case 2) the points are lifted so squared flat distance becomes
affine, a convex region K cutting off at most eps probability mass is swept
out, sampled realizations inside K are reduced to directional kernels (S1),
and the outside points get a Case-1 style weighted coreset (S2).  Only
j in {0, 1} is supported; the lift dimension grows too fast beyond that.

The locational model always takes Case 2 with per-location masses
p_i = sum over nodes of probs[node, i].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import CaseMismatch, EmptyK, SchemaError
from .model import ExistentialInstance, Flat, Instance
from .objective import expected_flatcenter_exact, shape_distances

NET_SEED = 0xC0FFEE


# ---------------------------------------------------------------------------
# Linearization


@dataclass(frozen=True)
class LinearizationMap:
    """Coordinate lift making d(x, F)^2 affine in the lifted coordinates."""

    j: int
    d: int

    def __post_init__(self):
        if self.j not in (0, 1):
            raise SchemaError("only j in {0, 1} is supported")

    @property
    def D(self) -> int:
        if self.j == 0:
            return self.d + 1
        return self.d + self.d * (self.d + 1) // 2

    def lift(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.j == 0:
            return np.hstack([pts, (pts ** 2).sum(axis=1, keepdims=True)])
        cols = [pts]
        prods = [pts[:, a:a + 1] * pts[:, b:b + 1]
                 for a in range(self.d) for b in range(a, self.d)]
        cols.extend(prods)
        return np.hstack(cols)

    def flat_coeffs(self, F: Flat) -> tuple[np.ndarray, float]:
        """(a, b) with d(x, F)^2 = a . lift(x) + b."""
        if F.j != self.j or F.d != self.d:
            raise SchemaError("flat does not match the linearization")
        if self.j == 0:
            c = F.base
            a = np.concatenate([-2.0 * c, [1.0]])
            return a, float(c @ c)
        t, v = F.base, F.basis[0]
        tv = float(t @ v)
        a = np.empty(self.D)
        a[:self.d] = -2.0 * t + 2.0 * tv * v
        idx = self.d
        for p in range(self.d):
            for q in range(p, self.d):
                if p == q:
                    a[idx] = 1.0 - v[p] * v[p]
                else:
                    a[idx] = -2.0 * v[p] * v[q]
                idx += 1
        return a, float(t @ t - tv * tv)


# ---------------------------------------------------------------------------
# Direction nets and the convex region K


def direction_net(D: int, size: int, seed: int = NET_SEED) -> np.ndarray:
    """Deterministic symmetric set of unit directions in R^D.

    Pairs +-u are generated from a fixed-seed Gaussian stream, so mirror
    directions always come together; size is rounded up to even.
    """
    half = (size + 1) // 2
    rng = np.random.default_rng([seed, D, half])
    u = rng.standard_normal((half, D))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.vstack([u, -u])


@dataclass(frozen=True)
class ConvexKSpec:
    directions: np.ndarray   # (m, D)
    thresholds: np.ndarray   # (m,)
    lin: LinearizationMap
    eps_prime: float

    def inside_mask(self, points: np.ndarray) -> np.ndarray:
        """Membership of original-space points, with a small slack so the
        sweep's own boundary points count as inside."""
        lifted = self.lin.lift(points)
        proj = lifted @ self.directions.T
        tol = 1e-12 * (1.0 + np.abs(self.thresholds))
        return np.all(proj <= self.thresholds + tol, axis=1)


def _point_masses(instance: Instance) -> np.ndarray:
    """Per-support-point probability mass; locational rows summed per
    location (may exceed 1, used only as sweep surrogates and weights)."""
    if isinstance(instance, ExistentialInstance):
        return instance.probs.copy()
    return instance.probs.sum(axis=0)


def _prefix_mass(instance: Instance, order: np.ndarray) -> np.ndarray:
    """Mass surrogate of each sweep prefix order[:i+1].

    Existential: sum of p_i.  Locational: 1 - prod over nodes of
    (1 - row mass on the prefix), the exact probability that some node
    lands in the prefix.
    """
    if isinstance(instance, ExistentialInstance):
        return np.cumsum(instance.probs[order])
    tail = np.cumsum(instance.probs[:, order], axis=1)
    return 1.0 - np.prod(1.0 - tail, axis=0)


def sweep_convexK(instance: Instance, j: int, eps: float,
                  eps_prime: float | None = None,
                  net_size: int = 32) -> ConvexKSpec:
    """Intersect halfspaces cutting off at most eps_prime mass per direction.

    With the default eps_prime = eps / (2 * net_size), the union bound puts
    at most eps/2 total mass outside K.
    """
    if isinstance(instance, ExistentialInstance) and instance.total_prob < eps:
        raise CaseMismatch("total probability below eps; use the Case 1 path")
    lin = LinearizationMap(j=j, d=instance.d)
    dirs = direction_net(lin.D, net_size)
    if eps_prime is None:
        eps_prime = eps / (2 * dirs.shape[0])
    lifted = lin.lift(instance.support_points)
    thresholds = np.empty(dirs.shape[0])
    for i, u in enumerate(dirs):
        proj = lifted @ u
        order = np.lexsort((np.arange(len(proj)), -proj))
        mass = _prefix_mass(instance, order)
        hit = np.flatnonzero(mass >= eps_prime)
        if hit.size == 0:
            raise EmptyK(f"sweep mass never reaches eps'={eps_prime}")
        thresholds[i] = proj[order[hit[0]]]
    return ConvexKSpec(directions=dirs, thresholds=thresholds, lin=lin,
                       eps_prime=eps_prime)


# ---------------------------------------------------------------------------
# Coresets


@dataclass(frozen=True)
class SJFCCoreset:
    s1: tuple               # tuple of (n_i, d) arrays, each weight 1/N
    s2_points: np.ndarray   # (m, d)
    s2_weights: np.ndarray  # (m,)
    j: int
    eps: float
    case: int               # 1 or 2

    @property
    def N(self) -> int:
        return len(self.s1)


def case1_size_cap(j: int, d: int, eps: float) -> int:
    return math.ceil((j + 1) ** 4 * d / eps ** 2)


def _weighted_median_flat(points: np.ndarray, weights: np.ndarray,
                          j: int) -> Flat:
    """Rough optimum of sum_i w_i d(s_i, F), enough for sensitivity scores."""
    d = points.shape[1]
    center = np.average(points, axis=0, weights=weights)

    def cost0(c):
        return float(weights @ np.linalg.norm(points - c, axis=1))

    if j == 0:
        res = minimize(cost0, center, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12})
        return Flat(j=0, base=np.asarray(res.x))
    cov = np.cov(points.T, aweights=weights, bias=True).reshape(d, d)
    v = np.linalg.eigh(cov)[1][:, -1]
    return Flat(j=1, base=center, basis=v.reshape(1, -1))


def weighted_flat_median_coreset(points: np.ndarray, weights: np.ndarray,
                                 j: int, eps: float,
                                 rng: np.random.Generator):
    """Importance-sampling coreset of a weighted flat-median instance.

    Instances at or under the size cap are returned verbatim.  Sensitivities
    are the distance share w.r.t. an approximate optimum plus the projected
    total-sensitivity mass term.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    n = points.shape[0]
    if n == 0:
        return points, weights
    cap = case1_size_cap(j, points.shape[1], eps)
    if n <= cap:
        return points, weights
    F_hat = _weighted_median_flat(points, weights, j)
    dists = shape_distances(points, F_hat)
    cost = float(weights @ dists)
    W = float(weights.sum())
    d = points.shape[1]
    if cost > 0.0:
        sigma = weights * dists / cost + 2.0 * (d + 1) ** 1.5 * weights / W
    else:
        sigma = np.full(n, 1.0 / n)
    q = sigma + 1.0 / n
    probs = q / q.sum()
    draws = rng.choice(n, size=cap, p=probs)
    acc: dict[int, float] = {}
    for i in draws:
        i = int(i)
        acc[i] = acc.get(i, 0.0) + float(q.sum()) * weights[i] / (q[i] * cap)
    idx = sorted(acc)
    return points[idx], np.array([acc[i] for i in idx])


def case1_coreset(instance: ExistentialInstance, j: int, eps: float,
                  rng: np.random.Generator | None = None) -> SJFCCoreset:
    """Weighted flat-median coreset for the low-mass regime."""
    if instance.total_prob >= eps:
        raise CaseMismatch("total probability at least eps; use Case 2")
    if rng is None:
        rng = np.random.default_rng(NET_SEED)
    keep = instance.probs > 0.0
    pts, w = weighted_flat_median_coreset(
        instance.points[keep], instance.probs[keep], j, eps, rng)
    return SJFCCoreset(s1=(), s2_points=pts, s2_weights=w, j=j, eps=eps,
                       case=1)


def _kernel(points: np.ndarray, lin: LinearizationMap,
            kernel_dirs: np.ndarray) -> np.ndarray:
    """Directional-extent kernel: the argmax point per net direction."""
    if points.shape[0] == 0:
        return points
    proj = lin.lift(points) @ kernel_dirs.T
    keep = sorted(set(int(i) for i in proj.argmax(axis=0)))
    return points[keep]


def build_S1(instance: Instance, K: ConvexKSpec, eps: float, N: int,
             seed: int, kernel_net_size: int = 64) -> tuple:
    """N sampled realizations of the inside-K sub-instance, each reduced to
    a directional kernel; empty realizations stay empty."""
    inside = K.inside_mask(instance.support_points)
    kernel_dirs = direction_net(K.lin.D, kernel_net_size)
    out = []
    if isinstance(instance, ExistentialInstance):
        pts = instance.points[inside]
        probs = instance.probs[inside]
        for i in range(N):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            mask = rng.random(len(probs)) < probs
            out.append(_kernel(pts[mask], K.lin, kernel_dirs))
    else:
        cum = np.cumsum(instance.probs, axis=1)
        for i in range(N):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            u = rng.random(instance.n)
            idx = np.minimum(
                np.array([np.searchsorted(cum[r], u[r], side="right")
                          for r in range(instance.n)]),
                instance.m - 1)
            idx = np.array(sorted(set(int(v) for v in idx if inside[v])),
                           dtype=int)
            out.append(_kernel(instance.locations[idx], K.lin, kernel_dirs))
    return tuple(out)


def build_S2(instance: Instance, K: ConvexKSpec, j: int, eps: float,
             rng: np.random.Generator | None = None):
    """Weighted flat-median coreset of the points left outside K."""
    if rng is None:
        rng = np.random.default_rng(NET_SEED)
    inside = K.inside_mask(instance.support_points)
    masses = _point_masses(instance)
    outside = (~inside) & (masses > 0.0)
    return weighted_flat_median_coreset(
        instance.support_points[outside], masses[outside], j, eps, rng)


def build_sjfc_coreset(instance: Instance, j: int, eps: float, seed: int,
                       N: int = 500, net_size: int = 32) -> SJFCCoreset:
    if isinstance(instance, ExistentialInstance) and instance.total_prob < eps:
        return case1_coreset(instance, j, eps,
                             np.random.default_rng([seed, 1]))
    K = sweep_convexK(instance, j, eps, net_size=net_size)
    s1 = build_S1(instance, K, eps, N, seed)
    s2_pts, s2_w = build_S2(instance, K, j, eps,
                            np.random.default_rng([seed, 2]))
    return SJFCCoreset(s1=s1, s2_points=s2_pts, s2_weights=s2_w, j=j,
                       eps=eps, case=2)


def estimate_J(coreset: SJFCCoreset, F: Flat) -> float:
    """(1/N) sum of kernel maxima plus the weighted outside term."""
    total = 0.0
    if coreset.N:
        acc = 0.0
        for E in coreset.s1:
            if E.shape[0]:
                acc += float(shape_distances(E, F).max())
        total += acc / coreset.N
    if coreset.s2_points.shape[0]:
        total += float(coreset.s2_weights @
                       shape_distances(coreset.s2_points, F))
    return total


# ---------------------------------------------------------------------------
# Solvers


def _coreset_support(coreset: SJFCCoreset, d: int) -> np.ndarray:
    parts = [E for E in coreset.s1 if E.shape[0]]
    if coreset.s2_points.shape[0]:
        parts.append(coreset.s2_points)
    return np.vstack(parts) if parts else np.zeros((0, d))


def _flat_from_params(x: np.ndarray, j: int, d: int) -> Flat:
    if j == 0:
        return Flat(j=0, base=x)
    t, v = x[:d], x[d:]
    norm = np.linalg.norm(v)
    v = v / norm if norm > 1e-12 else np.eye(d)[0]
    t = t - (t @ v) * v  # canonical base: the point of the line nearest 0
    return Flat(j=1, base=t, basis=v.reshape(1, -1))


def _optimize_flat(fval, j: int, d: int, starts) -> tuple[Flat, float]:
    best = None
    for x0 in starts:
        res = minimize(lambda x: fval(_flat_from_params(x, j, d)), x0,
                       method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13,
                                "maxiter": 4000})
        F = _flat_from_params(np.asarray(res.x), j, d)
        v = float(res.fun)
        if best is None or v < best[1]:
            best = (F, v)
    return best


def _starts_for(support: np.ndarray, j: int, d: int):
    if support.shape[0] == 0:
        base = np.zeros(d)
    else:
        base = support.mean(axis=0)
    starts = []
    if j == 0:
        starts.append(base)
        if support.shape[0]:
            spread = support.std(axis=0)
            starts.append(base + spread)
            starts.append(base - spread)
    else:
        axes = np.eye(d)
        dirs = [axes[i] for i in range(d)]
        if support.shape[0] > 1:
            centered = support - base
            v = np.linalg.eigh(centered.T @ centered)[1][:, -1]
            dirs.insert(0, v)
        for v in dirs:
            starts.append(np.concatenate([base, v]))
    return starts


def solve_jflat(coreset: SJFCCoreset, j: int, d: int) -> tuple[Flat, float]:
    """Minimize the coreset estimator over flats; deterministic multi-start."""
    if j not in (0, 1):
        raise SchemaError("only j in {0, 1} is supported")
    support = _coreset_support(coreset, d)
    if support.shape[0] == 0:
        return _flat_from_params(np.zeros(d if j == 0 else 2 * d), j, d), 0.0
    return _optimize_flat(lambda F: estimate_J(coreset, F), j, d,
                          _starts_for(support, j, d))


def sjfc_pipeline(instance: Instance, j: int, eps: float, seed: int = 0,
                  N: int = 500, net_size: int = 32):
    """Coreset, solve, then re-optimize on the exact expected objective.

    Returns (Flat, value, info).  The exact evaluator is cheap (one sort per
    call), so the final polish runs directly on it and the reported value is
    exact for the returned flat.
    """
    if j not in (0, 1):
        raise SchemaError("only j in {0, 1} is supported")
    masses = _point_masses(instance)
    if float(masses.max(initial=0.0)) == 0.0:
        F = _flat_from_params(np.zeros(instance.d if j == 0 else 2 * instance.d),
                              j, instance.d)
        return F, 0.0, {"case": 1, "s1_size": 0, "s2_size": 0}
    coreset = build_sjfc_coreset(instance, j, eps, seed, N=N,
                                 net_size=net_size)
    F0, _ = solve_jflat(coreset, j, instance.d)

    def exact(F):
        return expected_flatcenter_exact(instance, F).value

    starts = _starts_for(instance.support_points, j, instance.d)
    if j == 0:
        starts.insert(0, F0.base)
    else:
        starts.insert(0, np.concatenate([F0.base, F0.basis[0]]))
    F, value = _optimize_flat(exact, j, instance.d, starts)
    info = {"case": coreset.case, "s1_size": coreset.N,
            "s2_size": int(coreset.s2_points.shape[0])}
    return F, float(value), info
