"""Brute-force reference implementations backing every approximation claim.

Everything here is definitionally exact on guard-sized instances and
deliberately slow: full realization enumeration, grouped partition masses,
direct holant summation, grid-search solvers, exhaustive sensitivity
families, and a Welzl minimum enclosing ball.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .gkm import WeightedCollection, gkm_cost, sensitivity_bruteforce
from .grid_coreset import CoresetBuilder
from .model import (CenterSet, Flat, Instance, LocationalInstance,
                    enumerate_realizations)
from .objective import shape_distances
from .partition import WeightedImage


@dataclass(frozen=True)
class OracleReport:
    value: float
    method: str
    enumeration_size: int


def oracle_expected_objective(instance: Instance, shape) -> OracleReport:
    """Expected objective by summing over every realization."""
    dists = shape_distances(instance.support_points, shape)
    total = 0.0
    count = 0
    for real, pr in enumerate_realizations(instance):
        ids = real.point_ids()
        val = float(dists[list(ids)].max()) if ids else 0.0
        total += pr * val
        count += 1
    return OracleReport(value=total, method="FullEnumeration",
                        enumeration_size=count)


def oracle_partition_masses(instance: Instance, k: int,
                            eps: float) -> WeightedImage:
    """Group every realization by its grid-construction coreset."""
    builder = CoresetBuilder(instance.support_points, k, eps)
    groups: dict[tuple[int, ...], float] = {}
    for real, pr in enumerate_realizations(instance):
        ids = real.point_ids()
        core = builder.build(ids).coreset if ids else ()
        groups[core] = groups.get(core, 0.0) + pr
    return WeightedImage(entries=tuple(sorted(groups.items())),
                         source="Exhaustive")


def oracle_holant_direct(instance: LocationalInstance, S_ids, tail,
                         sequence) -> float:
    """Z for one occupancy sequence by direct summation over assignments.

    Each node picks one alternative (a point of S or the tail bucket); the
    term survives iff the occupancy counts match the sequence exactly.
    """
    S_ids = tuple(sorted(int(i) for i in S_ids))
    tail = sorted(tail)
    slots = len(S_ids) + 1  # last slot is the tail bucket
    n = instance.n
    w = np.zeros((n, slots))
    w[:, :len(S_ids)] = instance.probs[:, list(S_ids)]
    if tail:
        w[:, -1] = instance.probs[:, tail].sum(axis=1)
    target = tuple(sequence)
    total = 0.0
    for assign in itertools.product(range(slots), repeat=n):
        counts = [0] * slots
        term = 1.0
        for node, slot in enumerate(assign):
            counts[slot] += 1
            term *= w[node, slot]
        if tuple(counts) == target:
            total += term
    return total


def center_grid(points: np.ndarray, resolution: int,
                margin: float = 0.0) -> np.ndarray:
    """Axis-aligned grid of candidate centers over the bounding box."""
    points = np.atleast_2d(points)
    lo = points.min(axis=0) - margin
    hi = points.max(axis=0) + margin
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(points.shape[1])]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def oracle_solver_gkm(S: WeightedCollection, k: int,
                      resolution: int = 21) -> tuple[CenterSet, float]:
    """Grid search over center tuples plus all k-subsets of union points."""
    pts = S.union_points()
    cand = np.unique(np.vstack([center_grid(pts, resolution), pts]), axis=0)
    best = None
    for idx in itertools.combinations(range(cand.shape[0]), k):
        F = CenterSet(centers=cand[list(idx)])
        v = gkm_cost(S, F)
        if best is None or v < best[1]:
            best = (F, v)
    return best


def oracle_solver_instance(instance: Instance, k: int,
                           resolution: int = 21) -> tuple[CenterSet, float]:
    """Grid search directly on the exact expected k-center objective."""
    from .objective import expected_objective_exact
    pts = instance.support_points
    cand = np.unique(np.vstack([center_grid(pts, resolution), pts]), axis=0)
    best = None
    for idx in itertools.combinations(range(cand.shape[0]), k):
        F = CenterSet(centers=cand[list(idx)])
        v = expected_objective_exact(instance, F).value
        if best is None or v < best[1]:
            best = (F, v)
    return best


def oracle_sensitivities(S: WeightedCollection, k: int,
                         resolution: int = 7) -> np.ndarray:
    """Brute-force lower bounds over the maximal feasible family: all
    k-subsets of union points plus grid centers."""
    pts = np.unique(S.union_points(), axis=0)
    cand = np.unique(np.vstack([center_grid(pts, resolution, margin=1.0), pts]),
                     axis=0)
    family = []
    for idx in itertools.combinations(range(cand.shape[0]), k):
        F = CenterSet(centers=cand[list(idx)])
        if gkm_cost(S, F) > 0.0:
            family.append(F)
    return sensitivity_bruteforce(S, family).values


# ---------------------------------------------------------------------------
# Minimum enclosing ball (deterministic-instance j=0 reference)


def _ball_from(boundary: list[np.ndarray], d: int):
    if not boundary:
        return np.zeros(d), 0.0
    if len(boundary) == 1:
        return boundary[0], 0.0
    if len(boundary) == 2:
        c = (boundary[0] + boundary[1]) / 2.0
        return c, float(np.linalg.norm(boundary[0] - c))
    # General position: solve the circumsphere through all boundary points.
    A = 2.0 * (np.array(boundary[1:]) - boundary[0])
    b = np.array([float(p @ p - boundary[0] @ boundary[0])
                  for p in boundary[1:]])
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    return c, float(np.linalg.norm(boundary[0] - c))


def minimum_enclosing_ball(points: np.ndarray,
                           seed: int = 7) -> tuple[np.ndarray, float]:
    """Welzl's algorithm with a fixed-seed shuffle."""
    pts = [np.asarray(p, dtype=float) for p in np.atleast_2d(points)]
    rng = np.random.default_rng(seed)
    rng.shuffle(pts)
    d = pts[0].shape[0]

    def welzl(P, R):
        if not P or len(R) == d + 1:
            return _ball_from(R, d)
        p = P[0]
        c, r = welzl(P[1:], R)
        if np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-12:
            return c, r
        return welzl(P[1:], R + [p])

    return welzl(pts, [])


def oracle_min_flat(points: np.ndarray, j: int) -> tuple[Flat, float]:
    """Deterministic minimum over flats of the max distance.

    j=0 is the minimum enclosing ball.  j=1 falls back to a dense direction
    scan with interval stabbing per direction (2-D only).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points.shape[1]
    if j == 0:
        c, r = minimum_enclosing_ball(points)
        return Flat(j=0, base=c), r
    if d != 2:
        raise ValueError("line oracle implemented for d=2 only")
    best = None
    for theta in np.linspace(0.0, np.pi, 3600, endpoint=False):
        v = np.array([np.cos(theta), np.sin(theta)])
        nrm = np.array([-v[1], v[0]])
        offs = points @ nrm
        width = (offs.max() - offs.min()) / 2.0
        mid = (offs.max() + offs.min()) / 2.0
        if best is None or width < best[1]:
            best = (Flat(j=1, base=mid * nrm, basis=v.reshape(1, -1)),
                    float(width))
    return best
