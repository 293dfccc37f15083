"""Exact and Monte-Carlo evaluation of the expected k-center value K(P, F)
and expected j-flat-center value J(P, F) in both uncertainty models.

The exact existential evaluator sorts distances non-increasing and sums
p_i * d_i * prod_{j<i}(1 - p_j); the locational evaluator integrates the
max-distance CDF over its finitely many jump points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .model import (CenterSet, ExistentialInstance, Flat, Instance,
                    LocationalInstance, Realization)


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    method: str
    samples: int | None = None
    seed: int | None = None
    stderr: float | None = None


Shape = CenterSet | Flat


def shape_distances(points: np.ndarray, shape: Shape) -> np.ndarray:
    """Distance of each point to the shape (nearest center, or the flat)."""
    points = np.atleast_2d(points)
    if points.shape[0] == 0:
        return np.zeros(0)
    if isinstance(shape, CenterSet):
        if points.shape[1] != shape.d:
            raise DimensionMismatch("point and center dimensions differ")
        diff = points[:, None, :] - shape.centers[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
    if points.shape[1] != shape.d:
        raise DimensionMismatch("point and flat dimensions differ")
    rel = points - shape.base
    if shape.j > 0:
        rel = rel - (rel @ shape.basis.T) @ shape.basis
    return np.sqrt((rel ** 2).sum(axis=1))


def kcenter_value(P: np.ndarray, F: CenterSet) -> float:
    """max_{s in P} min_{f in F} ||s - f||; empty P gives 0."""
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return 0.0
    return float(shape_distances(P, F).max())


def flat_distance(x: np.ndarray, F: Flat) -> float:
    return float(shape_distances(np.atleast_2d(np.asarray(x, dtype=float)), F)[0])


def flatcenter_value(P: np.ndarray, F: Flat) -> float:
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return 0.0
    return float(shape_distances(P, F).max())


def _exact_existential(probs: np.ndarray, dists: np.ndarray) -> float:
    # Sort non-increasing by distance, ties by point id for determinism.
    # E[max] = sum_i p_i d_i prod_{j<i}(1 - p_j) over the sorted order.
    n = len(dists)
    order = np.lexsort((np.arange(n), -dists))
    p = probs[order]
    d = dists[order]
    prefix = np.concatenate([[1.0], np.cumprod(1.0 - p)[:-1]])
    return float(np.sum(p * d * prefix))


def _exact_locational(instance: LocationalInstance, dists: np.ndarray) -> float:
    # dists: distance of every location to the shape.  CDF of the max over
    # nodes jumps only at the distinct location distances.
    ts = np.unique(dists)
    # cdf_per_node[i, r] = Pr[node i lands within distance ts[r]]
    within = dists[None, :] <= ts[:, None]  # (R, m)
    node_cdf = instance.probs @ within.T     # (n, R)
    cdf = np.prod(node_cdf, axis=0)          # (R,)
    prev = np.concatenate([[0.0], cdf[:-1]])
    return float(np.sum(ts * (cdf - prev)))


def expected_kcenter_exact_existential(instance: ExistentialInstance,
                                       F: CenterSet) -> ObjectiveValue:
    dists = shape_distances(instance.points, F)
    return ObjectiveValue(_exact_existential(instance.probs, dists), "ExactSorted")


def expected_kcenter_exact_locational(instance: LocationalInstance,
                                      F: CenterSet) -> ObjectiveValue:
    dists = shape_distances(instance.locations, F)
    return ObjectiveValue(_exact_locational(instance, dists), "ExactCDF")


def expected_flatcenter_exact(instance: Instance, F: Flat) -> ObjectiveValue:
    dists = shape_distances(instance.support_points, F)
    if isinstance(instance, ExistentialInstance):
        return ObjectiveValue(_exact_existential(instance.probs, dists), "ExactSorted")
    return ObjectiveValue(_exact_locational(instance, dists), "ExactCDF")


def expected_objective_exact(instance: Instance, shape: Shape) -> ObjectiveValue:
    """Dispatch to the right exact evaluator for (model, shape kind)."""
    if isinstance(shape, Flat):
        return expected_flatcenter_exact(instance, shape)
    if isinstance(instance, ExistentialInstance):
        return expected_kcenter_exact_existential(instance, shape)
    return expected_kcenter_exact_locational(instance, shape)


def realization_objective(instance: Instance, realization: Realization,
                          shape: Shape) -> float:
    pts = realization.points(instance)
    if pts.shape[0] == 0:
        return 0.0
    return float(shape_distances(pts, shape).max())


def expected_objective_mc(instance: Instance, shape: Shape, samples: int,
                          rng: np.random.Generator,
                          seed: int | None = None) -> ObjectiveValue:
    """Monte-Carlo estimate with standard error of the mean."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    dists = shape_distances(instance.support_points, shape)
    vals = np.empty(samples)
    if isinstance(instance, ExistentialInstance):
        for i in range(samples):
            mask = rng.random(instance.n) < instance.probs
            vals[i] = dists[mask].max() if mask.any() else 0.0
    else:
        cum = np.cumsum(instance.probs, axis=1)
        for i in range(samples):
            u = rng.random(instance.n)
            idx = np.minimum(
                np.array([np.searchsorted(cum[j], u[j], side="right")
                          for j in range(instance.n)]),
                instance.m - 1)
            vals[i] = dists[idx].max()
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return ObjectiveValue(mean, "MonteCarlo", samples=samples, seed=seed,
                          stderr=stderr)
