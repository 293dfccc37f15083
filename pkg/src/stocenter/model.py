"""Core domain types: stochastic instances, realizations, centers, flats.

Point ids are 0-based input-file positions and are never reassigned; every
"smallest index" tie-break elsewhere in the package refers to these ids.
All types are immutable after construction and safe to share across threads;
random state is always caller-owned and passed explicitly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InstanceTooLarge, SchemaError

# Guards for exhaustive realization enumeration.
MAX_EXISTENTIAL_N = 24
MAX_LOCATIONAL_STATES = 2 ** 24

# Above this many factors, probability products are accumulated in log space.
LOGSPACE_THRESHOLD = 50


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ExistentialInstance:
    """n points in R^d, point i present independently with probability p_i."""

    points: np.ndarray  # (n, d)
    probs: np.ndarray   # (n,)

    def __post_init__(self):
        pts = _freeze(np.atleast_2d(self.points))
        pr = _freeze(np.atleast_1d(self.probs))
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise SchemaError("points must be an (n, d) array with d >= 1")
        if pr.shape != (pts.shape[0],):
            raise SchemaError("probs must have one entry per point")
        if not np.all(np.isfinite(pts)):
            raise SchemaError("coordinates must be finite")
        if np.any(pr < 0.0) or np.any(pr > 1.0):
            raise SchemaError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total_prob(self) -> float:
        """B = sum of p_i."""
        return float(self.probs.sum())

    @property
    def model(self) -> str:
        return "existential"

    @property
    def support_points(self) -> np.ndarray:
        return self.points


@dataclass(frozen=True)
class LocationalInstance:
    """n nodes, each realized at one of m locations per its probability row."""

    locations: np.ndarray  # (m, d)
    probs: np.ndarray      # (n, m), rows sum to 1

    def __post_init__(self):
        loc = _freeze(np.atleast_2d(self.locations))
        pr = _freeze(np.atleast_2d(self.probs))
        if loc.ndim != 2 or loc.shape[1] < 1:
            raise SchemaError("locations must be an (m, d) array with d >= 1")
        if not np.all(np.isfinite(loc)):
            raise SchemaError("coordinates must be finite")
        if pr.ndim != 2 or pr.shape[1] != loc.shape[0]:
            raise SchemaError("probs must be (n, m) matching the locations")
        if np.any(pr < 0.0) or np.any(pr > 1.0):
            raise SchemaError("probabilities must lie in [0, 1]")
        if np.any(np.abs(pr.sum(axis=1) - 1.0) > 1e-9):
            raise SchemaError("each node row must sum to 1 within 1e-9")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "probs", pr)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def m(self) -> int:
        return self.locations.shape[0]

    @property
    def d(self) -> int:
        return self.locations.shape[1]

    @property
    def model(self) -> str:
        return "locational"

    @property
    def support_points(self) -> np.ndarray:
        return self.locations


Instance = ExistentialInstance | LocationalInstance


@dataclass(frozen=True)
class Realization:
    """One concrete draw from a stochastic instance.

    Existential draws carry the sorted tuple of present point ids; locational
    draws carry the node -> location-id assignment (length n).
    """

    ids: tuple[int, ...] = ()
    assignment: tuple[int, ...] | None = None

    @property
    def is_locational(self) -> bool:
        return self.assignment is not None

    def point_ids(self) -> tuple[int, ...]:
        """Distinct support-point ids realized, ascending."""
        if self.assignment is not None:
            return tuple(sorted(set(self.assignment)))
        return self.ids

    def points(self, instance: Instance) -> np.ndarray:
        return instance.support_points[list(self.point_ids())]


@dataclass(frozen=True)
class CenterSet:
    """Exactly k centers; stored in lexicographic order for determinism."""

    centers: np.ndarray  # (k, d)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.shape[0] < 1:
            raise SchemaError("need k >= 1 centers")
        order = np.lexsort(c.T[::-1])
        object.__setattr__(self, "centers", _freeze(c[order]))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class Flat:
    """A j-dimensional affine subspace: base point plus j orthonormal axes."""

    j: int
    base: np.ndarray              # (d,)
    basis: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        base = _freeze(np.atleast_1d(self.base))
        d = base.shape[0]
        basis = np.asarray(self.basis, dtype=float)
        if basis.size == 0:
            basis = np.zeros((0, d))
        basis = np.atleast_2d(basis)
        if self.j != basis.shape[0] or (self.j > 0 and basis.shape[1] != d):
            raise SchemaError("basis must be (j, d)")
        if not (0 <= self.j <= d - 1):
            raise SchemaError("need 0 <= j <= d-1")
        gram = basis @ basis.T
        if self.j > 0 and np.max(np.abs(gram - np.eye(self.j))) > 1e-10:
            raise SchemaError("basis must be orthonormal within 1e-10")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", _freeze(basis))

    @property
    def d(self) -> int:
        return self.base.shape[0]


# ---------------------------------------------------------------------------
# Realization enumeration / sampling / probability


def _existential_mask_probs(probs: np.ndarray) -> np.ndarray:
    """Probability of every bitmask realization; bit i set = point i present."""
    out = np.ones(1)
    for p in probs:
        out = np.concatenate([out * (1.0 - p), out * p])
    return out


def realization_mask_matrix(n: int) -> np.ndarray:
    """Boolean (2^n, n) membership matrix matching _existential_mask_probs."""
    idx = np.arange(2 ** n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(bool)


def enumerate_realizations(instance: Instance, keep_zero: bool = False):
    """All realizations with their probabilities.

    Probabilities sum to 1 within 1e-12.  Zero-probability realizations are
    dropped unless keep_zero is set.
    """
    if isinstance(instance, ExistentialInstance):
        n = instance.n
        if n > MAX_EXISTENTIAL_N:
            raise InstanceTooLarge(f"existential n={n} exceeds {MAX_EXISTENTIAL_N}")
        mask_probs = _existential_mask_probs(instance.probs)
        out = []
        for mask in range(2 ** n):
            pr = float(mask_probs[mask])
            if pr == 0.0 and not keep_zero:
                continue
            ids = tuple(i for i in range(n) if (mask >> i) & 1)
            out.append((Realization(ids=ids), pr))
        return out

    n, m = instance.n, instance.m
    if m ** n > MAX_LOCATIONAL_STATES:
        raise InstanceTooLarge(f"locational m^n={m ** n} exceeds {MAX_LOCATIONAL_STATES}")
    out = []
    for assignment in itertools.product(range(m), repeat=n):
        pr = 1.0
        for node, loc in enumerate(assignment):
            pr *= instance.probs[node, loc]
        if pr == 0.0 and not keep_zero:
            continue
        out.append((Realization(assignment=assignment), float(pr)))
    return out


def sample_realization(instance: Instance, rng: np.random.Generator) -> Realization:
    """Draw one realization; rng must be seeded by the caller."""
    if isinstance(instance, ExistentialInstance):
        mask = rng.random(instance.n) < instance.probs
        return Realization(ids=tuple(np.flatnonzero(mask)))
    cum = np.cumsum(instance.probs, axis=1)
    u = rng.random(instance.n)
    assignment = tuple(int(np.searchsorted(cum[i], u[i], side="right"))
                       for i in range(instance.n))
    # searchsorted can land one past the end on rounding; clamp.
    assignment = tuple(min(a, instance.m - 1) for a in assignment)
    return Realization(assignment=assignment)


def realization_probability(instance: Instance, realization: Realization) -> float:
    """Pr[|= P]: product of inclusion/exclusion factors (existential) or of
    per-node row entries (locational)."""
    if isinstance(instance, ExistentialInstance):
        present = np.zeros(instance.n, dtype=bool)
        present[list(realization.ids)] = True
        factors = np.where(present, instance.probs, 1.0 - instance.probs)
    else:
        if realization.assignment is None or len(realization.assignment) != instance.n:
            raise SchemaError("locational realization needs a total assignment")
        factors = instance.probs[np.arange(instance.n), list(realization.assignment)]
    if len(factors) > LOGSPACE_THRESHOLD:
        if np.any(factors == 0.0):
            return 0.0
        return float(math.exp(np.log(factors).sum()))
    return float(np.prod(factors))


# ---------------------------------------------------------------------------
# JSON I/O


def _require_keys(obj: dict, allowed: set[str], where: str):
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"unknown field(s) {sorted(extra)} in {where}")


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict) or "model" not in data:
        raise SchemaError("instance JSON must be an object with a 'model' field")
    model = data["model"]
    if model == "existential":
        _require_keys(data, {"model", "d", "points"}, "existential instance")
        d = int(data["d"])
        pts, probs = [], []
        for entry in data["points"]:
            _require_keys(entry, {"coords", "p"}, "existential point")
            if len(entry["coords"]) != d:
                raise DimensionMismatch("point dimension differs from d")
            pts.append([float(c) for c in entry["coords"]])
            probs.append(float(entry["p"]))
        if not pts:
            raise SchemaError("instance needs at least one point")
        return ExistentialInstance(points=np.array(pts), probs=np.array(probs))
    if model == "locational":
        _require_keys(data, {"model", "d", "locations", "nodes"}, "locational instance")
        d = int(data["d"])
        locs = [[float(c) for c in row] for row in data["locations"]]
        if any(len(row) != d for row in locs):
            raise DimensionMismatch("location dimension differs from d")
        rows = []
        for entry in data["nodes"]:
            _require_keys(entry, {"probs"}, "locational node")
            rows.append([float(p) for p in entry["probs"]])
        if not locs or not rows:
            raise SchemaError("instance needs locations and nodes")
        return LocationalInstance(locations=np.array(locs), probs=np.array(rows))
    raise SchemaError(f"unknown model {model!r}")


def instance_to_dict(instance: Instance) -> dict:
    if isinstance(instance, ExistentialInstance):
        return {
            "model": "existential",
            "d": instance.d,
            "points": [{"coords": list(map(float, p)), "p": float(pr)}
                       for p, pr in zip(instance.points, instance.probs)],
        }
    return {
        "model": "locational",
        "d": instance.d,
        "locations": [list(map(float, p)) for p in instance.locations],
        "nodes": [{"probs": list(map(float, row))} for row in instance.probs],
    }


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))


def shape_from_dict(data: dict) -> CenterSet | Flat:
    if not isinstance(data, dict) or "kind" not in data:
        raise SchemaError("shape JSON must be an object with a 'kind' field")
    if data["kind"] == "centers":
        _require_keys(data, {"kind", "points"}, "centers shape")
        return CenterSet(centers=np.array(data["points"], dtype=float))
    if data["kind"] == "flat":
        _require_keys(data, {"kind", "j", "base", "basis"}, "flat shape")
        return Flat(j=int(data["j"]), base=np.array(data["base"], dtype=float),
                    basis=np.array(data.get("basis", []), dtype=float))
    raise SchemaError(f"unknown shape kind {data['kind']!r}")


def shape_to_dict(shape: CenterSet | Flat) -> dict:
    if isinstance(shape, CenterSet):
        return {"kind": "centers", "points": [list(map(float, c)) for c in shape.centers]}
    return {"kind": "flat", "j": shape.j, "base": list(map(float, shape.base)),
            "basis": [list(map(float, b)) for b in shape.basis]}


def load_shape(path) -> CenterSet | Flat:
    with open(path, "r", encoding="utf-8") as fh:
        return shape_from_dict(json.load(fh))
