"""Ising models with mixed boundary conditions reduced to external fields.

Spins live on the interior vertices of a graph and take values in {-1, +1}.
Fixed boundary values f_b = ±1 never appear as degrees of freedom: each
boundary edge (i, b) contributes f_b to a per-vertex field h_i, and the
unnormalized density is exp(beta * sum_{ij} s_i s_j + beta * sum_i h_i s_i).

Two lattice builders are provided: a square lattice with a single layer of
boundary vertices around an n1 x n2 interior grid, and a quasi-uniform
triangulation of the unit disk with boundary values assigned per angular arc.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import Delaunay

SPIN_DTYPE = np.int8


@dataclass(frozen=True, eq=False)
class IsingGraph:
    """Immutable interior graph: vertex count, edge list, field, temperature.

    Attributes
    ----------
    n_interior : int
        Number of interior (free) vertices, ids 0..n_interior-1.
    edges : ndarray of shape (n_edges, 2)
        Undirected interior edges, each row (i, j) with i < j, no duplicates.
    field : ndarray of shape (n_interior,)
        External field h_i per vertex (real; boundary reduction gives integers).
    beta : float
        Inverse temperature, > 0.
    """

    n_interior: int
    edges: np.ndarray
    field: np.ndarray
    beta: float

    def __post_init__(self):
        if self.n_interior < 1:
            raise ValueError("n_interior must be >= 1")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n_interior:
                raise ValueError("edge endpoint out of range")
            edges = np.sort(edges, axis=1)
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loop edge")
            edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
            if np.any(np.all(edges[1:] == edges[:-1], axis=1)):
                raise ValueError("duplicate edge")
        field = np.ascontiguousarray(self.field, dtype=np.float64)
        if field.shape != (self.n_interior,):
            raise ValueError("field length must equal n_interior")
        if not np.all(np.isfinite(field)):
            raise ValueError("field entries must be finite")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError("beta must be a positive finite real")
        edges = np.ascontiguousarray(edges)
        edges.setflags(write=False)
        field.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """Boundary vertices with fixed ±1 values and their edges into the interior.

    boundary_edges rows are (interior_id, boundary_id); boundary ids index
    into boundary_vertices/values.
    """

    boundary_vertices: np.ndarray
    values: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.boundary_vertices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.int64)
        bedges = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        if ids.ndim != 1 or vals.shape != ids.shape:
            raise ValueError("boundary_vertices and values must be parallel 1-d arrays")
        if ids.size and np.unique(ids).size != ids.size:
            raise ValueError("duplicate boundary vertex id")
        if not np.all(np.abs(vals) == 1):
            raise ValueError("boundary values must be ±1")
        if bedges.size:
            if bedges[:, 0].min() < 0:
                raise ValueError("negative interior id in boundary edge")
            if not np.all(np.isin(bedges[:, 1], ids)):
                raise ValueError("boundary edge references unknown boundary vertex")
        for name, arr in (("boundary_vertices", ids), ("values", vals), ("boundary_edges", bedges)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Per-interior-vertex 2D coordinates, for disk models and CSV export."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must have shape (n_interior, 2)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)


def boundary_to_field(n_interior: int, spec: BoundarySpec) -> np.ndarray:
    """Fold boundary values into the interior field: h_i = sum of f_b over edges (i, b).

    Vertices with no boundary edge get h_i = 0.
    """
    h = np.zeros(n_interior, dtype=np.float64)
    if spec.boundary_edges.size == 0:
        return h
    interior = spec.boundary_edges[:, 0]
    if interior.max() >= n_interior:
        raise ValueError("boundary edge references interior vertex out of range")
    value_of = np.zeros(int(spec.boundary_vertices.max()) + 1, dtype=np.float64)
    value_of[spec.boundary_vertices] = spec.values
    np.add.at(h, interior, value_of[spec.boundary_edges[:, 1]])
    return h


def random_spins(n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent fair-coin ±1 spins."""
    return (2 * rng.integers(0, 2, size=n) - 1).astype(SPIN_DTYPE)


def energy_terms(g: IsingGraph, s: np.ndarray) -> tuple[int, float]:
    """Return (coupling_sum, field_sum) = (Σ_{ij∈E} s_i s_j, Σ_i h_i s_i).

    beta is deliberately not folded in; callers scale both terms.
    """
    s = np.asarray(s)
    if s.shape != (g.n_interior,):
        raise ValueError("spin configuration length must equal n_interior")
    if g.n_edges:
        coupling = int(np.sum(s[g.edges[:, 0]] * s[g.edges[:, 1]], dtype=np.int64))
    else:
        coupling = 0
    field_sum = float(g.field @ s.astype(np.float64))
    return coupling, field_sum


# ---------------------------------------------------------------------------
# Square lattice with one layer of boundary vertices
# ---------------------------------------------------------------------------

_SIDES = ("left", "right", "top", "bottom")


def _square_quadrant(dx2: int, dy2: int) -> int:
    # Half-open quadrants counted counterclockwise from the +x axis:
    # Q1 = [0, pi/2), Q2 = [pi/2, pi), Q3 = [pi, 3pi/2), Q4 = [3pi/2, 2pi).
    # Points exactly on an axis fall in the counterclockwise-adjacent quadrant.
    if dx2 > 0 and dy2 >= 0:
        return 0
    if dx2 <= 0 and dy2 > 0:
        return 1
    if dx2 < 0 and dy2 <= 0:
        return 2
    return 3


def build_square_lattice(
    n1: int,
    n2: int,
    bc: Mapping[str, int] | Sequence[int],
    beta: float,
) -> tuple[IsingGraph, LatticeGeometry, BoundarySpec]:
    """n1 x n2 interior grid plus one boundary vertex per exposed perimeter slot.

    Interior vertex (i, j) has id i*n2 + j and coordinates (i, j); i runs
    horizontally (0..n1-1), j vertically (0..n2-1). Every perimeter interior
    vertex is adjacent to one boundary vertex per exposed side, so interior
    corners touch two boundary vertices and h_i ranges over {-2,...,2}.

    Parameters
    ----------
    bc : mapping or sequence
        Either {"left": ±1, "right": ±1, "top": ±1, "bottom": ±1} (left/right
        are the vertical sides), or a sequence of four ±1 quadrant signs
        (Q1..Q4 counterclockwise from +x, relative to the lattice center;
        boundary vertices on a center axis take the counterclockwise-adjacent
        quadrant's sign).
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("n1 and n2 must be >= 1")
    if isinstance(bc, Mapping):
        if set(bc) != set(_SIDES):
            raise ValueError(f"side assignment must have exactly the keys {_SIDES}")
        side_values = {k: int(bc[k]) for k in _SIDES}
        if any(v not in (-1, 1) for v in side_values.values()):
            raise ValueError("side values must be ±1")
        quadrant_signs = None
    else:
        quadrant_signs = [int(v) for v in bc]
        if len(quadrant_signs) != 4 or any(v not in (-1, 1) for v in quadrant_signs):
            raise ValueError("quadrant assignment must be four ±1 signs")
        side_values = None

    def vid(i: int, j: int) -> int:
        return i * n2 + j

    edges = []
    for i in range(n1):
        for j in range(n2):
            if i + 1 < n1:
                edges.append((vid(i, j), vid(i + 1, j)))
            if j + 1 < n2:
                edges.append((vid(i, j), vid(i, j + 1)))

    # Boundary slots: (side, lattice position, adjacent interior vertex).
    slots = []
    for j in range(n2):
        slots.append(("left", (-1, j), vid(0, j)))
    for j in range(n2):
        slots.append(("right", (n1, j), vid(n1 - 1, j)))
    for i in range(n1):
        slots.append(("bottom", (i, -1), vid(i, 0)))
    for i in range(n1):
        slots.append(("top", (i, n2), vid(i, n2 - 1)))

    values = np.empty(len(slots), dtype=np.int64)
    boundary_edges = np.empty((len(slots), 2), dtype=np.int64)
    for b, (side, (x, y), interior) in enumerate(slots):
        if side_values is not None:
            values[b] = side_values[side]
        else:
            # Doubled offsets from the center ((n1-1)/2, (n2-1)/2) stay integer.
            q = _square_quadrant(2 * x - (n1 - 1), 2 * y - (n2 - 1))
            values[b] = quadrant_signs[q]
        boundary_edges[b] = (interior, b)

    bspec = BoundarySpec(np.arange(len(slots)), values, boundary_edges)
    field = boundary_to_field(n1 * n2, bspec)
    graph = IsingGraph(n1 * n2, np.array(edges, dtype=np.int64).reshape(-1, 2), field, beta)
    coords = np.array([(i, j) for i in range(n1) for j in range(n2)], dtype=np.float64)
    return graph, LatticeGeometry(coords), bspec


# ---------------------------------------------------------------------------
# Quasi-uniform disk triangulation
# ---------------------------------------------------------------------------


def quadrant_arcs(signs: Sequence[int]) -> list[tuple[tuple[float, float], int]]:
    """Four quarter-circle arcs [0,pi/2), ..., [3pi/2,2pi) with the given signs."""
    if len(signs) != 4:
        raise ValueError("need exactly four quadrant signs")
    q = math.pi / 2
    return [((k * q, (k + 1) * q), int(signs[k])) for k in range(4)]


def _validate_arcs(arc_bc) -> list[tuple[float, float, int]]:
    arcs = []
    for (start, end), sign in arc_bc:
        if int(sign) not in (-1, 1):
            raise ValueError("arc sign must be ±1")
        arcs.append((float(start), float(end), int(sign)))
    arcs.sort()
    tol = 1e-9
    if not arcs:
        raise ValueError("arc_bc must be non-empty")
    if abs(arcs[0][0]) > tol or abs(arcs[-1][1] - 2 * math.pi) > tol:
        raise ValueError("arcs must partition [0, 2*pi)")
    for (s0, e0, _), (s1, e1, _) in zip(arcs, arcs[1:]):
        if abs(e0 - s1) > tol:
            raise ValueError("arcs must partition [0, 2*pi) without gaps or overlaps")
    for s0, e0, _ in arcs:
        if e0 <= s0:
            raise ValueError("each arc must have positive length")
    return arcs


def _poisson_disk(rng: np.random.Generator, radius: float, r_max: float) -> np.ndarray:
    """Rejection-sampled Poisson-disk points in the disk of radius r_max."""
    n_cand = int(math.ceil(40.0 / radius**2 * 0.49))  # ~40/mesh^2 with radius=0.7*mesh
    u = rng.random(n_cand)
    v = rng.random(n_cand)
    xs = r_max * np.sqrt(u) * np.cos(2 * math.pi * v)
    ys = r_max * np.sqrt(u) * np.sin(2 * math.pi * v)
    cell = radius / math.sqrt(2.0)
    grid: dict[tuple[int, int], int] = {}
    accepted_x: list[float] = []
    accepted_y: list[float] = []
    r2 = radius * radius
    for x, y in zip(xs, ys):
        gx = int(math.floor(x / cell))
        gy = int(math.floor(y / cell))
        ok = True
        for ax in range(gx - 2, gx + 3):
            for ay in range(gy - 2, gy + 3):
                k = grid.get((ax, ay))
                if k is not None:
                    dx = accepted_x[k] - x
                    dy = accepted_y[k] - y
                    if dx * dx + dy * dy < r2:
                        ok = False
                        break
            if not ok:
                break
        if ok:
            grid[(gx, gy)] = len(accepted_x)
            accepted_x.append(float(x))
            accepted_y.append(float(y))
    return np.column_stack([accepted_x, accepted_y]) if accepted_x else np.empty((0, 2))


def build_disk_triangulation(
    mesh_size: float,
    arc_bc: Sequence[tuple[tuple[float, float], int]],
    seed: int,
    beta: float,
) -> tuple[IsingGraph, LatticeGeometry, BoundarySpec]:
    """Delaunay triangulation of a quasi-uniform point set on the unit disk.

    Boundary points are ceil(2*pi/mesh_size) equally spaced circle points with
    ±1 values looked up by angle in arc_bc (half-open arcs partitioning
    [0, 2*pi)). Interior points come from Poisson-disk rejection sampling at
    exclusion radius 0.7*mesh_size inside radius 1 - 0.5*mesh_size, so all
    edge lengths stay within a fixed band around mesh_size. Deterministic
    given (mesh_size, arc_bc, seed).
    """
    if not (0 < mesh_size < 1):
        raise ValueError("mesh_size must lie in (0, 1)")
    arcs = _validate_arcs(arc_bc)

    n_b = int(math.ceil(2 * math.pi / mesh_size))
    angles = 2 * math.pi * np.arange(n_b) / n_b
    boundary_points = np.column_stack([np.cos(angles), np.sin(angles)])

    values = np.empty(n_b, dtype=np.int64)
    for k, a in enumerate(angles):
        for s0, e0, sign in arcs:
            if s0 - 1e-12 <= a < e0:
                values[k] = sign
                break
        else:
            values[k] = arcs[-1][2]

    rng = np.random.default_rng(seed)
    interior_points = _poisson_disk(rng, 0.7 * mesh_size, 1.0 - 0.5 * mesh_size)
    if interior_points.shape[0] < 1:
        raise ValueError("mesh_size too large: no interior point could be placed")

    points = np.vstack([boundary_points, interior_points])
    tri = Delaunay(points)
    sim = tri.simplices
    pairs = np.vstack([sim[:, [0, 1]], sim[:, [0, 2]], sim[:, [1, 2]]])
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)

    both_interior = pairs[:, 0] >= n_b
    mixed = (pairs[:, 0] < n_b) & (pairs[:, 1] >= n_b)
    interior_edges = pairs[both_interior] - n_b
    boundary_edges = np.column_stack([pairs[mixed, 1] - n_b, pairs[mixed, 0]])

    bspec = BoundarySpec(np.arange(n_b), values, boundary_edges)
    n_interior = interior_points.shape[0]
    field = boundary_to_field(n_interior, bspec)
    graph = IsingGraph(n_interior, interior_edges, field, beta)
    return graph, LatticeGeometry(interior_points), bspec


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def graph_to_json(g: IsingGraph, geometry: LatticeGeometry | None = None) -> str:
    """Serialize a graph (and optional coordinates) with a stable key order."""
    doc: dict = {
        "n_interior": g.n_interior,
        "edges": g.edges.tolist(),
        "field": g.field.tolist(),
        "beta": g.beta,
    }
    if geometry is not None:
        doc["coords"] = geometry.coords.tolist()
    return json.dumps(doc, separators=(",", ":"))


def graph_from_json(text: str) -> tuple[IsingGraph, LatticeGeometry | None]:
    doc = json.loads(text)
    required = {"n_interior", "edges", "field", "beta"}
    unknown = set(doc) - required - {"coords"}
    if unknown:
        raise ValueError(f"unknown graph keys: {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ValueError(f"missing graph keys: {sorted(missing)}")
    g = IsingGraph(
        int(doc["n_interior"]),
        np.array(doc["edges"], dtype=np.int64).reshape(-1, 2),
        np.array(doc["field"], dtype=np.float64),
        float(doc["beta"]),
    )
    geometry = LatticeGeometry(np.array(doc["coords"], dtype=np.float64)) if "coords" in doc else None
    return g, geometry
