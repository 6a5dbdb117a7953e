"""Routing graph over visitable hex cells, plus the instance document format.

Node ids: cells are 0..n-1 (sorted by axial (r, q)), the departure base is
node n and the arrival terminal is node n+1.  Base and terminal share the
same physical point and the same neighbor set, which keeps open-path
missions a data change rather than a code change.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import FormatVersionError, GraphConstructionError, SchemaError
from .geometry import (AOIPolygon, HEX_DIRS, SensorSpec, ensure_ccw,
                       point_in_region, segment_intersects_polygon)

FORMAT_VERSION = "1"


@dataclass
class AOIGraph:
    """Immutable-after-construction routing graph.

    `coords_nm` holds physical coordinates (NM) for all n_cells + 2 nodes;
    `adjacency[i]` is sorted ascending.  `cell_spacing` is the physical
    distance between adjacent cell centroids, retained for metric
    conversion.
    """

    n_cells: int
    coords_nm: np.ndarray
    axial: list
    adjacency: list
    base: int
    terminal: int
    cell_spacing: float
    rs_nm: float
    frame_angle: float
    hexscore: np.ndarray = None

    def __post_init__(self):
        if self.hexscore is None:
            self.hexscore = np.zeros(self.n_cells)

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 2

    def cell_ids(self) -> range:
        return range(self.n_cells)

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def cell_neighbors(self, i: int) -> list:
        return [j for j in self.adjacency[i] if j < self.n_cells]


def features(graph: AOIGraph) -> np.ndarray:
    """Per-node feature rows [x, y, w, m].

    Planar coordinates are centered at the base node and scaled so the
    farthest node sits at radius exactly 1; the base indicator m marks both
    the departure and arrival nodes.
    """
    rel = graph.coords_nm - graph.coords_nm[graph.base]
    radius = np.hypot(rel[:, 0], rel[:, 1])
    scale = float(radius.max())
    if scale <= 0:
        raise ValueError("degenerate graph: all nodes at the base point")
    out = np.zeros((graph.n_nodes, 4))
    out[:, 0:2] = rel / scale
    out[:graph.n_cells, 2] = graph.hexscore
    out[graph.base, 3] = 1.0
    out[graph.terminal, 3] = 1.0
    return out


def _segment_clear(p, q, holes) -> bool:
    return not any(segment_intersects_polygon(p, q, h) for h in holes)


def _cells_connected(n: int, adj: list) -> bool:
    if n == 0:
        return False
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j < n and j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


def solve_frame_angle(axial: list, coords: np.ndarray, rh: float) -> float:
    """Recover the lattice row-axis angle from axial labels and centroids."""
    if len(axial) < 2:
        return 0.0
    q0, r0 = axial[0]
    best = None
    for k in range(1, len(axial)):
        dq = axial[k][0] - q0
        dr = axial[k][1] - r0
        a = math.sqrt(3.0) * rh * (dq + 0.5 * dr)
        b = 1.5 * rh * dr
        denom = a * a + b * b
        if best is None or denom > best[0]:
            best = (denom, k, a, b)
    denom, k, a, b = best
    d = coords[k] - coords[0]
    cos_t = (a * d[0] + b * d[1]) / denom
    sin_t = (a * d[1] - b * d[0]) / denom
    return math.atan2(sin_t, cos_t)


def build_graph(cells: list, poly: AOIPolygon, base_point, spec: SensorSpec) -> AOIGraph:
    """Wire visitable cells, the base, and the terminal into an AOIGraph.

    A cell-cell edge requires hex adjacency and a centroid segment that
    avoids every hole.  The base (and the terminal, with an identical
    neighbor set) connects to every outer-ring cell -- cells with fewer than
    six cell neighbors -- whose sight line to the base avoids all holes.
    """
    if not cells:
        raise GraphConstructionError("no visitable cells")
    base_point = np.asarray(base_point, dtype=float)
    if point_in_region(base_point, poly):
        raise ValueError("base point must lie outside the region")

    order = sorted(range(len(cells)), key=lambda i: (cells[i].axial[1], cells[i].axial[0]))
    cells = [cells[i] for i in order]
    n = len(cells)
    index = {c.axial: i for i, c in enumerate(cells)}
    if len(index) != n:
        raise GraphConstructionError("duplicate axial coordinates")

    adj = [[] for _ in range(n + 2)]
    for i, c in enumerate(cells):
        q, r = c.axial
        for dq, dr in HEX_DIRS:
            j = index.get((q + dq, r + dr))
            if j is not None and j > i and \
                    _segment_clear(c.centroid, cells[j].centroid, poly.holes):
                adj[i].append(j)
                adj[j].append(i)

    if not _cells_connected(n, adj):
        raise GraphConstructionError("cell subgraph is disconnected")

    base, terminal = n, n + 1
    ring = [i for i in range(n) if len(adj[i]) < 6]
    feasible = [i for i in ring if _segment_clear(base_point, cells[i].centroid, poly.holes)]
    if not feasible:
        raise GraphConstructionError("base has no feasible connection to the outer ring")
    for i in feasible:
        adj[i].extend([base, terminal])
        adj[base].append(i)
        adj[terminal].append(i)

    coords = np.vstack([np.array([c.centroid for c in cells]),
                        base_point, base_point])
    rh = spec.cell_circumradius_rh
    return AOIGraph(
        n_cells=n,
        coords_nm=coords,
        axial=[c.axial for c in cells],
        adjacency=[sorted(a) for a in adj],
        base=base,
        terminal=terminal,
        cell_spacing=math.sqrt(3.0) * rh,
        rs_nm=spec.footprint_radius_rs,
        frame_angle=solve_frame_angle([c.axial for c in cells],
                                      np.array([c.centroid for c in cells]), rh),
    )


# ---------------------------------------------------------------------------
# Instance container and document serialization
# ---------------------------------------------------------------------------

@dataclass
class AuditResult:
    hamiltonian: bool
    witness_path: Optional[list] = None
    expansions: int = 0


@dataclass
class AOIInstance:
    """A shipped problem instance: graph, provenance, and its audit record."""

    graph: AOIGraph
    polygon: AOIPolygon
    id: str
    seed: int
    family: str
    rs_nm: float
    split: str = ""
    audit: Optional[AuditResult] = None
    config: dict = field(default_factory=dict)


def instance_to_document(inst: AOIInstance) -> dict:
    g = inst.graph
    feats = features(g)
    nodes = []
    for i in range(g.n_nodes):
        q, r = (g.axial[i] if i < g.n_cells else (None, None))
        nodes.append({
            "id": i,
            "q": int(q) if q is not None else None,
            "r": int(r) if r is not None else None,
            "x_nm": float(g.coords_nm[i, 0]),
            "y_nm": float(g.coords_nm[i, 1]),
        })
    edges = sorted({(min(i, j), max(i, j))
                    for i in range(g.n_nodes) for j in g.adjacency[i]})
    return {
        "format_version": FORMAT_VERSION,
        "id": inst.id,
        "seed": int(inst.seed),
        "family": inst.family,
        "rs_nm": float(inst.rs_nm),
        "polygon": {
            "outer": [[float(x), float(y)] for x, y in inst.polygon.outer],
            "holes": [[[float(x), float(y)] for x, y in h] for h in inst.polygon.holes],
        },
        "nodes": nodes,
        "edges": [[int(i), int(j)] for i, j in edges],
        "base": int(g.base),
        "terminal": int(g.terminal),
        "features": [{"x": float(f[0]), "y": float(f[1]), "w": float(f[2]), "m": float(f[3])}
                     for f in feats],
        "split": inst.split,
    }


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def document_to_instance(doc: dict) -> AOIInstance:
    """Validate and rebuild an instance; raises SchemaError on violations."""
    if not isinstance(doc, dict):
        raise SchemaError("document must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported format version {version!r}")
    for key in ("id", "seed", "family", "rs_nm", "polygon", "nodes", "edges",
                "base", "terminal", "features", "split"):
        _require(key in doc, f"missing field {key!r}")

    nodes = doc["nodes"]
    n_nodes = len(nodes)
    base, terminal = int(doc["base"]), int(doc["terminal"])
    n_cells = n_nodes - 2
    _require(n_cells >= 1, "document has no cells")
    _require(base == n_cells and terminal == n_cells + 1,
             "base/terminal ids must be the last two node ids")

    coords = np.zeros((n_nodes, 2))
    axial = []
    for i, nd in enumerate(nodes):
        _require(int(nd["id"]) == i, "node ids must be dense and ordered")
        coords[i] = (float(nd["x_nm"]), float(nd["y_nm"]))
        if i < n_cells:
            _require(nd["q"] is not None and nd["r"] is not None,
                     "cell nodes need axial coordinates")
            axial.append((int(nd["q"]), int(nd["r"])))
    _require(np.isfinite(coords).all(), "non-finite node coordinates")

    adjacency = [[] for _ in range(n_nodes)]
    for e in doc["edges"]:
        i, j = int(e[0]), int(e[1])
        _require(0 <= i < n_nodes and 0 <= j < n_nodes and i != j, "edge out of range")
        adjacency[i].append(j)
        adjacency[j].append(i)
    adjacency = [sorted(set(a)) for a in adjacency]

    feats = doc["features"]
    _require(len(feats) == n_nodes, "features length mismatch")
    hexscore = np.zeros(n_cells)
    for i, f in enumerate(feats):
        w = float(f["w"])
        _require(w >= 0.0, f"negative hexscore w at node {i}")
        _require(float(f["m"]) in (0.0, 1.0), "base indicator must be 0 or 1")
        if i < n_cells:
            hexscore[i] = w

    rs = float(doc["rs_nm"])
    _require(rs > 0, "rs_nm must be positive")
    graph = AOIGraph(
        n_cells=n_cells,
        coords_nm=coords,
        axial=axial,
        adjacency=adjacency,
        base=base,
        terminal=terminal,
        cell_spacing=math.sqrt(3.0) * rs,
        rs_nm=rs,
        frame_angle=solve_frame_angle(axial, coords[:n_cells], rs),
        hexscore=hexscore,
    )
    _require(sorted(graph.adjacency[base]) == sorted(graph.adjacency[terminal]),
             "base and terminal neighbor sets differ")
    stored = np.array([[f["x"], f["y"], f["w"], f["m"]] for f in feats])
    if not np.allclose(stored, features(graph), atol=1e-9):
        raise SchemaError("stored features disagree with node geometry")

    poly_doc = doc["polygon"]
    polygon = AOIPolygon(outer=ensure_ccw(np.asarray(poly_doc["outer"], dtype=float)),
                         holes=[np.asarray(h, dtype=float) for h in poly_doc["holes"]],
                         family=doc["family"])
    return AOIInstance(
        graph=graph, polygon=polygon, id=str(doc["id"]), seed=int(doc["seed"]),
        family=str(doc["family"]), rs_nm=rs, split=str(doc["split"]),
        audit=AuditResult(hamiltonian=True, witness_path=None),
    )


def dumps_instance(inst: AOIInstance) -> str:
    return json.dumps(instance_to_document(inst), ensure_ascii=False)


def loads_instance(text: str) -> AOIInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return document_to_instance(doc)


def write_corpus(instances: Iterable[AOIInstance], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(dumps_instance(inst))
            fh.write("\n")
            count += 1
    return count


def iter_corpus(path) -> Iterator[AOIInstance]:
    """Streaming parse: one instance per non-empty line."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield loads_instance(line)


def read_corpus(path) -> list:
    return list(iter_corpus(path))
