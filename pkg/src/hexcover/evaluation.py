"""Scoring, aggregate reports, the latency protocol, and SVG renderings.

Distance is reported under two normalizations because they answer different
questions: `distance_cells` (route length over the inter-cell spacing) is
comparable to step counts, while `distance_norm` additionally divides by
the cell count.  Distance and turn aggregates are computed only on the
pairwise common solved subset with the reference method.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, fields

import numpy as np

from .aoi_graph import AOIGraph, AOIInstance
from .geometry import hex_corners
from .heuristics import Route, validate_route

_TURN_SNAP = 1e-6


@dataclass
class MetricsRow:
    method: str
    instance_id: str
    hamiltonian: bool
    complete: bool
    revisits: int
    distance_cells: float
    distance_norm: float
    turns: int
    steps: int
    wall_ms: float


CSV_HEADER = [f.name for f in fields(MetricsRow)]


def count_turns(nodes: list, graph: AOIGraph) -> int:
    """Number of non-zero heading changes along the walk."""
    turns = 0
    heading = None
    for a, b in zip(nodes, nodes[1:]):
        seg = graph.coords_nm[b] - graph.coords_nm[a]
        norm = float(np.hypot(*seg))
        direction = seg / norm
        if heading is not None:
            cos_t = min(1.0, max(-1.0, float(heading @ direction)))
            if math.acos(cos_t) >= _TURN_SNAP:
                turns += 1
        heading = direction
    return turns


def score_route(route: Route, graph: AOIGraph, wall_ms: float = 0.0,
                instance_id: str = "") -> MetricsRow:
    """Validate and score one route into a metrics row."""
    validate_route(route, graph)
    length = 0.0
    for a, b in zip(route.nodes, route.nodes[1:]):
        seg = graph.coords_nm[b] - graph.coords_nm[a]
        length += float(np.hypot(*seg))
    return MetricsRow(
        method=route.method,
        instance_id=instance_id,
        hamiltonian=route.hamiltonian,
        complete=route.complete,
        revisits=route.revisit_count,
        distance_cells=length / graph.cell_spacing,
        distance_norm=length / (graph.cell_spacing * graph.n_cells),
        turns=count_turns(route.nodes, graph),
        steps=len(route.nodes) - 1,
        wall_ms=wall_ms,
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class MethodAggregate:
    method: str
    n_instances: int
    hsr: float
    ccr: float
    revisits_mean: float
    revisits_std: float
    common_n: int
    distance_mean: float
    distance_std: float
    distance_norm_mean: float
    turns_mean: float
    turns_std: float
    steps_mean: float
    wall_ms_median: float


@dataclass
class EvalReport:
    reference: str
    aggregates: list  # MethodAggregate, reference first then by distance

    def table(self) -> str:
        out = io.StringIO()
        out.write(f"reference method: {self.reference}\n")
        out.write(f"{'method':28s} {'HSR%':>6s} {'CCR%':>6s} "
                  f"{'revisits':>14s} {'n':>5s} {'dist/cell':>14s} "
                  f"{'turns':>12s} {'steps':>7s} {'ms':>8s}\n")
        for a in self.aggregates:
            out.write(
                f"{a.method:28s} {100 * a.hsr:6.1f} {100 * a.ccr:6.1f} "
                f"{a.revisits_mean:6.1f}±{a.revisits_std:<6.1f} {a.common_n:5d} "
                f"{a.distance_mean:6.2f}±{a.distance_std:<6.2f} "
                f"{a.turns_mean:5.1f}±{a.turns_std:<5.1f} "
                f"{a.steps_mean:7.1f} {a.wall_ms_median:8.2f}\n")
        return out.getvalue()


def aggregate(rows: list, reference_method: str = "rl_bok_2opt") -> EvalReport:
    """Per-method aggregates plus pairwise common-subset route quality.

    The common subset for method m holds the instances that the reference
    solves under the strict single-visit criterion and that m completes.
    Raises ValueError when methods disagree on the instance set.
    """
    by_method = {}
    for r in rows:
        by_method.setdefault(r.method, {})[r.instance_id] = r
    if reference_method not in by_method:
        raise ValueError(f"reference method {reference_method!r} has no rows")
    id_sets = {m: set(d) for m, d in by_method.items()}
    universe = id_sets[reference_method]
    for m, ids in id_sets.items():
        if ids != universe:
            raise ValueError(f"method {m} covers a different instance set "
                             f"than {reference_method}")
    ref_solved = {i for i, r in by_method[reference_method].items() if r.hamiltonian}

    aggs = []
    for method in sorted(by_method):
        rows_m = list(by_method[method].values())
        common = [r for r in rows_m
                  if r.instance_id in ref_solved and r.complete]
        dist = np.array([r.distance_cells for r in common])
        dist_n = np.array([r.distance_norm for r in common])
        turns = np.array([r.turns for r in common])
        steps = np.array([r.steps for r in common])
        revs = np.array([r.revisits for r in rows_m])
        aggs.append(MethodAggregate(
            method=method,
            n_instances=len(rows_m),
            hsr=float(np.mean([r.hamiltonian for r in rows_m])),
            ccr=float(np.mean([r.complete for r in rows_m])),
            revisits_mean=float(revs.mean()),
            revisits_std=float(revs.std()),
            common_n=len(common),
            distance_mean=float(dist.mean()) if len(common) else math.nan,
            distance_std=float(dist.std()) if len(common) else math.nan,
            distance_norm_mean=float(dist_n.mean()) if len(common) else math.nan,
            turns_mean=float(turns.mean()) if len(common) else math.nan,
            turns_std=float(turns.std()) if len(common) else math.nan,
            steps_mean=float(steps.mean()) if len(common) else math.nan,
            wall_ms_median=float(np.median([r.wall_ms for r in rows_m])),
        ))
    aggs.sort(key=lambda a: (a.method != reference_method,
                             a.distance_mean if not math.isnan(a.distance_mean)
                             else math.inf))
    return EvalReport(reference=reference_method, aggregates=aggs)


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------

def write_rows_csv(rows: list, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([
                r.method, r.instance_id, int(r.hamiltonian), int(r.complete),
                r.revisits, f"{r.distance_cells:.9f}", f"{r.distance_norm:.9f}",
                r.turns, r.steps, f"{r.wall_ms:.4f}",
            ])


def read_rows_csv(path) -> list:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            rows.append(MetricsRow(
                method=rec[0], instance_id=rec[1],
                hamiltonian=bool(int(rec[2])), complete=bool(int(rec[3])),
                revisits=int(rec[4]), distance_cells=float(rec[5]),
                distance_norm=float(rec[6]), turns=int(rec[7]),
                steps=int(rec[8]), wall_ms=float(rec[9]),
            ))
    return rows


# ---------------------------------------------------------------------------
# Latency protocol
# ---------------------------------------------------------------------------

def measure_latency(solver, instances: list, warmup: int = 1) -> dict:
    """Median end-to-end per-instance latency, batch size 1.

    Includes per-instance setup inside `solver`; excludes file I/O (the
    instances are already in memory).  The first `warmup` calls are
    discarded.
    """
    for inst in instances[:warmup]:
        solver(inst)
    samples = []
    for inst in instances:
        t0 = time.perf_counter()
        solver(inst)
        samples.append((time.perf_counter() - t0) * 1000.0)
    return {"median_ms": float(np.median(samples)), "samples_ms": samples}


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_paths(instance: AOIInstance, routes: dict = None) -> str:
    """Deterministic SVG: hex cells, base/terminal, one polyline per route."""
    graph = instance.graph
    routes = routes or {}
    rh = graph.rs_nm
    pts = [graph.coords_nm[i] for i in range(graph.n_nodes)]
    allx = [p[0] for p in pts]
    ally = [p[1] for p in pts]
    margin = 2.5 * rh
    x0, x1 = min(allx) - margin, max(allx) + margin
    y0, y1 = min(ally) - margin, max(ally) + margin

    def sx(x):
        return f"{x - x0:.3f}"

    def sy(y):
        return f"{y1 - y:.3f}"  # flip: SVG y grows downward

    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" '
              f'viewBox="0 0 {x1 - x0:.3f} {y1 - y0:.3f}">\n')
    out.write(f'<rect width="{x1 - x0:.3f}" height="{y1 - y0:.3f}" fill="#f6f9fc"/>\n')
    for i in range(graph.n_cells):
        corners = hex_corners(graph.coords_nm[i], rh, graph.frame_angle)
        path = " ".join(f"{sx(cx)},{sy(cy)}" for cx, cy in corners)
        out.write(f'<polygon points="{path}" fill="#dbe9f6" '
                  f'stroke="#5b7fa6" stroke-width="0.25"/>\n')
    for name_idx, (name, route) in enumerate(sorted(routes.items())):
        color = _PALETTE[name_idx % len(_PALETTE)]
        coords = " ".join(f"{sx(graph.coords_nm[v][0])},{sy(graph.coords_nm[v][1])}"
                          for v in route.nodes)
        out.write(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                  f'stroke-width="0.6" stroke-opacity="0.85">'
                  f'<title>{name}</title></polyline>\n')
    bx, by = graph.coords_nm[graph.base]
    out.write(f'<circle cx="{sx(bx)}" cy="{sy(by)}" r="{0.5 * rh:.3f}" '
              f'fill="#1a1a1a"/>\n')
    out.write("</svg>\n")
    return out.getvalue()
