"""Operator entry point: generate, audit, solve, train, evaluate, render.

Every command writes a manifest next to its primary output.  The manifest's
deterministic section (command, config, seeds, output checksums) is
byte-identical across reruns with the same seed; wall time is recorded
separately as informational.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
assertion failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .aoi_graph import AOIInstance, read_corpus, write_corpus
from .dataset import (AUDIT_YES, GenerationConfig, audit_hamiltonian,
                      generate_corpus)
from .errors import ConfigError, HexcoverError, SchemaError
from .evaluation import (aggregate, read_rows_csv, render_paths, score_route,
                         write_rows_csv)
from .heuristics import METHODS, exact_dfs, run as run_heuristic
from .inference import MODE_METHOD_NAMES, MODES, InferenceConfig, solve_mode
from .policy import PolicyDims, PolicyParams, load_checkpoint, save_checkpoint
from .training import (TrainConfig, TrainerState, load_trainer_state,
                       save_trainer_state, train)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(command: str, config: dict, seeds: list, inputs: list,
                   outputs: list, wall_time_s: float, path: Path) -> dict:
    manifest = {
        "format_version": "1",
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": [str(p) for p in inputs],
        "outputs": {Path(p).name: _sha256(Path(p)) for p in outputs},
        "tool_version": __version__,
        "wall_time_s": round(wall_time_s, 3),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return manifest


def manifest_deterministic_view(manifest: dict) -> dict:
    """The portion of a manifest that must be identical across reruns."""
    return {k: v for k, v in manifest.items() if k != "wall_time_s"}


def _band(text: str):
    lo, hi = (float(x) for x in text.split(","))
    return (lo, hi)


# ---------------------------------------------------------------------------
# generate / audit
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    ratios = (8, 1, 1)
    total = args.count
    sizes = [total * r // sum(ratios) for r in ratios]
    for i in range(total - sum(sizes)):
        sizes[i % 3] += 1
    cfg = GenerationConfig(
        area_band=args.area_band, rs_band=args.rs_band,
        base_standoff_band=args.standoff_band, target_cell_band=args.cell_band,
        obstacle_removal_rate=args.obstacle_rate,
        counts=tuple(int(s) for s in sizes), master_seed=args.seed,
    )
    t0 = time.perf_counter()
    instances = generate_corpus(cfg, jobs=args.jobs)
    out = Path(args.out)
    count = write_corpus(instances, out)
    manifest = write_manifest(
        "generate",
        {"count": total, "area_band": list(cfg.area_band),
         "rs_band": list(cfg.rs_band),
         "standoff_band": list(cfg.base_standoff_band),
         "cell_band": list(cfg.target_cell_band),
         "obstacle_rate": cfg.obstacle_removal_rate,
         "counts": list(cfg.counts)},
        [args.seed], [], [out], time.perf_counter() - t0,
        out.with_suffix(out.suffix + ".manifest.json"),
    )
    print(f"wrote {count} audited instances to {out}")
    print(f"manifest: {json.dumps(manifest['outputs'])}")
    return EXIT_OK


def cmd_audit(args) -> int:
    instances = read_corpus(args.corpus)
    failures = 0
    for inst in instances:
        report = audit_hamiltonian(inst.graph, args.budget)
        ok = report.status == AUDIT_YES
        in_band = args.cell_band[0] <= inst.graph.n_cells <= args.cell_band[1]
        if not (ok and in_band):
            failures += 1
            print(f"FAIL {inst.id}: audit={report.status} cells={inst.graph.n_cells}")
    print(f"audited {len(instances)} instances, {failures} failures")
    return EXIT_OK if failures == 0 else EXIT_DATA


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _solve_one_heuristic(method: str, inst: AOIInstance, timing: bool):
    t0 = time.perf_counter()
    if method == "exact_dfs":
        route = exact_dfs(inst.graph)
    else:
        route = run_heuristic(method, inst.graph)
    wall = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
    return route, wall


def cmd_solve(args) -> int:
    if (args.method is None) == (args.mode is None):
        raise ConfigError("pass exactly one of --method or --mode")
    instances = read_corpus(args.corpus)
    rows = []
    route_docs = []
    t0 = time.perf_counter()
    if args.method is not None:
        if args.method not in METHODS and args.method != "exact_dfs":
            raise ConfigError(f"unknown method {args.method!r}")
        if args.jobs > 1 and len(instances) > 1:
            from multiprocessing import Pool
            with Pool(processes=args.jobs) as pool:
                solved = pool.starmap(
                    _solve_one_heuristic,
                    [(args.method, inst, args.timing) for inst in instances],
                    chunksize=1)
        else:
            solved = [_solve_one_heuristic(args.method, inst, args.timing)
                      for inst in instances]
        for inst, (route, wall) in zip(instances, solved):
            rows.append(score_route(route, inst.graph, wall, inst.id))
            route_docs.append(route)
        seeds = []
    else:
        if args.checkpoint is None:
            raise ConfigError(f"mode {args.mode!r} requires --checkpoint")
        params, _ = load_checkpoint(args.checkpoint)
        icfg = InferenceConfig(mode=args.mode, k=args.k, seed=args.seed)
        for inst in instances:
            t1 = time.perf_counter()
            route = solve_mode(args.mode, inst, params, icfg)
            wall = (time.perf_counter() - t1) * 1000.0 if args.timing else 0.0
            rows.append(score_route(route, inst.graph, wall, inst.id))
            route_docs.append(route)
        seeds = [args.seed]
    out = Path(args.out)
    write_rows_csv(rows, out)
    outputs = [out]
    if args.route_docs:
        docs_path = Path(args.route_docs)
        with open(docs_path, "w", encoding="utf-8") as fh:
            for inst, route in zip(instances, route_docs):
                fh.write(json.dumps({
                    "method": route.method, "instance_id": inst.id,
                    "nodes": [int(v) for v in route.nodes],
                    "revisits": route.revisit_count,
                    "complete": route.complete,
                    "hamiltonian": route.hamiltonian,
                    "wall_ms": 0.0,
                }, ensure_ascii=False))
                fh.write("\n")
        outputs.append(docs_path)
    write_manifest(
        "solve",
        {"method": args.method, "mode": args.mode, "k": args.k,
         "timing": bool(args.timing), "corpus": str(args.corpus)},
        seeds, [args.corpus], outputs, time.perf_counter() - t0,
        out.with_suffix(out.suffix + ".manifest.json"),
    )
    solved_n = sum(1 for r in rows if r.hamiltonian)
    print(f"wrote {len(rows)} rows to {out} (hamiltonian on {solved_n})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    instances = read_corpus(args.corpus)
    train_split = [i for i in instances if i.split == "train"]
    val_split = [i for i in instances if i.split == "val"]
    if not train_split or not val_split:
        raise SchemaError("corpus is missing train/val split tags")
    dims = PolicyDims(d=args.d, layers=args.layers, heads=args.heads,
                      glimpses=args.glimpses)
    cfg = TrainConfig(
        rollouts_per_instance=args.rollouts, inner_epochs=args.inner_epochs,
        clip_eps=args.clip_eps, entropy_beta=args.entropy_beta, lr=args.lr,
        batch_instances=args.batch, minibatch_traj=args.minibatch,
        grad_norm_cap=args.grad_norm_cap, max_epochs=args.max_epochs,
        patience=args.patience, p_aug=args.p_aug, t_init=args.t_init,
        t_final=args.t_final, seed=args.seed,
    )
    t0 = time.perf_counter()
    params = PolicyParams.init(dims, seed=args.seed)
    state = None
    if args.resume:
        params, _ = load_checkpoint(args.resume)
        state = load_trainer_state(str(args.resume) + ".state", params)
    result = train(train_split, val_split, params, cfg,
                   max_epochs=args.epochs, state=state,
                   on_epoch=lambda s: print(
                       f"epoch {s['epoch']}: train_sr={s['train_sr']:.3f} "
                       f"val_sr={s['val_sr']:.3f} T={s['temperature']:.2f}"))
    out = Path(args.out)
    save_checkpoint(result.params, out, seed=args.seed, epoch=result.best_epoch)
    save_trainer_state(result.state, result.final_flat, str(out) + ".state")
    outputs = [out, Path(str(out) + ".state")]
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for row in result.log:
                fh.write(json.dumps(row, ensure_ascii=False))
                fh.write("\n")
        outputs.append(Path(args.log))
    write_manifest(
        "train",
        {"dims": {"d": dims.d, "layers": dims.layers, "heads": dims.heads,
                  "glimpses": dims.glimpses},
         "epochs": args.epochs, "resume": bool(args.resume),
         "corpus": str(args.corpus)},
        [args.seed], [args.corpus], outputs, time.perf_counter() - t0,
        out.with_suffix(out.suffix + ".manifest.json"),
    )
    print(f"best epoch {result.best_epoch} val_sr={result.best_val_sr:.3f}; "
          f"checkpoint: {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / render
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    rows = []
    for path in args.routes:
        rows.extend(read_rows_csv(path))
    t0 = time.perf_counter()
    try:
        report = aggregate(rows, args.reference)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    text = report.table()
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    write_manifest("evaluate", {"reference": args.reference,
                                "routes": [str(p) for p in args.routes]},
                   [], list(args.routes), [out], time.perf_counter() - t0,
                   out.with_suffix(out.suffix + ".manifest.json"))
    print(text, end="")
    return EXIT_OK


def cmd_render(args) -> int:
    instances = {i.id: i for i in read_corpus(args.corpus)}
    inst = instances.get(args.id) if args.id else next(iter(instances.values()))
    if inst is None:
        raise SchemaError(f"instance {args.id!r} not found in corpus")
    routes = {}
    if args.route_docs:
        from .heuristics import Route
        with open(args.route_docs, "r", encoding="utf-8") as fh:
            for line in fh:
                doc = json.loads(line)
                if doc["instance_id"] == inst.id:
                    routes[doc["method"]] = Route(
                        nodes=doc["nodes"], revisit_count=doc["revisits"],
                        complete=doc["complete"], hamiltonian=doc["hamiltonian"],
                        method=doc["method"])
    svg = render_paths(inst, routes)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"rendered {inst.id} with {len(routes)} routes to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hexcover",
                                description="Coverage path planning on "
                                            "irregular hexagonal grids.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate an audited instance corpus")
    g.add_argument("--count", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--area-band", type=_band, default=(1600.0, 3600.0),
                   metavar="LO,HI")
    g.add_argument("--rs-band", type=_band, default=(5.0, 7.0), metavar="LO,HI")
    g.add_argument("--standoff-band", type=_band, default=(100.0, 250.0),
                   metavar="LO,HI")
    g.add_argument("--cell-band", type=lambda s: tuple(int(x) for x in s.split(",")),
                   default=(28, 46), metavar="LO,HI")
    g.add_argument("--obstacle-rate", type=float, default=0.15)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    a = sub.add_parser("audit", help="re-run the Hamiltonian audit on a corpus")
    a.add_argument("--corpus", required=True)
    a.add_argument("--budget", type=int, default=200_000)
    a.add_argument("--cell-band", type=lambda s: tuple(int(x) for x in s.split(",")),
                   default=(28, 46), metavar="LO,HI")
    a.set_defaults(fn=cmd_audit)

    s = sub.add_parser("solve", help="run a baseline method or an RL mode")
    s.add_argument("--corpus", required=True)
    s.add_argument("--method", choices=sorted(METHODS) + ["exact_dfs"])
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--checkpoint")
    s.add_argument("--k", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--timing", action="store_true",
                   help="record wall-clock ms per instance (off by default "
                        "so reruns are byte-identical)")
    s.add_argument("--route-docs", help="also write route node sequences (JSONL)")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_solve)

    t = sub.add_parser("train", help="train the pointer policy with GRPO")
    t.add_argument("--corpus", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--log")
    t.add_argument("--resume", help="checkpoint to resume from (.state sidecar)")
    t.add_argument("--epochs", type=int, default=40)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--d", type=int, default=32)
    t.add_argument("--layers", type=int, default=2)
    t.add_argument("--heads", type=int, default=4)
    t.add_argument("--glimpses", type=int, default=2)
    t.add_argument("--rollouts", type=int, default=16, help="rollouts per instance")
    t.add_argument("--inner-epochs", type=int, default=4)
    t.add_argument("--clip-eps", type=float, default=0.2)
    t.add_argument("--entropy-beta", type=float, default=0.02)
    t.add_argument("--lr", type=float, default=3e-5)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--minibatch", type=int, default=8)
    t.add_argument("--grad-norm-cap", type=float, default=0.5)
    t.add_argument("--max-epochs", type=int, default=300)
    t.add_argument("--patience", type=int, default=4)
    t.add_argument("--p-aug", type=float, default=0.9)
    t.add_argument("--t-init", type=float, default=1.5)
    t.add_argument("--t-final", type=float, default=1.0)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("evaluate", help="aggregate route CSVs into a report")
    e.add_argument("--routes", nargs="+", required=True)
    e.add_argument("--reference", default="rl_bok_2opt")
    e.add_argument("--out", required=True)
    e.set_defaults(fn=cmd_evaluate)

    r = sub.add_parser("render", help="render an instance and routes as SVG")
    r.add_argument("--corpus", required=True)
    r.add_argument("--id")
    r.add_argument("--route-docs")
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HexcoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
