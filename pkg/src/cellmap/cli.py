"""Command-line front end: ``cellmap <command> --config FILE --out DIR``.

Exit status is 0 on success, 1 for bad input (config, files, arguments)
and 2 when an analysis fails.  Every command computes its results before
touching the output directory, so failures leave no partial output.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import artifacts_io as aio
from .cellspace import CellSpace
from .config import load_config
from .doc import playback, synthesize_doc
from .errors import (CellMapError, ConfigError, DomainError, FormatError, LayoutError, RangeError)
from .gcm import MonteCarlo, Subdivision, build_gcm, classify_gcm, default_sampling, gcm_boundary_report
from .models import simulate
from .reach import build_controlled_table, controllable_regions, region_grid_report
from .robust import ControllableCells, ModifiedCells, SweepSpec, run_sweep
from .scm import build_scm, scm_grid_report, unravel

INPUT_ERRORS = (ConfigError, FormatError, LayoutError, DomainError, RangeError, FileNotFoundError)


class UsageError(CellMapError):
    pass


def _fmt(v):
    return aio.format_number(v)


def _write(out: Path, files: dict):
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        path = out / name
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            with open(path, "w", newline="\n") as f:
                f.write(content)


def _summary(pairs) -> str:
    return "".join(f"{k}={_fmt(v) if not isinstance(v, str) else v}\n" for k, v in pairs)


def _grid_files(stem, grid, cs: CellSpace):
    files = {}
    if cs.ndim <= 2:
        files[f"{stem}.csv"] = aio.write_grid(None, grid)
        files[f"{stem}.pgm"] = aio.write_pgm(None, grid)
    return files


def _step_for(cfg, mode):
    loop = cfg.loop if mode == "quantized" else cfg.loop.without_quantizers()
    if loop.gain is None and loop.m > 0:
        raise ConfigError("$.control: a state-feedback law ('gain' or 'lqr') is required for closed-loop maps")
    cs = cfg.cellspace
    if mode == "quantized" and loop.roundoff is not None:
        cs = CellSpace.from_quantizers(loop.roundoff)
    return loop.step, cs


def cmd_scm(args):
    cfg = load_config(args.config)
    step, cs = _step_for(cfg, args.mode)
    image = build_scm(step, cs, args.threads)
    ur = unravel(image)
    one_based = cfg.raw.get("scm", {}).get("one_based", False)
    off = 1 if one_based else 0
    lines = [f"groups={ur.n_groups}", f"sink_bound={len(ur.sink_bound())}"]
    for g, (per, cells) in enumerate(zip(ur.periods, ur.periodic_cells), start=1):
        lines.append(f"group {g}: period={per} cells={' '.join(str(c + off) for c in cells)} "
                     f"domain={int(np.sum(ur.group_id == g))} max_steps={int(ur.steps_to_group[ur.group_id == g].max())}")
    vec = " ".join(str(i + off) if i >= 0 else "S" for i in image.tolist())
    lines.append(f"vector=[{vec}]")
    files = {
        "transition_map.csv": aio.write_transition_map(None, image, one_based),
        "unravel.txt": "\n".join(lines) + "\n",
        "steps.csv": "cell,group,steps\n" + "".join(
            f"{c + off},{g},{s}\n" for c, (g, s) in enumerate(zip(ur.group_id.tolist(), ur.steps_to_group.tolist()))),
    }
    files.update(_grid_files("grid", scm_grid_report(ur, cs), cs))
    _write(Path(args.out), files)
    print(lines[-1])
    return 0


def _parse_sampling(text, cs):
    if text is None:
        return default_sampling(cs)
    kind, _, rest = text.partition(":")
    try:
        if kind == "subdivision":
            return Subdivision(int(rest))
        if kind == "mc":
            n, _, seed = rest.partition(",")
            return MonteCarlo(int(n), int(seed) if seed else 0)
    except ValueError as e:
        raise UsageError(f"bad --sampling {text!r}: {e}") from e
    raise UsageError(f"bad --sampling {text!r}; use subdivision:K or mc:N,seed")


def cmd_gcm(args):
    cfg = load_config(args.config)
    step, cs = _step_for(cfg, "quantized")
    sampling = _parse_sampling(args.sampling, cs)
    W = build_gcm(step, cs, sampling, args.threads)
    cls = classify_gcm(W)
    grid = gcm_boundary_report(cls, cs)
    codes, counts = np.unique(np.asarray(grid, dtype=str), return_counts=True)
    summary = [("persistent_groups", len(cls.persistent_groups)), ("transient", len(cls.transient_cells))]
    summary += [(f"class_{c}", int(n)) for c, n in zip(codes, counts)]
    files = {"gcm.csv": aio.write_gcm_csv(None, W), "summary.txt": _summary(summary)}
    files.update(_grid_files("grid", grid, cs))
    _write(Path(args.out), files)
    print(" ".join(f"{k}={v}" for k, v in summary))
    return 0


def _require_controls(cfg):
    if cfg.controls is None:
        raise ConfigError("$.control.control_set: required for this command")
    return cfg.controls


def cmd_reach(args):
    cfg = load_config(args.config)
    cs = cfg.cellspace
    table = build_controlled_table(cfg.plant, cs, _require_controls(cfg), args.threads)
    res = controllable_regions(table, cfg.target)
    line = f"controllable={res.count} uncontrollable={cs.total - res.count}"
    files = {
        "summary.txt": line + "\n" + _summary([("layers", res.layers), ("total", cs.total)]),
        "steps.csv": "cell,min_steps,witness\n" + "".join(
            f"{c},{int(s) if np.isfinite(s) else -1},{w}\n"
            for c, (s, w) in enumerate(zip(res.min_steps.tolist(), res.witness.tolist()))),
    }
    files.update(_grid_files("grid", region_grid_report(res, cs), cs))
    _write(Path(args.out), files)
    print(line)
    return 0


def _parse_sweep(text, cfg):
    name, _, rng = text.partition("=")
    sw = cfg.raw.get("sweep")
    if sw is None:
        raise ConfigError("$.sweep: section required for robust")
    if name != sw["name"]:
        raise UsageError(f"sweep parameter {name!r} does not match config sweep name {sw['name']!r}")
    try:
        lo, hi, step = (float(v) for v in rng.split(":"))
    except ValueError as e:
        raise UsageError(f"bad --sweep {text!r}; use name=lo:hi:step") from e
    if step <= 0 or hi < lo:
        raise UsageError("sweep needs step > 0 and hi >= lo")
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def cmd_robust(args):
    cfg = load_config(args.config)
    values = _parse_sweep(args.sweep, cfg)
    cs = cfg.cellspace
    if args.metric == "modified":
        baseline = cfg.raw["sweep"].get("baseline", 0.0)
        if args.mode == "quantized":
            metric, factory = ModifiedCells(baseline), (lambda p: cfg.loop_with(p).step)
        else:
            metric, factory = ModifiedCells(baseline), (lambda p: cfg.loop_with(p).without_quantizers().step)
    elif args.closed_loop:
        if cfg.gain is None:
            raise ConfigError("$.control: closed-loop controllability needs 'gain' or 'lqr'")
        loop_of = (lambda p: cfg.loop_with(p)) if args.mode == "quantized" else \
            (lambda p: cfg.loop_with(p).without_quantizers())
        metric, factory = ControllableCells(target=cfg.target, mode="closed-loop"), (lambda p: loop_of(p).step)
    else:
        metric = ControllableCells(_require_controls(cfg), cfg.target, "open-loop")
        factory = cfg.plant_with
    points = run_sweep(SweepSpec(values, factory, metric), cs, args.threads)
    text = aio.write_curve(None, points)
    _write(Path(args.out), {"curve.csv": text})
    sys.stdout.write(text)
    return 0


def cmd_doc(args):
    cfg = load_config(args.config)
    cs = cfg.cellspace
    U = _require_controls(cfg)
    table = build_controlled_table(cfg.plant, cs, U, args.threads)
    doc = synthesize_doc(cfg.plant, cs, U, cfg.cost, cfg.target, table=table)
    stats = doc.value_stats()
    res_grid = np.where(doc.controllable, "C", "U").astype(object)
    res_grid[doc.target] = "T"
    files = {"doc.bin": aio.save_doc(doc), "doc.csv": aio.doc_csv(None, doc),
             "summary.txt": _summary(list(stats.items()))}
    files.update(_grid_files("grid", res_grid.reshape(cs.shape), cs))
    _write(Path(args.out), files)
    print(f"controllable={stats['controllable']} uncontrollable={stats['uncontrollable']}")
    return 0


def _parse_vector(text, n):
    try:
        v = [float(t) for t in text.replace(",", " ").split()]
    except ValueError as e:
        raise UsageError(f"bad vector {text!r}") from e
    if len(v) != n:
        raise UsageError(f"expected {n} components, got {len(v)}")
    return np.array(v)


def cmd_simulate(args):
    cfg = load_config(args.config)
    sim = cfg.raw.get("simulate", {})
    if args.x0 is not None:
        x0 = _parse_vector(args.x0, cfg.cellspace.ndim)
    elif "x0" in sim:
        x0 = np.asarray(sim["x0"], dtype=float)
    else:
        raise UsageError("no --x0 given and the config has no simulate.x0")
    steps = args.steps if args.steps is not None else sim.get("steps", 100)
    if args.doc:
        doc = aio.load_doc(args.doc)
        res = playback(doc, cfg.plant, x0, max_steps=steps)
        text = aio.write_trace(None, res.states, res.controls)
        summary = [("cost", res.cost), ("reached", "yes" if res.reached else "no"), ("steps", res.steps)]
    else:
        guard = cfg.cellspace.scaled_box(sim.get("guard_factor", 10.0))
        tr = simulate(cfg.loop, x0, steps, cfg.cost, guard)
        text = aio.write_trace(None, tr.states, tr.controls, tr.costs)
        summary = [("cost", tr.total_cost), ("steps", steps)]
    _write(Path(args.out), {"trace.csv": text, "summary.txt": _summary(summary)})
    print(" ".join(f"{k}={_fmt(v) if not isinstance(v, str) else v}" for k, v in summary))
    return 0


def cmd_export_rom(args):
    doc = aio.load_doc(args.doc)
    layout = aio.RomLayout.preset(args.layout, doc.cellspace, args.data_bits)
    image = aio.export_rom(doc, layout)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    aio.write_rom(out, doc, layout)
    print(f"wrote {len(image)} bytes to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cellmap", description="Cell-mapping analysis of quantized control systems")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: $CELLMAP_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="JSON file or shipped config name")
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    s = sub.add_parser("scm", help="simple cell map, periodic groups, domains of attraction")
    common(s)
    s.add_argument("--mode", choices=["exact", "quantized"], default="exact")
    s.set_defaults(func=cmd_scm)

    s = sub.add_parser("gcm", help="generalized cell map of the quantized loop")
    common(s)
    s.add_argument("--sampling", help="subdivision:K or mc:N,seed")
    s.set_defaults(func=cmd_gcm)

    s = sub.add_parser("reach", help="controllable regions")
    common(s)
    s.set_defaults(func=cmd_reach)

    s = sub.add_parser("robust", help="parameter sweep of a robustness measure")
    common(s)
    s.add_argument("--sweep", required=True, help="name=lo:hi:step")
    s.add_argument("--metric", choices=["modified", "controllable"], required=True)
    s.add_argument("--mode", choices=["exact", "quantized"], default="exact")
    s.add_argument("--closed-loop", action="store_true", help="controllability of plant + feedback law")
    s.set_defaults(func=cmd_robust)

    s = sub.add_parser("doc", help="synthesize a discrete optimal control table")
    common(s)
    s.set_defaults(func=cmd_doc)

    s = sub.add_parser("simulate", help="closed-loop trace (feedback law, or DOC playback with --doc)")
    common(s)
    s.add_argument("--x0")
    s.add_argument("--steps", type=int)
    s.add_argument("--doc", help="DOC1 file to play back instead of the feedback law")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("export-rom", help="write a DOC table as a ROM image plus JSON manifest")
    s.add_argument("--doc", required=True)
    s.add_argument("--layout", choices=list(aio.PRESETS), required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--data-bits", type=int, default=8)
    s.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_export_rom)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, *INPUT_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (CellMapError, ArithmeticError, ValueError) as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
