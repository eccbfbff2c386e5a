"""Command-line runner: instance generation, exact solving, VQEG runs and sweeps.

Exit codes: 0 success, 1 usage or parse error, 2 solver or run failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, VQEGError
from .exact_solver import solve_lp, solve_support_enum
from .extragradient import EGConfig, run, write_trace
from .game_core import GameKind, PayoffMatrix, generate, nash_gap
from .oracle import EXACT

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2
CSV_COLUMNS = ["kind", "size", "seed", "shots", "gap_last", "gap_avg", "passed", "wall_ms", "evals", "error"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path: str) -> list[str]:
    """Turn a flat ``key = value`` file into flag tokens.

    Keys mirror long flag names (``steps``, ``record-every`` or ``record_every``);
    ``true``/``false`` toggle switches. ``#`` starts a comment.
    """
    tokens: list[str] = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens += [flag, value]
    return tokens


def _csv_list(kind):
    def parse(text: str):
        try:
            return [kind(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _shots_value(text: str):
    return "exact" if text.strip().lower() == "exact" else int(text)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--exact", action="store_true", help="exact expectations (infinite shots)")
    p.add_argument("--layers", type=int, default=None, help="ansatz depth for both players (default: by size)")
    p.add_argument("--box", type=float, default=2 * math.pi, help="half-width of the parameter box")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of run seeds, starting at --seed")
    p.add_argument("--config", default=None, help="flat key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vqeg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a game instance as JSON")
    gen.add_argument("kind_pos", nargs="?", metavar="KIND")
    gen.add_argument("size_pos", nargs="?", type=int, metavar="SIZE")
    gen.add_argument("--game", choices=[k.value for k in GameKind])
    gen.add_argument("--size", type=int)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)
    gen.add_argument("--config", default=None)

    exact = sub.add_parser("exact", help="solve a matrix file by linear programming")
    exact.add_argument("matrix_pos", nargs="?", metavar="MATRIX")
    exact.add_argument("--matrix")
    exact.add_argument("--verify", action="store_true", help="cross-check with support enumeration")
    exact.add_argument("--out", default=None)
    exact.add_argument("--config", default=None)

    solve = sub.add_parser("solve", help="run VQEG on one game")
    solve.add_argument("--matrix")
    solve.add_argument("--game", choices=[k.value for k in GameKind])
    solve.add_argument("--size", type=int)
    solve.add_argument("--shots", type=int, default=None)
    solve.add_argument("--out", default=None, help="JSONL trace of the best run")
    solve.add_argument("--out-dir", default=None, help="directory for one trace per seed")
    _add_run_flags(solve)

    sweep = sub.add_parser("sweep", help="grid of VQEG runs with a summary CSV")
    sweep.add_argument("--game", type=_csv_list(str), default=["dominant"])
    sweep.add_argument("--size", type=_csv_list(int), default=[4])
    sweep.add_argument("--shots", type=_csv_list(_shots_value), default=None)
    sweep.add_argument("--out-dir", default="sweep_out")
    _add_run_flags(sweep)
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        argv = list(argv)
        pos = argv.index(args.command) + 1
        args = parser.parse_args(argv[:pos] + read_config(args.config) + argv[pos:])
    return args


def _load_game(args) -> tuple[PayoffMatrix, str, Optional[str]]:
    if args.matrix:
        return PayoffMatrix.load(args.matrix), Path(args.matrix).stem, None
    if not args.game or not args.size:
        raise UsageError("need --matrix PATH or --game KIND --size N")
    inst = generate(args.game, args.size, args.seed)
    return inst.matrix, inst.label, inst.kind.value


def _eg_config(args, seed: int, shots) -> EGConfig:
    return EGConfig(steps=args.steps, eta=args.eta, shots=shots, box_halfwidth=args.box, seed=seed,
                    layers_r=args.layers, layers_c=args.layers, record_every=args.record_every)


def cmd_gen(args) -> int:
    kind = args.game or args.kind_pos
    size = args.size or args.size_pos
    if kind is None or size is None:
        raise UsageError("gen needs a game kind and a size")
    inst = generate(kind, size, args.seed)
    text = inst.matrix.to_json()
    if args.out:
        try:
            inst.matrix.save(args.out)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from exc
    else:
        print(text)
    print(f"# {inst.label}: {inst.matrix.m}x{inst.matrix.n}, |A|_inf = {inst.matrix.inf_norm():.6g}",
          file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_exact(args) -> int:
    path = args.matrix or args.matrix_pos
    if not path:
        raise UsageError("exact needs a matrix file")
    try:
        a = PayoffMatrix.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from exc
    sol = solve_lp(a)
    gap = nash_gap(a, sol.x_star, sol.y_star)
    report = {
        "value": sol.value,
        "x_star": sol.x_star.probs.tolist(),
        "y_star": sol.y_star.probs.tolist(),
        "support_row": sol.x_star.support(),
        "support_col": sol.y_star.support(),
        "gap": gap,
        "pivots": sol.iterations,
        "config": {"matrix": path, "verify": bool(args.verify)},
    }
    print(f"value v* = {sol.value:.12g}")
    print(f"row support {report['support_row']}  column support {report['support_col']}")
    print(f"Nash gap of returned profile = {gap:.3e}")
    status = EXIT_OK
    if args.verify:
        enum = solve_support_enum(a)
        diff = abs(enum.value - sol.value)
        report["verify_value"] = enum.value
        report["verify_diff"] = diff
        ok = diff <= 1e-9
        print(f"support enumeration value = {enum.value:.12g}  |diff| = {diff:.3e}  {'OK' if ok else 'MISMATCH'}")
        status = EXIT_OK if ok else EXIT_FAILURE
    print(json.dumps(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return status


def _resolve_shots(args):
    if args.exact or args.shots is None:
        return EXACT
    return args.shots


def cmd_solve(args) -> int:
    a, label, _ = _load_game(args)
    shots = _resolve_shots(args)
    v_star = solve_lp(a).value
    results = []
    for k in range(max(1, args.seeds)):
        seed = args.seed + k
        res, trace = run(a, _eg_config(args, seed, shots))
        results.append((res, trace))
        print(f"seed {seed}: gap_last={res.final_gap_last:.3e} gap_avg={res.final_gap_avg:.3e} "
              f"{'PASS' if res.passed else 'FAIL'}")
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            write_trace(Path(args.out_dir) / f"{label}-seed{seed}.jsonl", trace, res)
    best, best_trace = min(results, key=lambda rt: rt[0].best_gap)
    if args.out:
        write_trace(args.out, best_trace, best)
    print(f"game {label} ({a.m}x{a.n}), shots={'exact' if shots is EXACT else shots}, "
          f"layers={best.layers}, T={args.steps}, eta={args.eta}")
    print(f"best seed {best.config.seed}: final gap last={best.final_gap_last:.3e} "
          f"tail-avg={best.final_gap_avg:.3e}")
    print(f"value error |L_final - v*| = {abs(best.final_value - v_star):.3e} (v* = {v_star:.9g})")
    print(f"leakage row={best.leak_row:.3e} col={best.leak_col:.3e}  circuit evals={best.evals}")
    print(f"{'PASS' if best.passed else 'FAIL'} at eps={best.config.epsilon:g}")
    return EXIT_OK


def _run_cell(cell: dict) -> dict:
    """One sweep cell; never raises, failures land in the ``error`` column."""
    row = {"kind": cell["kind"], "size": cell["size"], "seed": cell["seed"], "shots": cell["shots"],
           "gap_last": "", "gap_avg": "", "passed": False, "wall_ms": 0, "evals": 0, "error": ""}
    t0 = time.perf_counter()
    try:
        inst = generate(cell["kind"], cell["size"], cell["instance_seed"])
        cfg = EGConfig(**cell["eg"])
        res, trace = run(inst, cfg)
        write_trace(cell["trace_path"], trace, res)
        row.update(gap_last=repr(res.final_gap_last), gap_avg=repr(res.final_gap_avg), passed=res.passed,
                   evals=res.evals)
    except Exception as exc:  # recorded per cell so the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_ms"] = int(round(1000 * (time.perf_counter() - t0)))
    return row


def thread_count() -> int:
    env = os.environ.get("VQEG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"VQEG_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def sweep_cells(args) -> tuple[list[dict], dict]:
    shots_list = ["exact"] if args.exact or not args.shots else args.shots
    for kind in args.game:
        GameKind(kind)
    resolved = {
        "game": args.game, "size": args.size, "shots": shots_list, "seed": args.seed, "seeds": args.seeds,
        "eta": args.eta, "steps": args.steps, "layers": args.layers, "box": args.box,
        "record_every": args.record_every,
    }
    out_dir = Path(args.out_dir)
    cells = []
    for kind in args.game:
        for size in args.size:
            for shots in shots_list:
                for k in range(args.seeds):
                    seed = args.seed + k
                    cfg = _eg_config(args, seed, shots)
                    name = f"{kind}-{size}-{shots}-seed{seed}.jsonl"
                    cells.append({"kind": kind, "size": size, "seed": seed, "shots": shots,
                                  "instance_seed": args.seed, "eg": cfg.to_dict(),
                                  "trace_path": str(out_dir / "traces" / name)})
    return cells, resolved


def aggregate(rows: list[dict], epsilon: float = 5e-3) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["kind"], row["size"], row["shots"])
        if row["error"]:
            gaps = [math.inf]
        else:
            gaps = [min(float(row["gap_last"]), float(row["gap_avg"]))]
        groups.setdefault(key, []).extend(gaps)
    out = []
    for (kind, size, shots), gaps in groups.items():
        avg, best = float(np.mean(gaps)), float(np.min(gaps))
        out.append({"kind": kind, "size": size, "shots": shots, "gap_avg": avg, "pass_avg": avg <= epsilon,
                    "gap_best": best, "pass_best": best <= epsilon, "runs": len(gaps)})
    return out


def cmd_sweep(args) -> int:
    if not args.game or not args.size or args.seeds < 1:
        raise UsageError("sweep needs non-empty --game, --size and --seeds >= 1")
    try:
        cells, resolved = sweep_cells(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out_dir)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    workers = min(thread_count(), len(cells))
    if workers <= 1:
        rows = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))

    buf = io.StringIO()
    buf.write("# config: " + json.dumps(resolved, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    (out_dir / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")

    print(f"{'game':<10}{'size':>6}{'shots':>8}{'gap (avg)':>14}{'PASS':>6}{'gap (best)':>14}{'PASS':>6}")
    for g in aggregate(rows):
        print(f"{g['kind']:<10}{g['size']:>6}{str(g['shots']):>8}{g['gap_avg']:>14.3e}"
              f"{'yes' if g['pass_avg'] else 'no':>6}{g['gap_best']:>14.3e}{'yes' if g['pass_best'] else 'no':>6}")
    failed = sum(1 for r in rows if r["error"])
    if failed:
        print(f"{failed} cell(s) failed; see the error column of {out_dir / 'summary.csv'}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "exact": cmd_exact, "solve": cmd_solve, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"vqeg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VQEGError, OSError) as exc:
        print(f"vqeg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
