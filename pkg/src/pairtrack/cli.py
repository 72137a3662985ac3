"""Command-line surface.

Subcommands: simulate, track, eval, sweep, loss-audit. Every command takes
`--config FILE` (key=value lines) plus repeatable `--set key=value`
overrides, and is fully determined by (config, seed). Exit codes: 0 ok,
1 usage error, 2 data error.

CSV outputs start with a schema comment line `# pairtrack-csv-v1 <kind>`
followed by a fixed-order header row.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    apply_overrides,
    load_config,
    make_assoc_config,
    make_kalman_params,
    make_loss_weights,
    make_oracle_config,
    make_sampler_config,
    make_schedule,
    make_sim_config,
)
from .denoiser import FrameContext, OracleDenoiser
from .losses import GTPair, consistency_training_loss, pad_gt
from .metrics import clear_mot
from .mot_io import MotParseError, parse_mot_gt, parse_mot_result, write_mot_gt, write_mot_result
from .sampler import SamplerConfig
from .schedule import sigma_at
from .sim import simulate
from .tracker import track_sequence

CSV_SCHEMA = "pairtrack-csv-v1"


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this surface reserves 2
    # for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_values(args) -> dict:
    values = load_config(args.config)
    values = apply_overrides(values, args.set or [])
    if args.seed is not None:
        values["seed"] = args.seed
    return values


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_simulate(args) -> int:
    values = _load_values(args)
    seq = simulate(make_sim_config(values))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mot_gt(seq, out)
    print(f"wrote {out} ({len(seq.frames)} frames, {len(seq.identities())} objects)")
    return 0


def _track_one(values: dict, gt_path: Path, out_path: Path) -> None:
    scene = parse_mot_gt(gt_path)
    sched = make_schedule(values)
    denoiser = OracleDenoiser(make_oracle_config(values), sched)
    result = track_sequence(
        scene,
        denoiser,
        make_sampler_config(values),
        make_assoc_config(values),
        make_kalman_params(values),
        image_w=values["sim.image_w"],
        image_h=values["sim.image_h"],
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_mot_result(result, out_path)


def _track_worker(payload) -> str:
    values, gt_path, out_path = payload
    _track_one(values, Path(gt_path), Path(out_path))
    return str(out_path)


def cmd_track(args) -> int:
    values = _load_values(args)
    gt = Path(args.gt)
    if not gt.exists():
        raise DataError(f"no such path: {gt}")
    if gt.is_file():
        _track_one(values, gt, Path(args.out))
        print(f"wrote {args.out}")
        return 0
    seqs = sorted(gt.glob("*.txt"))
    if not seqs:
        raise DataError(f"no sequence files in {gt}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for seq_path in seqs:
        # per-sequence seed, stable under reordering
        child = dict(values)
        child["seed"] = (values["seed"] + zlib.crc32(seq_path.stem.encode())) % 2**31
        jobs.append((child, str(seq_path), str(out_dir / seq_path.name)))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for path in pool.map(_track_worker, jobs):
                print(f"wrote {path}")
    else:
        for payload in jobs:
            print(f"wrote {_track_worker(payload)}")
    return 0


_EVAL_COLUMNS = ["seq", "mota", "idf1", "idp", "idr", "fp", "fn", "idsw", "frag", "mt", "ml", "gt_total"]


def _eval_pairs(args) -> list[tuple[str, Path, Path]]:
    gt, res = Path(args.gt), Path(args.res)
    if not gt.exists() or not res.exists():
        raise DataError(f"no such path: {gt if not gt.exists() else res}")
    if gt.is_file() and res.is_file():
        return [(gt.stem, gt, res)]
    if gt.is_dir() and res.is_dir():
        pairs = []
        for g in sorted(gt.glob("*.txt")):
            r = res / g.name
            if not r.exists():
                raise DataError(f"result for sequence {g.stem!r} missing under {res}")
            pairs.append((g.stem, g, r))
        if not pairs:
            raise DataError(f"no sequence files in {gt}")
        extra = {p.name for p in res.glob("*.txt")} - {g.name for _, g, _ in pairs}
        if extra:
            raise DataError(f"results with no matching ground truth: {sorted(extra)}")
        return pairs
    raise DataError("--gt and --res must both be files or both be directories")


def cmd_eval(args) -> int:
    pairs = _eval_pairs(args)
    rows = []
    for name, gt_path, res_path in pairs:
        m = clear_mot(parse_mot_gt(gt_path), parse_mot_result(res_path), persistent=not args.strict)
        rows.append({"seq": name, **m.as_row()})

    header = " ".join(f"{c:>8}" for c in _EVAL_COLUMNS)
    print(header)
    for r in rows:
        print(
            f"{r['seq']:>8} {r['mota']:>8.4f} {r['idf1']:>8.4f} {r['idp']:>8.4f} "
            f"{r['idr']:>8.4f} {r['fp']:>8} {r['fn']:>8} {r['idsw']:>8} {r['frag']:>8} "
            f"{r['mt']:>8} {r['ml']:>8} {r['gt_total']:>8}"
        )
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(f"# {CSV_SCHEMA} eval\n")
            writer = csv.DictWriter(f, fieldnames=_EVAL_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    values = _load_values(args)
    nps = _int_list(args.np) if args.np else [values["sampler.n_p"]]
    nsss = _int_list(args.nss) if args.nss else [values["sampler.n_ss"]]
    nrps = _int_list(args.nrp) if args.nrp else [values["sampler.n_rp"]]
    bths = _float_list(args.bth) if args.bth else [values["sampler.b_th"]]

    scene = simulate(make_sim_config(values))
    rows = []
    for n_p in nps:
        for n_ss in nsss:
            for n_rp in nrps:
                for b_th in bths:
                    v = dict(values)
                    v["sampler.n_p"] = n_p
                    v["sampler.n_ss"] = n_ss
                    v["sampler.n_rp"] = n_rp
                    v["sampler.b_th"] = b_th
                    sched = make_schedule(v)
                    denoiser = OracleDenoiser(make_oracle_config(v), sched)
                    start = time.perf_counter()
                    result = track_sequence(
                        scene,
                        denoiser,
                        make_sampler_config(v),
                        make_assoc_config(v),
                        make_kalman_params(v),
                        image_w=v["sim.image_w"],
                        image_h=v["sim.image_h"],
                    )
                    wall = time.perf_counter() - start
                    m = clear_mot(scene, result)
                    rows.append(
                        {
                            "n_p": n_p,
                            "n_ss": n_ss,
                            "n_rp": n_rp,
                            "b_th": b_th,
                            "mota": m.mota,
                            "idf1": m.idf1,
                            "idsw": m.idsw,
                            "wall_time_s": round(wall, 4),
                        }
                    )
                    print(
                        f"n_p={n_p} n_ss={n_ss} n_rp={n_rp} b_th={b_th}: "
                        f"mota={m.mota:.4f} idf1={m.idf1:.4f} idsw={m.idsw} t={wall:.2f}s"
                    )
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(f"# {CSV_SCHEMA} sweep\n")
            writer = csv.DictWriter(
                f, fieldnames=["n_p", "n_ss", "n_rp", "b_th", "mota", "idf1", "idsw", "wall_time_s"]
            )
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


def cmd_loss_audit(args) -> int:
    values = _load_values(args)
    sched = make_schedule(values)
    scene = simulate(make_sim_config(values))
    frames = scene.frames
    k = frames[len(frames) // 2]
    k_prev = frames[frames.index(k) - 1]
    ctx = FrameContext(k_prev, k, values["sim.image_w"], values["sim.image_h"], scene)

    gt = [GTPair(i, pair) for i, pair in scene.visible_pairs(k_prev, k)]
    rng = np.random.default_rng(values["seed"])
    padded = pad_gt(gt, values["loss.n_train"], rng, ctx.image_w, ctx.image_h)
    eps = rng.standard_normal((len(padded), 8))
    denoiser = OracleDenoiser(make_oracle_config(values), sched)
    weights = make_loss_weights(values)

    rows = []
    for t_r in range(1, sched.T, args.tr_step):
        total, lo, hi = consistency_training_loss(ctx, padded, t_r, eps, denoiser, weights, sched)
        rows.append(
            {
                "t_r": t_r,
                "sigma": round(sigma_at(t_r, sched), 6),
                "cls_term": round(lo.cls_term + hi.cls_term, 6),
                "l1_term": round(lo.l1_term + hi.l1_term, 6),
                "giou3d_term": round(lo.giou3d_term + hi.giou3d_term, 6),
                "total": round(total, 6),
            }
        )
        print(f"t_r={t_r}: total={total:.4f}")
    with open(args.out, "w", newline="") as f:
        f.write(f"# {CSV_SCHEMA} loss_audit\n")
        writer = csv.DictWriter(
            f, fieldnames=["t_r", "sigma", "cls_term", "l1_term", "giou3d_term", "total"]
        )
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="pairtrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")

    p = sub.add_parser("simulate", help="generate a synthetic ground-truth file")
    common(p)
    p.add_argument("--out", required=True, help="ground-truth output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="run the tracker over ground-truth annotations")
    common(p)
    p.add_argument("--gt", required=True, help="ground-truth file or directory")
    p.add_argument("--out", required=True, help="result file or directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for directories")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score tracker output against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth file or directory")
    p.add_argument("--res", required=True, help="result file or directory")
    p.add_argument("--out", help="metrics CSV path")
    p.add_argument("--strict", action="store_true", help="independent per-frame matching")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid sweep over sampler parameters")
    common(p)
    p.add_argument("--np", help="comma list of proposal counts")
    p.add_argument("--nss", help="comma list of sampling step counts")
    p.add_argument("--nrp", help="comma list of prior repeat counts")
    p.add_argument("--bth", help="comma list of renewal thresholds")
    p.add_argument("--out", help="sweep CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("loss-audit", help="per-term training loss over a corruption sweep")
    common(p)
    p.add_argument("--out", required=True, help="loss CSV path")
    p.add_argument("--tr-step", type=int, default=1, help="stride over timesteps")
    p.set_defaults(func=cmd_loss_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MotParseError, DataError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
