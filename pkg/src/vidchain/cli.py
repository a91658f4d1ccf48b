"""Command-line surface: dataset generation, the two training phases, clip
and chained long-video generation, metric evaluation, a dataset algebra
checker, and the ablation sweep.

Conventions
-----------
* Every run is determined by (config, seed): same inputs produce the same
  output bytes.  Reports carry no timestamps and echo paths as given.
* Config resolution order: built-in defaults < checkpoint-stored config
  (where a checkpoint is loaded) < --config file < individual flags.
* The single honored environment variable is VIDCHAIN_OUT: when set,
  relative output paths are created under it.  Inputs are never remapped.
* Exit codes: 0 success; 2 usage or configuration error; 3 missing file;
  4 data/dimension error; 5 numeric failure.  Errors print exactly one line
  to stderr: ``error code=<kind> detail=<message>``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .autodiff import GradientError, NumericsError, Tensor
from .chain import chain_generate, chain_overlap_mismatch
from .config import ConfigError, RunConfig
from .container import (ContainerError, ContainerWriter, ManifestError,
                        load_checkpoint, load_dataset, read_container)
from .datasets import gen_drift_dataset, gen_shapes_dataset
from .metrics import (FeatureExtractor, fvd_ratio, inception_score,
                      segmentwise_scores, train_probe, write_metric_report)
from .model import ModelBundle
from .rng import RandomStream
from .training import build_pairs, train_loop, train_loop_recall
from .video import (decompose, reconstruct, reconstruct_from_reference,
                    segment_overlapping, stitch)

OUT_ENV = "VIDCHAIN_OUT"

ABLATE_CLIP_COUNTS = (3, 5, 7, 9, 11, 13, 15, 17)   # eight generated lengths
ABLATE_OVERLAPS = (0, 2, 4, 8)                      # training-pair overlaps


class _Parser(argparse.ArgumentParser):
    """argparse with the one-line error contract."""

    def error(self, message):
        print(f"error code=usage detail={message}", file=sys.stderr)
        raise SystemExit(2)


def _resolve_out(path: str) -> str:
    """Apply the output-directory override to relative output paths."""
    base = os.environ.get(OUT_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="JSON file of run-configuration fields")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool" or isinstance(f.default, bool):
            parser.add_argument(flag, dest=f.name, default=None,
                                action=argparse.BooleanOptionalAction,
                                help=f"override config field {f.name}")
        else:
            kind = float if f.type == "float" else (
                str if f.name in ("loss_variant", "gen_mode") else int)
            parser.add_argument(flag, dest=f.name, default=None, type=kind,
                                metavar="V",
                                help=f"override config field {f.name}")


def _effective_config(args, stored: dict | None = None) -> RunConfig:
    """defaults < checkpoint-stored < --config file < flags."""
    merged = dict(stored) if stored else {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise FileNotFoundError(f"config file {args.config} not found")
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.update(loaded)
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    return RunConfig.from_dict(merged)


def _require_file(path: str, kind: str) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(f"{kind} {path} not found")
    return path


def _load_videos(path: str):
    """A dataset directory (manifest) or a single container file -> list of
    (T, H, W, C) videos."""
    if os.path.isdir(path):
        videos, labels = load_dataset(os.path.join(path, "manifest.tsv"))
        return videos, labels
    _require_file(path, "container")
    arr = read_container(path).astype(np.float64)
    if arr.ndim == 4:
        return [arr], None
    if arr.ndim == 5:
        return list(arr), None
    raise ContainerError(f"expected a video or clip-batch container, "
                         f"got {arr.ndim} dims")


# -- commands -----------------------------------------------------------------------

def cmd_dataset_gen(args) -> int:
    out = _resolve_out(args.out)
    os.makedirs(out, exist_ok=True)
    maker = gen_shapes_dataset if args.kind == "shapes" else gen_drift_dataset
    maker(out, args.count, args.length, args.seed)
    print(f"dataset kind={args.kind} count={args.count} length={args.length} "
          f"seed={args.seed} out={args.out}")
    return 0


def _loss_report_rows(reports, keys):
    rows = []
    for step, report in enumerate(reports):
        for metric, (section, part) in keys.items():
            rows.append((metric, step, report[section][part]))
    return rows


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    videos, _ = _load_videos(_require_file(args.data, "dataset"))
    bundle = ModelBundle.init(cfg)
    reports = train_loop(bundle, videos)
    out = _resolve_out(args.out)
    bundle.save(out)
    if args.report:
        write_metric_report(_resolve_out(args.report), _loss_report_rows(
            reports, {"enc_mse": ("enc", "mse"), "d_image": ("d_image", "total"),
                      "d_video": ("d_video", "total"), "gen": ("gen", "total")}))
    last = reports[-1]
    print(f"trained steps={cfg.steps} enc_mse={last['enc']['mse']:.6f} "
          f"d_image={last['d_image']['total']:.6f} out={args.out}")
    return 0


def cmd_train_recall(args) -> int:
    stored = None
    if args.init:
        stored, _ = load_checkpoint(_require_file(args.init, "checkpoint"))
    cfg = _effective_config(args, stored)
    videos, _ = _load_videos(_require_file(args.data, "dataset"))
    bundle = (ModelBundle.load(args.init, cfg) if args.init
              else ModelBundle.init(cfg))
    pairs, skipped = build_pairs(videos, cfg)
    reports = train_loop_recall(bundle, pairs)
    out = _resolve_out(args.out)
    bundle.save(out)
    if args.report:
        write_metric_report(_resolve_out(args.report), _loss_report_rows(
            reports, {"rencg": ("rencg", "total"),
                      "rencg_mse": ("rencg", "mse"),
                      "d_video": ("d_video", "total")}))
    last = reports[-1]
    print(f"trained-recall steps={cfg.steps} pairs={len(pairs)} "
          f"skipped={len(skipped)} rencg={last['rencg']['total']:.6f} "
          f"out={args.out}")
    return 0


def cmd_generate(args) -> int:
    stored, _ = load_checkpoint(_require_file(args.ckpt, "checkpoint"))
    cfg = _effective_config(args, stored)
    bundle = ModelBundle.load(args.ckpt, cfg)
    stream = RandomStream.from_seed(cfg.seed, "generate")
    z_x = stream.split("prior_x").normal((args.count, cfg.z_content))
    z_v = stream.split("prior_v").normal((args.count, cfg.z_motion))
    clips = bundle.generate(Tensor(z_x), Tensor(z_v))[2].data
    clips = clips.reshape((args.count, cfg.t_c) + cfg.frame_shape)
    out = _resolve_out(args.out)
    writer = ContainerWriter(out, (cfg.t_c,) + cfg.frame_shape)
    writer.append(clips.astype(np.float32))
    writer.close()
    print(f"generated clips={args.count} t_c={cfg.t_c} out={args.out}")
    return 0


def cmd_generate_long(args) -> int:
    stored, _ = load_checkpoint(_require_file(args.ckpt, "checkpoint"))
    cfg = _effective_config(args, stored)
    bundle = ModelBundle.load(args.ckpt, cfg)
    out = _resolve_out(args.out)
    writer = ContainerWriter(out, cfg.frame_shape)
    result = chain_generate(
        bundle, args.clips, mode=cfg.gen_mode, r=args.stride,
        sink=lambda block: writer.append(block.astype(np.float32)))
    writer.close()
    if args.report:
        rows = [("seam_mismatch", j, m) for j, m in enumerate(result.mismatches)]
        rows += [("mean_mismatch", "-", result.mean_mismatch),
                 ("frames", "-", float(result.frames_emitted)),
                 ("peak_frames", "-", float(result.peak_frames))]
        write_metric_report(_resolve_out(args.report), rows)
    print(f"generated-long clips={args.clips} frames={result.frames_emitted} "
          f"stride={result.stride} mode={cfg.gen_mode} "
          f"peak_frames={result.peak_frames} "
          f"mean_mismatch={result.mean_mismatch:.6f} out={args.out}")
    return 0


def cmd_eval(args) -> int:
    generated, _ = _load_videos(_require_file(args.data, "generated set"))
    reference, labels = _load_videos(_require_file(args.reference, "reference set"))
    frame_dim = int(np.prod(np.asarray(reference[0]).shape[1:]))
    extractor = FeatureExtractor(args.seg_len, frame_dim, seed=args.seed)
    scores = segmentwise_scores(generated, reference, extractor,
                                seg_len=args.seg_len)
    rows = [("fid_segment", j, s) for j, s in enumerate(scores.scores)]
    rows.append(("fid_average", "-", scores.average))
    rows.append(("fvd_16f", "-", scores.scores[0]))
    rows.append(("fvd_long", "-", scores.average))
    if scores.average > 0:
        rows.append(("fvd_ratio", "-",
                     fvd_ratio(scores.scores[0], scores.average)))
    if args.probe:
        if labels is None:
            raise ConfigError("--probe needs a labeled reference dataset")
        labels = np.asarray(labels)
        keep = labels >= 0
        if len(np.unique(labels[keep])) < 2:
            raise ConfigError("--probe needs at least 2 reference classes")
        ref_clips = np.stack([np.asarray(v)[:args.seg_len]
                              for k, v in zip(keep, reference) if k])
        probe = train_probe(extractor.features(ref_clips), labels[keep],
                            RandomStream.from_seed(args.seed, "eval-probe"))
        segments = [np.asarray(v)[j * args.seg_len:(j + 1) * args.seg_len]
                    for v in generated
                    for j in range(len(v) // args.seg_len)]
        probs = probe.predict_proba(extractor.features(np.stack(segments)))
        value, inter, intra = inception_score(probs)
        rows += [("is", "-", value), ("inter_entropy", "-", inter),
                 ("intra_entropy", "-", intra)]
    write_metric_report(_resolve_out(args.report), rows)
    for j, s in enumerate(scores.scores):
        print(f"segment {j} score {s!r}")
    print(f"evaluated segments={len(scores.scores)} "
          f"average={scores.average!r} excluded={len(scores.excluded)} "
          f"report={args.report}")
    return 0


def cmd_roundtrip_check(args) -> int:
    videos, _ = _load_videos(_require_file(args.data, "dataset"))
    videos = videos[:args.limit]
    t_c = args.t_c
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    ok_round = ok_ref = ok_stitch = True
    for video in videos:
        video = np.asarray(video)
        if len(video) < t_c:
            raise ConfigError(f"videos of {len(video)} frames are shorter "
                              f"than t_c={t_c}")
        clip = video[:t_c]
        content, motion = decompose(clip)
        ok_round &= bool(np.array_equal(reconstruct(content, motion), clip))
        for r in range(1, t_c + 1):
            rebuilt = reconstruct_from_reference(clip[r - 1], r, motion)
            ok_ref &= bool(np.array_equal(rebuilt, clip))
        r = max(1, t_c // 2)
        if len(video) >= t_c + r:
            clips = segment_overlapping(video, t_c, r)
            long = stitch(clips, r)
            ok_stitch &= bool(
                np.array_equal(long.frames, video[:len(long.frames)]))
    check("decompose-reconstruct-roundtrip", ok_round)
    check("reference-frame-reconstruction", ok_ref)
    check("segment-stitch-identity", ok_stitch)
    print(f"checked videos={len(videos)} t_c={t_c}")
    if failures:
        raise NumericsError(f"invariants failed: {', '.join(failures)}")
    return 0


def _mismatch_curve(bundle: ModelBundle, clip_counts, r: int) -> list[float]:
    return [chain_overlap_mismatch(bundle, n, mode="mean", r=r)
            for n in clip_counts]


def cmd_ablate(args) -> int:
    cfg = _effective_config(args)
    videos, _ = _load_videos(_require_file(args.data, "dataset"))
    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)

    if args.init:
        stored, _ = load_checkpoint(_require_file(args.init, "checkpoint"))
        base_cfg = _effective_config(args, stored)
        base = ModelBundle.load(args.init, base_cfg)
    else:
        base = ModelBundle.init(cfg)
        train_loop(base, videos)
    base_state = base.state_arrays()

    def recall_variant(**flags) -> ModelBundle:
        vcfg = cfg.replace(**flags)
        bundle = ModelBundle.init(vcfg)
        bundle.load_state_arrays(base_state)
        pairs, _ = build_pairs(videos, vcfg)
        train_loop_recall(bundle, pairs)
        return bundle

    variants = {
        "ovi": recall_variant(ovi=True, mgv=False),
        "mgv": recall_variant(ovi=False, mgv=True),
        "recall": recall_variant(ovi=True, mgv=True),
    }
    # all variants are measured at the same generation stride so the sweep
    # varies only the training-pair overlap
    curves = {name: _mismatch_curve(b, ABLATE_CLIP_COUNTS, cfg.r)
              for name, b in variants.items()}
    lengths = [(n - 1) * cfg.r + cfg.t_c for n in ABLATE_CLIP_COUNTS]
    t11 = ["# length\tovi\tmgv\trecall"]
    for i, length in enumerate(lengths):
        t11.append(f"{length}\t{curves['ovi'][i]!r}\t{curves['mgv'][i]!r}"
                   f"\t{curves['recall'][i]!r}")
    t11_path = os.path.join(out_dir, "table11.tsv")
    with open(t11_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(t11) + "\n")

    # overlap sweep: training-pair overlap o -> pair stride t_c - o;
    # the o=0 and o=t_c//2 rows reuse the mgv/recall variants above
    overlap_rows = ["# overlap\tstride\tmismatch"]
    probe_n = 8
    for overlap in ABLATE_OVERLAPS:
        stride = cfg.t_c - overlap
        if not 1 <= stride <= cfg.t_c:
            continue        # overlap too large for this clip length
        if overlap == 0:
            bundle = variants["mgv"]
        elif stride == cfg.r:
            bundle = variants["recall"]
        else:
            bundle = recall_variant(ovi=True, mgv=True, r=stride)
        value = chain_overlap_mismatch(bundle, probe_n, mode="mean", r=cfg.r)
        overlap_rows.append(f"{overlap}\t{stride}\t{value!r}")
    t10_path = os.path.join(out_dir, "table10.tsv")
    with open(t10_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(overlap_rows) + "\n")

    wins = sum(r < o for r, o in zip(curves["recall"], curves["ovi"]))
    print(f"ablation lengths={len(lengths)} recall_beats_ovi={wins}/"
          f"{len(lengths)} out={args.out}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="vidchain",
                     description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("dataset-gen", help="write a synthetic video dataset")
    p.add_argument("--kind", choices=("shapes", "drift"), default="shapes")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--count", type=int, default=400)
    p.add_argument("--length", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_dataset_gen)

    p = sub.add_parser("train", help="train the clip model on a dataset")
    p.add_argument("--data", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="CKPT")
    p.add_argument("--report", metavar="FILE",
                   help="write per-step losses as a metric report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-recall",
                       help="train the recall phase on overlapping pairs")
    p.add_argument("--data", required=True, metavar="DIR")
    p.add_argument("--init", metavar="CKPT",
                   help="checkpoint to start from (fresh model otherwise)")
    p.add_argument("--out", required=True, metavar="CKPT")
    p.add_argument("--report", metavar="FILE")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_recall)

    p = sub.add_parser("generate", help="sample short clips from the prior")
    p.add_argument("--ckpt", required=True, metavar="CKPT")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--count", type=int, default=8)
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("generate-long",
                       help="chain clips into one long video")
    p.add_argument("--ckpt", required=True, metavar="CKPT")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--clips", type=int, required=True, metavar="N")
    p.add_argument("--stride", type=int, default=None,
                   help="generation stride (default: the config stride)")
    p.add_argument("--report", metavar="FILE")
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate_long)

    p = sub.add_parser("eval", help="segment-wise scores of generated videos")
    p.add_argument("--data", required=True, metavar="PATH",
                   help="generated container file or dataset directory")
    p.add_argument("--reference", required=True, metavar="PATH")
    p.add_argument("--report", required=True, metavar="FILE")
    p.add_argument("--seg-len", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probe", action="store_true",
                   help="also train a probe and report the diversity score")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("roundtrip-check",
                       help="run the frame-algebra invariants on a dataset")
    p.add_argument("--data", required=True, metavar="DIR")
    p.add_argument("--t-c", dest="t_c", type=int, default=16)
    p.add_argument("--limit", type=int, default=20,
                   help="check at most this many videos")
    p.set_defaults(func=cmd_roundtrip_check)

    p = sub.add_parser("ablate",
                       help="overlap/merged-loss ablation sweep")
    p.add_argument("--data", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--init", metavar="CKPT",
                   help="pretrained clip-model checkpoint to start from")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def _fail(kind: str, code: int, exc: BaseException) -> int:
    detail = " ".join(str(exc).split())
    print(f"error code={kind} detail={detail}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # argparse usage error or --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", 2, exc)
    except FileNotFoundError as exc:
        return _fail("missing-file", 3, exc)
    except (ContainerError, ManifestError) as exc:
        return _fail("data-format", 4, exc)
    except (NumericsError, GradientError, np.linalg.LinAlgError) as exc:
        return _fail("numeric", 5, exc)
    except ValueError as exc:
        return _fail("dimension", 4, exc)


if __name__ == "__main__":
    sys.exit(main())
