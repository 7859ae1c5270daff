"""Command-line interface for the preprocessing, training, evaluation, and
labeling pipeline. Exit codes: 0 success, 2 validation error, 3 numeric failure."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .btl import fit_all_traits, parse_comparisons, score_table
from .core import EvaluationReport, parse_manifest
from .errors import NumericError, ValidationError
from .fusion import FusedCheckpoint
from .pipeline import (
    TrainConfig,
    build_feature_cache,
    emit_comparison_table,
    evaluate,
    fused_predictor,
    generate_synthetic_dataset,
    get_feature_cache,
    subnet_predictor,
    train_stage1,
    train_stage2,
)
from .subnets import MODALITIES, SubnetCheckpoint

_CLI_MODALITY = {"ambient": "ambient", "facial": "facial", "audio": "audio", "transcript": "transcription"}


def _load_manifest(path: str):
    return parse_manifest(Path(path).read_text())


def _load_config(path: str | None, **overrides) -> TrainConfig:
    base = json.loads(Path(path).read_text()) if path else {}
    base.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(base)


def cmd_preprocess(args) -> int:
    manifest = _load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    build_feature_cache(manifest, base_dir, cache_dir=args.out)
    print(f"cached features for {len(manifest.records)} records under {args.out}")
    return 0


def cmd_train_stage1(args) -> int:
    modality = _CLI_MODALITY[args.modality]
    config = _load_config(args.config, stage=1, modality=modality, seed=args.seed,
                          max_steps=args.max_steps)
    manifest = _load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    cache = get_feature_cache(manifest, base_dir, args.cache)
    _, ckpt, history = train_stage1(manifest, cache, config)
    ckpt.save(args.out)
    final_train = ckpt.meta.get("final_train_accuracy")
    final_val = ckpt.meta.get("final_val_accuracy")
    print(f"trained {modality} subnetwork: steps={ckpt.meta['steps']} "
          f"lr={ckpt.meta['learning_rate']} train_acc={final_train} val_acc={final_val}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_train_stage2(args) -> int:
    paths = args.ckpts.split(",")
    if len(paths) != 4:
        raise ValidationError("--ckpts needs four comma-separated paths: ambient,facial,audio,transcript")
    ckpts = {m: SubnetCheckpoint.load(p) for m, p in zip(MODALITIES, paths)}
    config = _load_config(args.config, stage=2, seed=args.seed, max_steps=args.max_steps)
    manifest = _load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    cache = get_feature_cache(manifest, base_dir, args.cache)
    _, ckpt, history = train_stage2(ckpts, manifest, cache, config)
    ckpt.save(args.out)
    print(f"trained fused model: steps={ckpt.meta['steps']} "
          f"train_acc={ckpt.meta.get('final_train_accuracy')} val_acc={ckpt.meta.get('final_val_accuracy')}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    manifest = _load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    cache = get_feature_cache(manifest, base_dir, args.cache)
    config = _load_config(args.config) if args.config else TrainConfig(stage=1, modality="ambient")
    try:
        sub_ckpt = SubnetCheckpoint.load(args.ckpt)
        predictor = subnet_predictor(sub_ckpt.build(), cache, config)
    except ValidationError:
        fused_ckpt = FusedCheckpoint.load(args.ckpt)
        predictor = fused_predictor(fused_ckpt.build(), cache, config)
    report = evaluate(predictor, manifest, args.split)
    print(json.dumps(report.to_dict(), indent=2))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_compare(args) -> int:
    report = None
    if args.report:
        report = EvaluationReport.from_dict(json.loads(Path(args.report).read_text()))
    print(emit_comparison_table(report))
    return 0


def cmd_synth_data(args) -> int:
    manifest = generate_synthetic_dataset(args.n, args.seed, args.out)
    print(f"generated {len(manifest.records)} synthetic videos under {args.out} "
          f"(splits {manifest.split_counts()})")
    return 0


def cmd_btl_label(args) -> int:
    comparisons = parse_comparisons(Path(args.comparisons).read_text())
    fits = fit_all_traits(comparisons)
    Path(args.out).write_text(json.dumps(score_table(fits), indent=2, sort_keys=True))
    for trait, fit in fits.items():
        print(f"{trait}: {len(fit.strengths)} items, converged={fit.converged} "
              f"after {fit.iterations} iterations")
    print(f"score table written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traitnet",
                                     description="Multimodal apparent-personality pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="cache per-video modality tensors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-stage1", help="train one modality subnetwork")
    p.add_argument("--modality", required=True, choices=sorted(_CLI_MODALITY))
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--cache")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_stage1)

    p = sub.add_parser("train-stage2", help="assemble and fine-tune the fused model")
    p.add_argument("--ckpts", required=True,
                   help="ambient,facial,audio,transcript checkpoint paths")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--cache")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_stage2)

    p = sub.add_parser("evaluate", help="score a checkpoint on a labeled split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True, choices=("train", "validation", "test"))
    p.add_argument("--cache")
    p.add_argument("--config")
    p.add_argument("--report", help="write the evaluation report JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="print a run beside published reference scores")
    p.add_argument("--report")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth-data", help="generate a synthetic desk-scale dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("btl-label", help="fit BTL scores from pairwise comparisons")
    p.add_argument("--comparisons", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_btl_label)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
