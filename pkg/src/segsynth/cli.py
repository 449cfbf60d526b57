"""Command-line surface: machine-readable JSON on stdout, logs on stderr.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from . import metrics as metrics_mod
from . import sample as sample_mod
from .errors import SegSynthError
from .pipeline import Pipeline, PipelineConfig
from .select import Decision


def _emit(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True))


def _load_config(path, **overrides) -> PipelineConfig:
    try:
        return PipelineConfig.from_json_file(path, **overrides)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}")
    except SegSynthError as exc:
        raise click.UsageError(str(exc))


def _load_vectors(path):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return np.asarray(json.loads(path.read_text()), dtype=np.float64)


@click.group()
@click.option("--verbose", is_flag=True, help="debug logging on stderr")
def cli(verbose):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


_config_option = click.option("--config", "config_path", required=True,
                              type=click.Path(exists=True, dir_okay=False))
_jobs_option = click.option("--jobs", type=int, default=None, help="worker pool size")
_backends_option = click.option("--backends", default=None, help='"mock" or a base URL')


def _run_stage(config_path, backends, jobs, max_stage):
    config = _load_config(config_path, backends=backends, jobs=jobs)
    pipeline = Pipeline(config)
    manifest = pipeline.run(max_stage=max_stage)
    records = ds.read_manifest(manifest)
    statuses: dict[str, int] = {}
    for record in records:
        statuses[record.status] = statuses.get(record.status, 0) + 1
    return {"manifest": str(manifest), "records": len(records), "statuses": statuses}


@cli.command("ingest")
@_config_option
def ingest_cmd(config_path):
    """Read the corpus and write an initial manifest."""
    config = _load_config(config_path)
    taxonomy = config.load_taxonomy()
    records = ds.ingest_voc(config.corpus_root, taxonomy, config.split)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ingested.jsonl"
    ds.write_manifest(records, path)
    _emit({"manifest": str(path), "records": len(records)})


@cli.command("caption")
@_config_option
@_backends_option
@_jobs_option
def caption_cmd(config_path, backends, jobs):
    """Run stage 1 (prompts + pseudo-masks) and report composed prompts."""
    summary = _run_stage(config_path, backends, jobs, max_stage=1)
    records = ds.read_manifest(summary["manifest"])
    summary["prompts"] = {r.record_id: r.composed_prompt for r in records}
    _emit(summary)


@cli.command("maskgen")
@_config_option
@_backends_option
@_jobs_option
def maskgen_cmd(config_path, backends, jobs):
    """Run stage 1 and report pseudo-mask artifacts."""
    summary = _run_stage(config_path, backends, jobs, max_stage=1)
    records = ds.read_manifest(summary["manifest"])
    summary["pseudo_masks"] = {r.record_id: r.pseudo_mask_path for r in records}
    _emit(summary)


@cli.command("generate")
@_config_option
@_backends_option
@_jobs_option
def generate_cmd(config_path, backends, jobs):
    """Run stages 1-2 (generation)."""
    _emit(_run_stage(config_path, backends, jobs, max_stage=2))


@cli.command("select")
@_config_option
@_backends_option
@_jobs_option
def select_cmd(config_path, backends, jobs):
    """Run stages 1-3 (through selection) and write the final manifest."""
    _emit(_run_stage(config_path, backends, jobs, max_stage=3))


@cli.command("run")
@_config_option
@_backends_option
@_jobs_option
def run_cmd(config_path, backends, jobs):
    """Full pipeline: prompts, masks, generation, selection."""
    _emit(_run_stage(config_path, backends, jobs, max_stage=3))


@cli.command("assemble")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--include", type=click.Choice(["kept_only", "all"]), default="kept_only")
@click.option("--taxonomy", default="voc")
def assemble_cmd(manifest, out_dir, include, taxonomy):
    """Assemble the final dataset directory from a manifest."""
    from .core import ClassTaxonomy, voc_taxonomy

    tax = voc_taxonomy() if taxonomy == "voc" else ClassTaxonomy.from_json_file(taxonomy)
    summary = ds.assemble_dataset(manifest, out_dir, tax, include=include)
    _emit({"out_dir": out_dir, **summary})


@cli.command("metrics")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--features-a", type=click.Path(exists=True, dir_okay=False),
              help="feature vectors of the real set (.json or .npy)")
@click.option("--features-b", type=click.Path(exists=True, dir_okay=False),
              help="feature vectors of the synthetic set")
@click.option("--probs", type=click.Path(exists=True, dir_okay=False),
              help="N x C class-probability matrix for Inception Score")
@click.option("--splits", type=int, default=1)
def metrics_cmd(manifest, features_a, features_b, probs, splits):
    """FID / IS / selection mIoU summary as JSON."""
    result = {}
    if features_a and features_b:
        stats_a = metrics_mod.feature_stats(_load_vectors(features_a))
        stats_b = metrics_mod.feature_stats(_load_vectors(features_b))
        result["fid"] = metrics_mod.fid(stats_a, stats_b)
    if probs:
        mean, std = metrics_mod.inception_score(_load_vectors(probs), splits=splits)
        result["inception_score"] = {"mean": mean, "std": std}
    if manifest:
        records = ds.read_manifest(manifest)
        mious = [
            v.selection.match_miou
            for r in records
            for v in r.variants
            if v.selection is not None and v.selection.match_miou is not None
        ]
        kept = sum(len(r.kept_variants()) for r in records)
        total = sum(len(r.variants) for r in records)
        result["selection"] = {
            "mean_match_miou": float(np.mean(mious)) if mious else None,
            "kept": kept,
            "variants": total,
        }
    if not result:
        raise click.UsageError("nothing to compute: pass --manifest, --features-a/b or --probs")
    _emit(result)


@cli.command("plan")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, required=True)
@click.option("--batch-size", type=int, default=4)
@click.option("--num-batches", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def plan_cmd(manifest, alpha, batch_size, num_batches, seed, out_path):
    """Emit a balanced real/synthetic batch plan as JSONL."""
    if not 0.0 <= alpha <= 1.0:
        raise click.UsageError(f"alpha {alpha} outside [0, 1]")
    records = ds.read_manifest(manifest)
    real_ids = [r.record_id for r in records if r.status != "quarantined"]
    synth_index = {
        r.record_id: [v.variant_index for v in r.kept_variants()] for r in records
    }
    plan = sample_mod.plan_batches(real_ids, synth_index, alpha, batch_size, num_batches, seed)
    plan.write_jsonl(out_path)
    _emit({
        "plan": out_path,
        "alpha": alpha,
        "slots": batch_size * num_batches,
        "synthetic_fraction": plan.synthetic_fraction(),
    })


@cli.command("folds")
@click.option("--classes", type=int, required=True, help="number of classes (ids 1..N)")
@click.option("--num-folds", type=int, default=4)
def folds_cmd(classes, num_folds):
    """Contiguous equal-size class folds for cross-validation."""
    split = sample_mod.split_folds(list(range(1, classes + 1)), num_folds)
    _emit({"num_folds": split.num_folds, "folds": [list(f) for f in split.folds]})


@cli.command("sweep")
@_config_option
@_backends_option
@_jobs_option
@click.option("--epsilons", default=None, help="comma-separated cosine thresholds")
@click.option("--taus", default=None, help="comma-separated match-mIoU thresholds")
def sweep_cmd(config_path, backends, jobs, epsilons, taus):
    """Run the pipeline over a threshold grid and tabulate kept counts."""
    if not epsilons and not taus:
        raise click.UsageError("pass --epsilons and/or --taus")
    grid = []
    for eps in (epsilons.split(",") if epsilons else [None]):
        for tau in (taus.split(",") if taus else [None]):
            grid.append((None if eps is None else float(eps),
                         None if tau is None else float(tau)))
    base = _load_config(config_path, backends=backends, jobs=jobs)
    rows = []
    for eps, tau in grid:
        from dataclasses import replace as dc_replace

        out_dir = Path(base.out_dir) / f"sweep_eps{eps if eps is not None else base.epsilon}" \
                                       f"_tau{tau if tau is not None else base.tau}"
        config = dc_replace(
            base,
            epsilon=base.epsilon if eps is None else eps,
            tau=base.tau if tau is None else tau,
            out_dir=str(out_dir),
        )
        manifest = Pipeline(config).run()
        records = ds.read_manifest(manifest)
        kept = sorted(
            f"{r.record_id}/{v.variant_index}" for r in records for v in r.kept_variants()
        )
        rows.append({"epsilon": config.epsilon, "tau": config.tau,
                     "kept": len(kept), "kept_ids": kept, "manifest": str(manifest)})
    _emit({"sweep": rows})


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 2
    except SegSynthError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
