"""Command-line entry points for the corpus, training, and service tools."""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import metrics, synth, trainer, zoo
from .augment import augment_dataset, balance_plan
from .config import load_flat_config
from .corpus import (ManifestError, class_histogram, load_manifest,
                     save_manifest, stratified_split)
from .service import ServiceConfig, ServiceError
from .trainer import TrainConfig, TrainingError


def friendly_errors(fn):
    """Turn domain errors into exit-code-1 messages instead of tracebacks."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ManifestError, TrainingError, metrics.MetricsError,
                ServiceError, zoo.ZooError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


@click.group()
def main():
    """Crystallization-trial image triage tools."""


@main.group()
def corpus():
    """Manifest management."""


@corpus.command("split")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ratios", default="0.80,0.05,0.15", show_default=True,
              help="train,validation,test fractions; must sum to 1")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@friendly_errors
def corpus_split(manifest_path, ratios, seed, out_path):
    """Assign unsplit records to train/validation/test, stratified by class."""
    fractions = tuple(float(r) for r in ratios.split(","))
    split = stratified_split(load_manifest(manifest_path), fractions, seed)
    save_manifest(split, out_path)
    counts = {name: sum(r.split == name for r in split.records)
              for name in ("train", "validation", "test")}
    click.echo(f"wrote {out_path}: " +
               ", ".join(f"{v} {k}" for k, v in counts.items()))


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--out-manifest", required=True, type=click.Path(dir_okay=False))
@friendly_errors
def augment(manifest_path, seed, out_dir, out_manifest):
    """Balance the corpus by augmenting under-represented classes."""
    manifest = load_manifest(manifest_path)
    histogram = class_histogram(manifest)
    # absent classes cannot be balanced; plan over the ones that exist
    plan = balance_plan({c: int(n) for c, n in enumerate(histogram) if n})
    produced = augment_dataset(manifest, plan, seed, out_dir)
    save_manifest(produced, out_manifest)
    click.echo(f"wrote {len(produced)} replicas to {out_dir} "
               f"(target {plan.target_count} per class)")


@main.command("synth")
@click.option("--counts", required=True,
              help="per-class image counts, e.g. clear=100,bad_drop=50")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--size", default="1280x960", show_default=True,
              help="rendered image size as WxH")
@friendly_errors
def synth_cmd(counts, seed, out_dir, size):
    """Render a labeled synthetic corpus of crystallization-drop images."""
    width, _, height = size.partition("x")
    spec = synth.SynthSpec(counts=synth.parse_counts(counts),
                           width=int(width), height=int(height), seed=seed)
    manifest = synth.generate(spec, out_dir)
    save_manifest(manifest, Path(out_dir) / "manifest.ndjson")
    click.echo(f"wrote {len(manifest)} images to {out_dir}")


@main.command()
@click.option("--arch", required=True, type=click.Choice(zoo.ARCHITECTURES))
@click.option("--train-manifest", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--val-manifest", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True,
                                                         dir_okay=False))
@click.option("--out-checkpoint", required=True,
              type=click.Path(dir_okay=False))
@click.option("--history", "history_path", type=click.Path(dir_okay=False))
@friendly_errors
def train(arch, train_manifest, val_manifest, config_path, out_checkpoint,
          history_path):
    """Train an architecture and save its best-validation checkpoint."""
    mapping = load_flat_config(config_path) if config_path else \
        load_flat_config(None)
    config = TrainConfig.from_mapping(mapping)
    model = zoo.build(zoo.ModelSpec(architecture=arch, init_seed=config.seed))

    def progress(stats):
        click.echo(f"epoch {stats.epoch:3d}  lr {stats.lr:.5f}  "
                   f"loss {stats.train_loss:.4f}  "
                   f"val {stats.val_accuracy:.4f}")

    result = trainer.train(model, load_manifest(train_manifest),
                           load_manifest(val_manifest), config,
                           progress=progress)
    zoo.save_checkpoint(model, out_checkpoint, extra={
        "best_epoch": result.best.epoch,
        "validation_accuracy": result.best.validation_accuracy,
    })
    if history_path:
        trainer.write_history(result.history, history_path)
    click.echo(f"best epoch {result.best.epoch} "
               f"(val {result.best.validation_accuracy:.4f}) "
               f"-> {out_checkpoint}")


@main.command()
@click.option("--predictions", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-report", required=True, type=click.Path(dir_okay=False))
@friendly_errors
def evaluate(predictions, out_report):
    """Compute accuracy, confusion, AUC, and missed-crystal metrics."""
    rep = metrics.report(metrics.load_predictions(predictions))
    metrics.write_report(rep, out_report)
    top = rep.top_n_accuracy
    click.echo(f"top-1 {top[1]:.4f}  top-2 {top[2]:.4f}  top-3 {top[3]:.4f} "
               f"-> {out_report}")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@friendly_errors
def serve(config_path):
    """Run the review service over HTTP."""
    from .webapp import serve as run_server

    config = ServiceConfig.from_mapping(load_flat_config(config_path))
    click.echo(f"listening on {config.listen_address}")
    run_server(config)


if __name__ == "__main__":
    main()
