"""A miniature end-to-end training run: balanced tiles in, best-validation
checkpoint out, with the full learning-rate schedule and history CSV.

Run from the repository root:  python3 demos/04_training.py
"""

import tempfile
from pathlib import Path

from crystaltriage import (ModelSpec, SynthSpec, TrainConfig, augment_dataset,
                           balance_plan, build, class_histogram, generate,
                           lr_at, make_manifest, save_checkpoint,
                           stratified_split, train)
from crystaltriage.trainer import write_history

workdir = Path(tempfile.mkdtemp(prefix="triage-demo-"))

corpus = generate(SynthSpec(counts={c: 10 for c in range(10)},
                            width=960, height=960, seed=19),
                  workdir / "plates")
split = stratified_split(corpus, (0.80, 0.05, 0.15), seed=2)
parts = {name: make_manifest([r for r in split.records if r.split == name])
         for name in ("train", "validation")}

plan = balance_plan({c: int(n) for c, n in
                     enumerate(class_histogram(parts["train"])) if n})
tiles = augment_dataset(parts["train"], plan, seed=4, out_dir=workdir / "tiles")
val_tiles = augment_dataset(parts["validation"],
                            balance_plan({c: 1 for c in range(10)}),
                            seed=5, out_dir=workdir / "val")
print(f"{len(tiles.records)} training tiles, {len(val_tiles.records)} validation")

config = TrainConfig(batch_size=16, epochs=6, lr0=0.01, momentum=0.9,
                     decay_period=4, seed=0)
print("schedule:", [lr_at(e, config) for e in range(config.epochs)])

model = build(ModelSpec(architecture="lcn", init_seed=0))
result = train(model, tiles, val_tiles, config,
               progress=lambda s: print(
                   f"  epoch {s.epoch}  lr {s.lr:<7} loss {s.train_loss:.3f}  "
                   f"val {s.val_accuracy:.2f}"))

best = result.best
print(f"\nbest epoch {best.epoch}: validation accuracy "
      f"{best.validation_accuracy:.2f} (weights restored into the model)")
assert best.validation_accuracy == max(s.val_accuracy for s in result.history)

write_history(result.history, workdir / "history.csv")
save_checkpoint(model, workdir / "best.ckpt",
                extra={"best_epoch": best.epoch,
                       "validation_accuracy": best.validation_accuracy})
print(f"history  -> {workdir / 'history.csv'}")
print(f"weights  -> {workdir / 'best.ckpt'}")
