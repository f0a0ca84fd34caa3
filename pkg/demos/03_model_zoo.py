"""The architecture zoo: build each network, compare sizes, and round-trip
weights through the checkpoint container.

Run from the repository root:  python3 demos/03_model_zoo.py
"""

import tempfile
from pathlib import Path

import numpy as np

from crystaltriage import (ARCHITECTURES, ModelSpec, build, checkpoint_digest,
                           load_checkpoint, predict_probabilities,
                           save_checkpoint)
from crystaltriage.zoo import census, param_count, weighted_layer_count

batch = np.random.default_rng(0).random((2, 128, 128))

print(f"{'architecture':<14} {'params':>12} {'weighted':>9}  census")
for arch in ARCHITECTURES:
    model = build(ModelSpec(architecture=arch, init_seed=1))
    out = model.forward(batch)
    assert out.shape == (2, 10) and np.isfinite(out).all()
    print(f"{arch:<14} {param_count(model):>12,} "
          f"{weighted_layer_count(model):>9}  {census(model)}")

lean = build(ModelSpec(architecture="lcn", init_seed=1))
base = build(ModelSpec(architecture="crystalnet", init_seed=1))
print(f"\nlcn / crystalnet parameter ratio: "
      f"{param_count(lean) / param_count(base):.3f} (under 0.6)")

probs = predict_probabilities(lean, batch)
assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
print(f"softmax rows sum to 1 (max dev {abs(probs.sum(axis=1) - 1).max():.1e})")

# checkpoints hold a JSON header (spec + extras) plus raw float32 arrays;
# identical weights produce an identical file, hence a stable digest
workdir = Path(tempfile.mkdtemp(prefix="triage-demo-"))
path = workdir / "lean.ckpt"
save_checkpoint(lean, path, extra={"note": "demo weights"})
clone, extra = load_checkpoint(path)
assert extra["note"] == "demo weights"
assert clone.spec.architecture == "lcn"
before = lean.forward(batch)
after = clone.forward(batch)
assert np.array_equal(before, after)

again = workdir / "again.ckpt"
save_checkpoint(clone, again)
save_checkpoint(lean, workdir / "orig.ckpt")
assert checkpoint_digest(again) == checkpoint_digest(workdir / "orig.ckpt")
print(f"checkpoint round-trip exact; digest {checkpoint_digest(again)[:16]}...")
