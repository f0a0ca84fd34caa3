"""The human-review loop: ingest trial images against a checkpoint, walk the
crystal-first queue, record annotations durably, and read live metrics that
treat reviewer decisions as ground truth.

The same state is servable over HTTP with `crystal serve --config <yaml>`;
this demo drives the service layer directly.

Run from the repository root:  python3 demos/06_review_service.py
"""

import tempfile
from pathlib import Path

from crystaltriage import (LABELS, ModelSpec, SynthSpec, TriageService, build,
                           checkpoint_digest, generate, label_by_name,
                           save_checkpoint)

workdir = Path(tempfile.mkdtemp(prefix="triage-demo-"))

model = build(ModelSpec(architecture="lcn", init_seed=8))
ckpt = workdir / "model.ckpt"
save_checkpoint(model, ckpt)

plates = generate(SynthSpec(counts={c: 1 for c in range(10)},
                            width=960, height=960, seed=77),
                  workdir / "plates")

service = TriageService(workdir / "triage", model, checkpoint_digest(ckpt))
items = service.ingest(r.source_path for r in plates.records)
print(f"ingested {len(items)} items into {workdir / 'triage'}")

# re-ingesting the same pixels is a no-op: identity is the pixel digest
# plus the checkpoint digest, so restarts and retries cannot duplicate work
again = service.ingest(r.source_path for r in plates.records)
assert [i.record_id for i in again] == [i.record_id for i in items]
print("second ingest returned the same items (idempotent)")

page, total = service.queue(strategy="top2", status="pending", offset=0, limit=5)
print(f"\nreview queue (top2, {total} pending), strongest crystal evidence first:")
for item in page:
    flag = "CRYSTAL?" if item.crystal_flag_topn[2] else "        "
    print(f"  {item.record_id}  {flag}  max crystal activation "
          f"{item.max_crystal_activation:+.3f}")

first, second = page[0], page[1]
service.annotate(first.record_id, "confirm_crystal", "demo-reviewer",
                 idempotency_key="demo-1")
duplicate = service.annotate(first.record_id, "confirm_crystal", "demo-reviewer",
                             idempotency_key="demo-1")
assert duplicate.record_id == first.record_id
assert service.event_count == 1, "double-submit collapsed into one event"
service.annotate(second.record_id, "relabel", "demo-reviewer",
                 label=label_by_name("clear"), idempotency_key="demo-2")
print(f"\nannotated {first.record_id} (confirmed crystal, duplicate submit "
      f"ignored) and {second.record_id} (relabeled clear)")

report = service.metrics_report()
defined = {label.name: ratio for label, ratio in
           zip(LABELS, report.per_class_accuracy) if ratio is not None}
print(f"live report over {service.event_count} annotations: "
      f"top-1 {report.top_n_accuracy[1]:.2f}, defined classes {defined}")

# the log is the source of truth: a fresh service over the same directory
# replays items and events into identical state
reborn = TriageService(workdir / "triage", model, checkpoint_digest(ckpt))
assert reborn.get(first.record_id).status == "confirmed_crystal"
assert reborn.get(second.record_id).human_label.name == "clear"
assert reborn.event_count == 2
print("restart replayed the log into identical state")

manifest = reborn.export_manifest()
print(f"export for retraining: {len(manifest.records)} reviewed records, "
      f"labels {[r.label.name for r in manifest.records]}")
