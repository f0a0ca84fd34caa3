"""The evaluation toolkit on a simulated classifier: ranked labels, top-n
accuracy, a true-label-per-column confusion matrix, one-vs-rest AUC, and the
missed-crystal rate that motivates reviewing more than the top-1 label.

Run from the repository root:  python3 demos/05_evaluation.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from crystaltriage import (LABELS, PredictionRecord, load_predictions,
                           missed_crystal_rate, rank_labels, report,
                           topn_accuracy, write_predictions, write_report)

rng = np.random.default_rng(99)

# simulate a decent but imperfect classifier: the true class usually gets
# the top activation, with extra mass on a visually similar neighbor
# (micro crystals <-> phase separation, the classic hard pair)
CONFUSABLE = {6: 8, 8: 6}
predictions = []
for i in range(400):
    true = LABELS[int(rng.integers(10))]
    acts = rng.normal(0.0, 1.0, 10)
    acts[true.id] += 2.2
    acts[CONFUSABLE.get(true.id, true.id)] += 1.4
    predictions.append(PredictionRecord(f"sim-{i:03d}", true,
                                        tuple(float(a) for a in acts)))

sample = predictions[0]
print("one record, ranked labels:",
      [LABELS[c].name for c in rank_labels(sample.activations)[:3]], "...")

for n in (1, 2, 3):
    print(f"top-{n} accuracy: {topn_accuracy(predictions, n):.3f}")

rep = report(predictions)
print("\nper-class accuracy (diagonal over column sum):")
for label, ratio in zip(LABELS, rep.per_class_accuracy):
    print(f"  {label.name:<18} {ratio:.3f}")
print(f"class average: {rep.class_average_accuracy:.3f}")

percentages = rep.confusion.column_percentages()
print("\nconfusion columns for the confusable pair (percent of true class):")
for true_id in (6, 8):
    top_rows = np.argsort(-percentages[:, true_id])[:2]
    cells = ", ".join(f"{LABELS[r].name} {percentages[r, true_id]:.1f}%"
                      for r in top_rows)
    print(f"  true {LABELS[true_id].name:<18} -> {cells}")

print("\nmissed-crystal rate (crystal-bearing images with no crystal label "
      "in the top n):")
for n in (1, 2, 3):
    print(f"  n={n}: {missed_crystal_rate(predictions, n):.4f}")

workdir = Path(tempfile.mkdtemp(prefix="triage-demo-"))
write_predictions(predictions, workdir / "preds.ndjson")
assert len(load_predictions(workdir / "preds.ndjson")) == len(predictions)
write_report(rep, workdir / "report.json")
payload = json.loads((workdir / "report.json").read_text())
print(f"\nreport JSON keys: {sorted(payload)}")
print(f"written to {workdir}")
