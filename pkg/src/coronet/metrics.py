"""Confusion matrices and the metrics derived from them.

Rows are actual classes, columns predicted classes.  Per-class metrics are
one-vs-rest; aggregates are macro (unweighted) means across classes.  A
metric whose denominator is zero is reported as 0 and listed in ``flags``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, ParseError

METRICS = ("precision", "recall", "specificity", "f_measure")
CSV_CORNER = "actual\\predicted"


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        n = len(self.classes)
        if counts.shape != (n, n):
            raise InputError(f"confusion matrix must be {n}x{n}, got shape {counts.shape}")
        if counts.size and (counts < 0).any():
            raise InputError("confusion matrix entries must be non-negative")
        if len(set(self.classes)) != n:
            raise InputError("duplicate class names")
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self, c) -> int:
        return int(self.counts[self.index(c)].sum())

    def index(self, c) -> int:
        if isinstance(c, (int, np.integer)):
            return int(c)
        try:
            return self.classes.index(str(c))
        except ValueError:
            raise InputError(f"class {c!r} not in confusion matrix") from None

    def outcome(self, c) -> tuple[int, int, int, int]:
        """(TP, FP, FN, TN) for class ``c`` against the rest."""
        i = self.index(c)
        tp = int(self.counts[i, i])
        fp = int(self.counts[:, i].sum()) - tp
        fn = int(self.counts[i, :].sum()) - tp
        return tp, fp, fn, self.total - tp - fp - fn


def confusion_from_predictions(actual: Sequence, predicted: Sequence, classes) -> ConfusionMatrix:
    classes = tuple(str(c) for c in classes)
    if len(actual) != len(predicted):
        raise InputError(f"{len(actual)} actual labels vs {len(predicted)} predictions")
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        try:
            counts[index[str(a)], index[str(p)]] += 1
        except KeyError as exc:
            raise InputError(f"label {exc.args[0]!r} is not one of {classes}") from None
    return ConfusionMatrix(classes, counts)


def overall_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise InputError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    specificity: float
    f_measure: float
    flags: list[str] = field(default_factory=list)

    def as_dict(self):
        return {m: getattr(self, m) for m in METRICS}


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def class_metrics(cm: ConfusionMatrix, c) -> ClassMetrics:
    tp, fp, fn, tn = cm.outcome(c)
    flags: list[str] = []
    p = _ratio(tp, tp + fp, "precision", flags)
    r = _ratio(tp, tp + fn, "recall", flags)
    s = _ratio(tn, tn + fp, "specificity", flags)
    f = _ratio(2 * p * r, p + r, "f_measure", flags)
    return ClassMetrics(p, r, s, f, flags)


def macro_average(per_class: Sequence[ClassMetrics]) -> ClassMetrics:
    if not per_class:
        raise InputError("macro average of no classes")
    means = {m: float(np.mean([getattr(c, m) for c in per_class])) for m in METRICS}
    return ClassMetrics(**means)


def micro_precision(cm: ConfusionMatrix) -> float:
    tps = sum(cm.outcome(i)[0] for i in range(len(cm.classes)))
    fps = sum(cm.outcome(i)[1] for i in range(len(cm.classes)))
    return tps / (tps + fps)


@dataclass
class MetricsReport:
    classes: tuple[str, ...]
    per_class: dict[str, ClassMetrics]
    macro: ClassMetrics
    accuracy: float
    folds: list["MetricsReport"] = field(default_factory=list)
    outcomes: dict[str, tuple[int, int, int, int]] = field(default_factory=dict)

    @property
    def flags(self) -> list[str]:
        return [f"{c}:{m}" for c, cm in self.per_class.items() for m in cm.flags]

    def to_dict(self) -> dict:
        out = {
            "classes": list(self.classes),
            "per_class": {c: m.as_dict() for c, m in self.per_class.items()},
            "macro": self.macro.as_dict(),
            "accuracy": self.accuracy,
            "flags": self.flags,
        }
        if self.outcomes:
            out["counts"] = {c: dict(zip(("tp", "fp", "fn", "tn"), o))
                             for c, o in self.outcomes.items()}
        if self.folds:
            out["folds"] = [f.to_dict() for f in self.folds]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render(self) -> str:
        head = f"{'Class':<22}{'Precision':>10}{'Recall':>10}{'Specificity':>13}{'F-measure':>11}"
        lines = [head, "-" * len(head)]

        def row(name, m):
            return (f"{name:<22}{m.precision * 100:>10.1f}{m.recall * 100:>10.1f}"
                    f"{m.specificity * 100:>13.1f}{m.f_measure * 100:>11.1f}")

        if self.folds:
            for i, fold in enumerate(self.folds, start=1):
                lines.append(row(f"Fold {i}", fold.macro) + f"   acc {fold.accuracy * 100:.2f}")
        else:
            lines.extend(row(c, m) for c, m in self.per_class.items())
        lines.append(row("Average", self.macro))
        lines.append(f"Overall Accuracy: {self.accuracy * 100:.2f}%")
        if self.flags:
            lines.append("Zero denominators (reported as 0): " + ", ".join(self.flags))
        return "\n".join(lines)


def metrics_report(cm: ConfusionMatrix) -> MetricsReport:
    per_class = {c: class_metrics(cm, c) for c in cm.classes}
    return MetricsReport(cm.classes, per_class, macro_average(list(per_class.values())),
                         overall_accuracy(cm),
                         outcomes={c: cm.outcome(c) for c in cm.classes})


def fold_average(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean across folds of every per-class and aggregate metric."""
    if not reports:
        raise InputError("fold average of no folds")
    classes = reports[0].classes
    for r in reports[1:]:
        if r.classes != classes:
            raise InputError(f"fold class sets differ: {classes} vs {r.classes}")

    def mean(ms: Sequence[ClassMetrics]) -> ClassMetrics:
        return ClassMetrics(**{m: float(np.mean([getattr(x, m) for x in ms])) for m in METRICS})

    per_class = {c: mean([r.per_class[c] for r in reports]) for c in classes}
    return MetricsReport(classes, per_class, mean([r.macro for r in reports]),
                         float(np.mean([r.accuracy for r in reports])), list(reports))


# ---------------------------------------------------------------------------
# CSV


def render_cm_csv(cm: ConfusionMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([CSV_CORNER, *cm.classes])
    for name, row in zip(cm.classes, cm.counts):
        w.writerow([name, *(int(v) for v in row)])
    return buf.getvalue()


def parse_cm_text(text: str, source="<cm>") -> ConfusionMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{source}: empty confusion-matrix CSV")
    header = [c.strip() for c in rows[0]]
    classes = header[1:]
    n = len(classes)
    if n == 0:
        raise ParseError(f"{source}: header names no classes", 1)
    body = rows[1:]
    if len(body) != n:
        raise ParseError(f"{source}: {n} class columns but {len(body)} data rows (not square)")
    counts = np.zeros((n, n), dtype=np.int64)
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != n + 1:
            raise ParseError(f"{source}: row has {len(row) - 1} cells, expected {n} "
                             f"(not square)", line)
        if row[0].strip() != classes[i]:
            raise ParseError(f"{source}: row label {row[0].strip()!r} should be {classes[i]!r}",
                             line)
        for j, cell in enumerate(row[1:]):
            where = f"cell ({classes[i]}, {classes[j]}) at row {i + 1}, column {j + 1}"
            try:
                value = int(cell.strip())
            except ValueError:
                raise ParseError(f"{source}: {where} is not an integer: {cell!r}", line) from None
            if value < 0:
                raise ParseError(f"{source}: {where} is negative: {value}", line)
            counts[i, j] = value
    return ConfusionMatrix(tuple(classes), counts)


def parse_cm_csv(path) -> ConfusionMatrix:
    with open(path, newline="") as fh:
        return parse_cm_text(fh.read(), str(path))
