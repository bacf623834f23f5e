"""Closed-set condition identification: banks of per-condition models,
maximum-likelihood identification, and confusion-matrix evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig, frames_of
from .errors import DataError, NumericError
from .hmm1 import Hmm1Model, baum_welch1, forward1, viterbi1
from .hmm2 import Hmm2Model, baum_welch2, forward2, viterbi2
from .init import init_hmm1, init_hmm2


def round_half_away(x: float, decimals: int = 1) -> float:
    """Round with ties going away from zero (table-rendering convention)."""
    scale = 10 ** decimals
    return math.copysign(math.floor(abs(x) * scale + 0.5) / scale, x)


@dataclass
class ConditionBank:
    labels: list[str]
    models: dict[str, Hmm1Model | Hmm2Model]
    scope: dict = field(default_factory=dict)  # e.g. speaker / sentence ids

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels) or not self.labels:
            raise DataError("bank labels must be nonempty and unique")
        if set(self.models) != set(self.labels):
            raise DataError("bank labels and models must correspond")
        orders = {isinstance(m, Hmm2Model) for m in self.models.values()}
        shapes = {(m.n_states, m.n_components, m.dim) for m in self.models.values()}
        if len(orders) != 1 or len(shapes) != 1:
            raise DataError("bank models must share order, N, M and D")

    @property
    def order(self) -> int:
        return 2 if isinstance(self.models[self.labels[0]], Hmm2Model) else 1

    @property
    def dim(self) -> int:
        return self.models[self.labels[0]].dim


@dataclass
class IdentificationResult:
    label: str
    scores: dict[str, float]


def train_bank(training_sets: dict[str, list], order: int, n_states: int,
               n_comp: int, topology: str = "left-right",
               cfg: TrainConfig | None = None, scope: dict | None = None
               ) -> tuple[ConditionBank, dict[str, list[float]]]:
    """One model per condition label; returns the bank and per-label EM traces."""
    cfg = cfg or TrainConfig()
    if not training_sets:
        raise DataError("no condition labels to train")
    dims = set()
    for label, seqs in training_sets.items():
        if not seqs:
            raise DataError(f"condition {label!r} has no training sequences")
        dims.update(frames_of(s).shape[1] for s in seqs)
    if len(dims) != 1:
        raise DataError("training sequences have heterogeneous dimensions")
    models: dict[str, Hmm1Model | Hmm2Model] = {}
    traces: dict[str, list[float]] = {}
    for idx, (label, seqs) in enumerate(training_sets.items()):
        seed = cfg.seed + idx
        if order == 2:
            model = init_hmm2(seqs, n_states, n_comp, topology, seed, cfg)
            models[label], traces[label] = baum_welch2(model, seqs, cfg)
        elif order == 1:
            model = init_hmm1(seqs, n_states, n_comp, topology, seed, cfg)
            models[label], traces[label] = baum_welch1(model, seqs, cfg)
        else:
            raise DataError(f"unsupported model order {order}")
    return ConditionBank(list(training_sets), models, scope or {}), traces


def score_sequence(model: Hmm1Model | Hmm2Model, obs, scoring: str = "forward") -> float:
    if scoring == "forward":
        if isinstance(model, Hmm2Model):
            return forward2(model, obs)[1]
        return forward1(model, obs)[1]
    if scoring == "viterbi":
        try:
            if isinstance(model, Hmm2Model):
                return viterbi2(model, obs)[1]
            return viterbi1(model, obs)[1]
        except NumericError:
            return -np.inf
    raise DataError(f"unknown scoring mode {scoring!r}")


def identify(bank: ConditionBank, obs, scoring: str = "forward") -> IdentificationResult:
    """Maximum-likelihood label; ties broken by bank label order."""
    mat = frames_of(obs)
    if mat.shape[1] != bank.dim:
        raise DataError(f"observation dim {mat.shape[1]} != bank dim {bank.dim}")
    scores = {label: score_sequence(bank.models[label], mat, scoring)
              for label in bank.labels}
    best = max(bank.labels, key=lambda lab: scores[lab])  # max keeps first on ties
    if scores[best] == -np.inf:
        raise NumericError("no model assigns nonzero probability to this utterance")
    return IdentificationResult(best, scores)


@dataclass
class EvaluationReport:
    """Counts indexed [predicted][true]; percentages column-normalized as in
    the published confusion-matrix layout (each true-condition column sums
    to 100)."""

    labels: list[str]
    counts: np.ndarray
    protocol: dict = field(default_factory=dict)
    group_counts: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise DataError("count matrix shape must match the label list")
        if np.any(self.counts < 0):
            raise DataError("counts must be nonnegative")

    @staticmethod
    def _percentages(counts: np.ndarray) -> np.ndarray:
        col = counts.sum(axis=0)
        out = np.zeros(counts.shape, dtype=np.float64)
        nz = col > 0
        out[:, nz] = 100.0 * counts[:, nz] / col[nz]
        return out

    @property
    def percentages(self) -> np.ndarray:
        return self._percentages(self.counts)

    @property
    def rates(self) -> np.ndarray:
        """Per-condition identification rate: the diagonal percentage."""
        return np.diag(self.percentages)

    def group_rates(self) -> dict[str, np.ndarray]:
        return {g: np.diag(self._percentages(c)) for g, c in self.group_counts.items()}

    @property
    def n_test(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        doc = {
            "format_version": 1,
            "labels": list(self.labels),
            "counts": self.counts.tolist(),
            "percentages": self.percentages.tolist(),
            "rates": self.rates.tolist(),
            "n_test": self.n_test,
            "protocol": self.protocol,
        }
        if self.group_counts:
            doc["group_counts"] = {g: c.tolist() for g, c in self.group_counts.items()}
            doc["group_rates"] = {g: r.tolist() for g, r in self.group_rates().items()}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationReport":
        groups = {g: np.asarray(c) for g, c in doc.get("group_counts", {}).items()}
        return cls(list(doc["labels"]), np.asarray(doc["counts"]),
                   doc.get("protocol", {}), groups)


def evaluate(bank: ConditionBank, test_sets: dict[str, list],
             scoring: str = "forward", protocol: dict | None = None,
             groups: dict[str, str] | None = None) -> EvaluationReport:
    """Identify every test utterance and tabulate the confusion counts.

    test_sets maps the true label to its utterances. When groups maps a
    source id to a group name, per-group count matrices are kept as well.
    """
    labels = list(bank.labels)
    index = {lab: i for i, lab in enumerate(labels)}
    for lab in test_sets:
        if lab not in index:
            raise DataError(f"unknown true label {lab!r}")
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    group_counts: dict[str, np.ndarray] = {}
    for true_label, seqs in test_sets.items():
        for obs in seqs:
            result = identify(bank, obs, scoring)
            counts[index[result.label], index[true_label]] += 1
            if groups:
                g = groups.get(getattr(obs, "source_id", ""), None)
                if g is not None:
                    gc = group_counts.setdefault(
                        g, np.zeros((len(labels), len(labels)), dtype=np.int64))
                    gc[index[result.label], index[true_label]] += 1
    return EvaluationReport(labels, counts, protocol or {}, group_counts)


def improvement_rate(perf_baseline: float, perf_new: float) -> float:
    """Relative gain in percent of the new rate over the baseline rate."""
    if perf_baseline <= 0:
        raise DataError("baseline rate must be positive")
    return 100.0 * (perf_new - perf_baseline) / perf_baseline


def improvement_table(baseline: EvaluationReport | dict, new: EvaluationReport | dict
                      ) -> dict[str, float]:
    """Per-condition improvement rates, rounded to one decimal."""
    def rates_of(rep):
        if isinstance(rep, EvaluationReport):
            return list(rep.labels), list(rep.rates)
        return list(rep["labels"]), list(rep["rates"])

    labels_b, rates_b = rates_of(baseline)
    labels_n, rates_n = rates_of(new)
    if labels_b != labels_n:
        raise DataError("reports have mismatched condition labels")
    return {lab: round_half_away(improvement_rate(rb, rn), 1)
            for lab, rb, rn in zip(labels_b, rates_b, rates_n)}


def _fmt_row(cells: list[str], widths: list[int]) -> str:
    return "  ".join(c.rjust(w) for c, w in zip(cells, widths))


def render_report_text(report: EvaluationReport, title: str = "") -> str:
    """Aligned plain-text tables: per-condition rates then the confusion matrix."""
    labels = report.labels
    lines = []
    if title:
        lines += [title, "=" * len(title), ""]
    group_rates = report.group_rates()
    lines.append("TALKING CONDITION IDENTIFICATION PERFORMANCE")
    header = ["Condition"] + list(group_rates) + ["Average"]
    rows = [header]
    rates = report.rates
    for i, lab in enumerate(labels):
        row = [lab]
        for g in group_rates:
            row.append(f"{round_half_away(group_rates[g][i], 1):.1f}%")
        row.append(f"{round_half_away(rates[i], 1):.1f}%")
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines += [_fmt_row(r, widths) for r in rows]
    lines.append("")
    lines.append("CONFUSION MATRIX (columns: portrayed condition, rows: evaluated; column %)")
    pct = report.percentages
    rows = [["Model"] + labels]
    for i, lab in enumerate(labels):
        rows.append([lab] + [f"{round_half_away(pct[i, j], 1):.1f}%"
                             for j in range(len(labels))])
    widths = [max(len(r[c]) for r in rows) for c in range(len(labels) + 1)]
    lines += [_fmt_row(r, widths) for r in rows]
    lines.append("")
    lines.append(f"test utterances: {report.n_test}")
    return "\n".join(lines) + "\n"


def render_improvement_text(table: dict[str, float]) -> str:
    rows = [["Model"] + list(table), ["%"] + [f"{v:.1f}" for v in table.values()]]
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    title = "AVERAGE IMPROVEMENT RATE"
    return "\n".join([title] + [_fmt_row(r, widths) for r in rows]) + "\n"
