import numpy as np
import pytest

from hmm2tc.classify import (ConditionBank, EvaluationReport, evaluate, identify,
                             improvement_rate, improvement_table,
                             render_improvement_text, render_report_text,
                             round_half_away, train_bank)
from hmm2tc.config import TrainConfig
from hmm2tc.errors import DataError
from hmm2tc.gmm import GaussianMixture
from hmm2tc.hmm2 import Hmm2Model, sample_hmm2

from conftest import random_hmm2


def point_model(mean, dim=2):
    mix = GaussianMixture([1.0], [np.full(dim, float(mean))], [np.ones(dim)])
    return Hmm2Model([1.0], np.ones((1, 1)), np.ones((1, 1, 1)), [mix])


def two_label_bank():
    return ConditionBank(["a", "b"], {"a": point_model(0.0), "b": point_model(6.0)})


class TestIdentify:
    def test_dominant_model_wins(self):
        bank = two_label_bank()
        obs = np.zeros((10, 2))
        assert identify(bank, obs).label == "a"
        assert identify(bank, obs + 6.0).label == "b"

    def test_tie_takes_first_label(self):
        bank = ConditionBank(["x", "y"], {"x": point_model(0.0), "y": point_model(0.0)})
        assert identify(bank, np.zeros((5, 2))).label == "x"

    def test_score_shift_invariance(self):
        bank = two_label_bank()
        obs = np.random.default_rng(0).normal(2.0, 1.0, (8, 2))
        result = identify(bank, obs)
        shifted = {k: v + 123.4 for k, v in result.scores.items()}
        assert max(shifted, key=shifted.get) == result.label

    def test_dim_mismatch(self):
        with pytest.raises(DataError):
            identify(two_label_bank(), np.zeros((5, 3)))

    def test_monte_carlo_separated(self):
        rng = np.random.default_rng(1)
        models = {lab: point_model(m) for lab, m in [("a", -4.0), ("b", 4.0)]}
        bank = ConditionBank(["a", "b"], models)
        correct = 0
        for trial in range(200):
            lab = ("a", "b")[trial % 2]
            _, frames = sample_hmm2(models[lab], 20, seed=trial)
            correct += identify(bank, frames).label == lab
        assert correct >= 190


class TestTrainBank:
    def test_separated_conditions(self):
        rng = np.random.default_rng(2)
        gen = {"lo": point_model(-3.0), "hi": point_model(3.0)}
        sets = {lab: [sample_hmm2(m, 30, seed=s)[1] for s in range(4)]
                for lab, m in gen.items()}
        cfg = TrainConfig(max_iterations=10)
        bank, traces = train_bank(sets, order=2, n_states=1, n_comp=1,
                                  topology="ergodic", cfg=cfg)
        assert set(traces) == {"lo", "hi"}
        from hmm2tc.classify import score_sequence
        for lab in ("lo", "hi"):
            other = "hi" if lab == "lo" else "lo"
            obs = sets[lab][0]
            assert score_sequence(bank.models[lab], obs) > \
                score_sequence(bank.models[other], obs)

    def test_single_label(self):
        obs = [np.random.default_rng(3).normal(size=(20, 2)) for _ in range(2)]
        bank, _ = train_bank({"only": obs}, 1, 1, 1, "ergodic",
                             TrainConfig(max_iterations=3))
        assert identify(bank, obs[0]).label == "only"

    def test_empty_label_rejected(self):
        with pytest.raises(DataError):
            train_bank({"a": []}, 2, 1, 1)

    def test_heterogeneous_dims_rejected(self):
        with pytest.raises(DataError):
            train_bank({"a": [np.zeros((5, 2))], "b": [np.zeros((5, 3))]}, 2, 1, 1)


class TestEvaluate:
    def test_perfect_predictions(self):
        bank = two_label_bank()
        sets = {"a": [np.zeros((6, 2))] * 3, "b": [np.full((6, 2), 6.0)] * 3}
        report = evaluate(bank, sets)
        assert np.array_equal(report.counts, [[3, 0], [0, 3]])
        assert np.allclose(report.percentages, [[100, 0], [0, 100]])
        assert np.allclose(report.rates, [100, 100])

    def test_partial_rate(self):
        report = EvaluationReport(["a", "b"], [[3, 0], [1, 4]])
        assert report.rates[0] == pytest.approx(75.0)

    def test_columns_sum_to_100(self):
        rng = np.random.default_rng(4)
        counts = rng.integers(0, 9, (4, 4))
        report = EvaluationReport(list("wxyz"), counts)
        sums = report.percentages.sum(axis=0)
        for j, total in enumerate(counts.sum(axis=0)):
            if total > 0:
                assert sums[j] == pytest.approx(100.0)

    def test_counts_partition(self):
        bank = two_label_bank()
        sets = {"a": [np.zeros((5, 2))] * 4, "b": [np.full((5, 2), 6.0)] * 3}
        report = evaluate(bank, sets)
        assert report.n_test == 7

    def test_unknown_label(self):
        with pytest.raises(DataError):
            evaluate(two_label_bank(), {"zzz": [np.zeros((5, 2))]})

    def test_report_round_trip(self):
        report = EvaluationReport(["a", "b"], [[3, 1], [1, 4]],
                                  protocol={"scoring": "forward"})
        back = EvaluationReport.from_dict(report.to_dict())
        assert np.array_equal(back.counts, report.counts)
        assert back.labels == report.labels


class TestImprovementRate:
    def test_shouted_row(self):
        assert round_half_away(improvement_rate(30, 38)) == pytest.approx(26.7)

    @pytest.mark.parametrize("base,new,expected", [
        (54, 60, 11.1), (38, 46, 21.1), (59, 64, 8.5), (49, 55, 12.2)])
    def test_published_rows(self, base, new, expected):
        assert round_half_away(improvement_rate(base, new)) == pytest.approx(expected)

    def test_identity(self):
        assert round_half_away(improvement_rate(99, 99)) == 0.0

    def test_zero_baseline(self):
        with pytest.raises(DataError):
            improvement_rate(0, 10)

    def test_table_from_rates(self):
        base = {"labels": ["neutral", "shouted"], "rates": [99.0, 30.0]}
        new = {"labels": ["neutral", "shouted"], "rates": [99.0, 38.0]}
        assert improvement_table(base, new) == {"neutral": 0.0, "shouted": 26.7}

    def test_label_mismatch(self):
        with pytest.raises(DataError):
            improvement_table({"labels": ["a"], "rates": [1.0]},
                              {"labels": ["b"], "rates": [1.0]})


class TestRendering:
    def test_golden_report_text(self):
        report = EvaluationReport(["neutral", "shouted"], [[3, 1], [1, 3]])
        expected = (
            "TALKING CONDITION IDENTIFICATION PERFORMANCE\n"
            "Condition  Average\n"
            "  neutral    75.0%\n"
            "  shouted    75.0%\n"
            "\n"
            "CONFUSION MATRIX (columns: portrayed condition, rows: evaluated; column %)\n"
            "  Model  neutral  shouted\n"
            "neutral    75.0%    25.0%\n"
            "shouted    25.0%    75.0%\n"
            "\n"
            "test utterances: 8\n"
        )
        assert render_report_text(report) == expected

    def test_improvement_text_contains_values(self):
        text = render_improvement_text({"neutral": 0.0, "shouted": 26.7})
        assert "26.7" in text and "neutral" in text

    def test_round_half_away_from_zero(self):
        assert round_half_away(0.05) == 0.1
        assert round_half_away(-0.05) == -0.1
        assert round_half_away(26.65) == pytest.approx(26.7)
