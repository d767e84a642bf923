"""Smoke test for the revsignal extension module.

Build it first:  pip install --no-build-isolation ./crates/python
"""

import json
import math
import tempfile
from pathlib import Path

import revsignal

SMALL = {
    "n_developers": 14,
    "n_modules": 6,
    "span_days": 300,
    "reviews_per_day": 1.5,
    "burn_in_days": 90,
    "warmup_days": 45,
}

PLAN = {
    "feature_sets": ["CO", "ALL"],
    "classifiers": ["logistic_regression"],
    "regressors": ["linear_reg"],
    "rates": [0.5],
    "timeframe_months": 6,
    "period_months": 1,
    "n_periods": 2,
    "timeframes": [2, 4],
    "rfe_folds": 2,
}


def main():
    assert len(revsignal.FEATURE_NAMES) == 12
    assert revsignal.log_feedback(9) == 1.0
    assert revsignal.undersample_count(3, 0.5) == 2
    assert revsignal.undersample_count(5, 0.05) == 1
    r = revsignal.classification_report([True, False], [False, False], [0.9, 0.1])
    assert r["precision"] is None and r["recall"] == 0.0, r
    assert revsignal.average_precision([True, False, True], [0.9, 0.8, 0.7]) == 0.5 + 0.5 * 2 / 3

    mc1 = revsignal.load_corpus(Path(__file__).resolve().parents[1] / "crates/core/fixtures/mc1")
    assert mc1.n_reviews == 3 and sorted(mc1.developers()) == ["A", "R1", "R2"]

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        summary = revsignal.synth(str(tmp / "corpus"), seed=8, config=json.dumps(SMALL))
        assert summary["n_reviews"] > 100, summary
        corpus = revsignal.load_corpus(str(tmp / "corpus"))
        assert corpus.n_reviews == summary["n_reviews"]
        assert corpus.filter(max_loc=50).n_reviews < corpus.n_reviews

        ids, rows, labels = corpus.examples(timeframe=6, period=1, rate=0.5, seed=3)
        assert len(ids) == len(rows) == len(labels) > 0
        y = [float(p) for p, _, _ in labels]
        model = revsignal.train("logistic_regression", rows, y, params={"lambda": 0.01})
        scores = model.predict(rows)
        assert all(0.0 <= s <= 1.0 for s in scores)
        again = revsignal.Model.from_json(model.to_json())
        assert again.predict(rows) == scores

        _, test_rows, test_labels = corpus.examples(timeframe=6, period=1, phase="test")
        scores = model.predict(test_rows)
        report = revsignal.classification_report(
            [p for p, _, _ in test_labels], [s >= 0.5 for s in scores], scores
        )
        print("participation on the test month:", report)

        fb = revsignal.train("linear_reg", rows, [f for _, _, f in labels])
        rr = revsignal.regression_report([f for _, _, f in labels], fb.predict(rows))
        assert rr["rmse"] >= 0 and not math.isnan(rr["rmse"])

        out = str(tmp / "results")
        for stage in ("rq1", "rq2", "rq3"):
            text = revsignal.run_stage(stage, corpus, out, plan=json.dumps(PLAN))
            assert text
        assert (tmp / "results" / "rq3.csv").exists()
    print("smoke test passed")


if __name__ == "__main__":
    main()
