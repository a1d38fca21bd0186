import numpy as np
import pytest

from mixrobust import (ClassifierError, ClassifierKind, DatasetPool,
                       ExternalRunnerError, SampleSplit, SyntheticDataConfig,
                       auc_ovr, default_class_means, generate_pool, train_and_score)
from mixrobust.classifiers import best_stump_split, fit_logistic_ovr
from mixrobust.seeding import generator


def split_of(train, test):
    train = np.asarray(train, dtype=int)
    test = np.asarray(test, dtype=int)
    return SampleSplit(train_indices=train, test_indices=test,
                       train_counts=None, test_counts=None)


def two_class_pool(n_per_class=500, gap=6.0, seed=0):
    """1-d classes centered at 0 and gap, unit noise."""
    cfg = SyntheticDataConfig(m=2, d=1, n_per_class=n_per_class,
                              class_means=((0.0,), (gap,)), seed=seed)
    return generate_pool(cfg)


class TestGeneratePool:
    def test_counts_and_labels(self):
        cfg = SyntheticDataConfig(m=3, d=4, n_per_class=1000,
                                  class_means=default_class_means(3, 4), seed=1)
        pool = generate_pool(cfg)
        assert pool.n == 3000
        assert [idx.size for idx in pool.class_index] == [1000, 1000, 1000]

    def test_boost_tightens_clusters(self):
        cfg = SyntheticDataConfig(m=3, d=2, n_per_class=10000,
                                  class_means=((0, 0), (5, 0), (0, 5)),
                                  separability_boost=(1, 1, 10), seed=2)
        pool = generate_pool(cfg)
        sds = [pool.features[pool.class_index[j]].std(axis=0).mean() for j in range(3)]
        assert sds[0] / sds[2] == pytest.approx(10.0, rel=0.05)
        assert sds[1] / sds[2] == pytest.approx(10.0, rel=0.05)

    def test_identical_seed_identical_pool(self):
        cfg = SyntheticDataConfig(m=2, d=3, n_per_class=50,
                                  class_means=default_class_means(2, 3), seed=9)
        a, b = generate_pool(cfg), generate_pool(cfg)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_validation(self):
        with pytest.raises(ClassifierError):
            SyntheticDataConfig(m=2, d=2, n_per_class=5, class_means=((0, 0),))
        with pytest.raises(ClassifierError):
            SyntheticDataConfig(m=2, d=2, n_per_class=5,
                                class_means=((0, 0), (1, 1)), noise_scale=0.0)


class TestLogistic:
    def test_separable_classes_reach_high_auc(self):
        pool = two_class_pool()
        train = np.arange(pool.n)
        scores = train_and_score(ClassifierKind.LOGISTIC, split_of(train, train), pool)
        labels = pool.labels
        assert auc_ovr(scores, labels, 1) >= 0.99
        assert auc_ovr(scores, labels, 2) >= 0.99

    def test_rows_sum_to_one(self):
        pool = two_class_pool(n_per_class=40)
        train = np.arange(pool.n)
        scores = train_and_score("logistic", split_of(train, train), pool)
        assert np.max(np.abs(scores.sum(axis=1) - 1.0)) <= 1e-9

    def test_single_class_training_rejected(self):
        pool = two_class_pool(n_per_class=30)
        only_class_1 = pool.class_index[0]
        with pytest.raises(ClassifierError, match="fewer than 2"):
            train_and_score(ClassifierKind.LOGISTIC,
                            split_of(only_class_1, np.arange(4)), pool)

    def test_loss_nonincreasing_every_50_epochs(self):
        pool = two_class_pool(n_per_class=100, gap=2.0)
        _, losses = fit_logistic_ovr(pool.features, pool.labels, 2,
                                     epochs=500, loss_every=50)
        assert len(losses) == 11
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


class TestBoostedStumps:
    def test_one_round_finds_gap_threshold_and_perfect_auc(self):
        # 10 training points per class, supports separated around 0
        left = np.linspace(-2.0, -0.5, 10)
        right = np.linspace(0.5, 2.0, 10)
        features = np.concatenate([left, right]).reshape(-1, 1)
        labels = np.array([1] * 10 + [2] * 10)
        pool = DatasetPool(features=features, labels=labels)
        train = np.arange(20)
        scores = train_and_score(ClassifierKind.BOOSTED_STUMPS,
                                 split_of(train, train), pool, hyper={"rounds": 1})
        assert auc_ovr(scores, labels, 2) == 1.0

        threshold, _, _, _ = best_stump_split(features[:, 0],
                                              (labels == 2).astype(float) - 0.5)
        assert -0.5 < threshold < 0.5

    def test_best_split_matches_bruteforce_oracle(self):
        rng = generator(41, "stump")
        for _ in range(40):
            n = 20
            values = np.round(rng.normal(size=n), 1)
            residuals = rng.normal(size=n)
            threshold, left, right, sse = best_stump_split(values, residuals)

            # oracle: try every midpoint between adjacent distinct sorted values
            order = np.argsort(values)
            sv, sr = values[order], residuals[order]
            best_sse = np.inf
            best_threshold = None
            for i in range(n - 1):
                if sv[i] == sv[i + 1]:
                    continue
                cut = 0.5 * (sv[i] + sv[i + 1])
                mask = sv <= cut
                fitted = np.where(mask, sr[mask].mean(), sr[~mask].mean())
                cand = float(((sr - fitted) ** 2).sum())
                if cand < best_sse - 1e-12:
                    best_sse = cand
                    best_threshold = cut
            if best_threshold is None:
                assert threshold is None
            else:
                assert sse == pytest.approx(best_sse, abs=1e-9)
                assert threshold == pytest.approx(best_threshold, abs=1e-12)

    def test_constant_feature_fits_constant(self):
        threshold, left, right, _ = best_stump_split(np.ones(6),
                                                     np.array([1., 2, 3, 4, 5, 6]))
        assert threshold is None
        assert left == pytest.approx(3.5)

    def test_rows_sum_to_one(self):
        pool = two_class_pool(n_per_class=30)
        train = np.arange(pool.n)
        scores = train_and_score("boosted_stumps", split_of(train, train), pool,
                                 hyper={"rounds": 5})
        assert np.max(np.abs(scores.sum(axis=1) - 1.0)) <= 1e-9


class TestPermutationEquivariance:
    @pytest.mark.parametrize("kind,hyper", [
        (ClassifierKind.LOGISTIC, {"epochs": 60}),
        (ClassifierKind.BOOSTED_STUMPS, {"rounds": 10}),
    ])
    def test_relabeling_permutes_score_columns(self, kind, hyper):
        cfg = SyntheticDataConfig(m=3, d=3, n_per_class=40,
                                  class_means=default_class_means(3, 3), seed=4)
        pool = generate_pool(cfg)
        perm = {1: 3, 2: 1, 3: 2}
        permuted = DatasetPool(features=pool.features.copy(),
                               labels=np.array([perm[v] for v in pool.labels]))
        rng = generator(5, "eq")
        train = rng.integers(0, pool.n, size=60)
        test = np.arange(0, pool.n, 7)
        base = train_and_score(kind, split_of(train, test), pool, hyper=hyper)
        swapped = train_and_score(kind, split_of(train, test), permuted, hyper=hyper)
        for old, new in perm.items():
            assert np.array_equal(base[:, old - 1], swapped[:, new - 1])


RUNNER_OK = """\
import csv, sys
from pathlib import Path

workdir = Path(sys.argv[1])
with open(workdir / "train.csv") as fh:
    train_rows = list(csv.reader(fh))[1:]
m = max(int(row[0]) for row in train_rows)
with open(workdir / "test.csv") as fh:
    test_rows = list(csv.reader(fh))[1:]
with open(workdir / "scores.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow([f"score_{j}" for j in range(1, m + 1)])
    for row in test_rows:
        value = float(row[1])
        hot = min(max(value, 0.0), 1.0)
        rest = (1.0 - hot) / (m - 1)
        writer.writerow([hot] + [rest] * (m - 1))
"""

RUNNER_FAILS = "import sys; sys.exit(3)\n"

RUNNER_BAD_ROWS = """\
import sys
from pathlib import Path
workdir = Path(sys.argv[1])
(workdir / "scores.csv").write_text("score_1,score_2\\n0.9,0.2\\n")
"""


class TestExternalRunner:
    def _pool(self):
        rng = generator(6, "ext")
        features = rng.random((30, 2))
        labels = np.array([1, 2] * 15)
        return DatasetPool(features=features, labels=labels)

    def _split(self, pool):
        train = np.array([0, 0, 1, 2, 3, 4, 5])  # duplicate on purpose
        test = np.arange(10, 20)
        return split_of(train, test)

    def test_protocol_round_trip(self, tmp_path):
        runner = tmp_path / "runner.py"
        runner.write_text(RUNNER_OK)
        pool = self._pool()
        scores = train_and_score(ClassifierKind.EXTERNAL, self._split(pool), pool,
                                 command=["python3", str(runner)],
                                 workdir=tmp_path / "work")
        assert scores.shape == (10, 2)
        assert np.max(np.abs(scores.sum(axis=1) - 1.0)) <= 1e-9
        # training duplicates materialize as repeated rows
        train_lines = (tmp_path / "work" / "train.csv").read_text().splitlines()
        assert len(train_lines) == 1 + 7

    def test_nonzero_exit_reported(self, tmp_path):
        runner = tmp_path / "runner.py"
        runner.write_text(RUNNER_FAILS)
        pool = self._pool()
        with pytest.raises(ExternalRunnerError, match="exited 3"):
            train_and_score(ClassifierKind.EXTERNAL, self._split(pool), pool,
                            command=["python3", str(runner)])

    def test_row_count_mismatch_reported(self, tmp_path):
        runner = tmp_path / "runner.py"
        runner.write_text(RUNNER_BAD_ROWS)
        pool = self._pool()
        with pytest.raises(ExternalRunnerError, match="expected 10 rows"):
            train_and_score(ClassifierKind.EXTERNAL, self._split(pool), pool,
                            command=["python3", str(runner)])

    def test_missing_command_rejected(self):
        pool = self._pool()
        with pytest.raises(ClassifierError, match="command"):
            train_and_score(ClassifierKind.EXTERNAL, self._split(pool), pool)
