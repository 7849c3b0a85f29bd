"""Cross-validation, subset search, and candidate ranking."""

import random

import numpy as np
import pytest

from profilematch import models as md
from profilematch.errors import ConfigurationError
from profilematch.evaluate import (EvalReport, RankResult,
                                   build_candidate_index, kfold_cv,
                                   kfold_cv_arrays, rank_candidates,
                                   rank_curve, read_rank_results_csv, search,
                                   stratified_folds, subset_search,
                                   write_curve_csv, write_eval_csv,
                                   write_rank_results_csv, write_subsets_csv)
from profilematch.pipeline import (COLUMNS, MetricConfig, MetricMatrix,
                                   PipelineContext)
from profilematch.profiles import Label, Profile

NAME_ID = "userid:jw+name:jw+policy:impute_neutral"


def separable_arrays(rng, n):
    y = np.array([rng.randrange(2) for _ in range(n)], dtype=np.int8)
    base = np.where(y == 1, 0.85, 0.15)
    X = np.column_stack([
        np.clip(base + [rng.uniform(-0.1, 0.1) for _ in range(n)], 0, 1),
        np.clip(base + [rng.uniform(-0.1, 0.1) for _ in range(n)], 0, 1),
    ])
    return X, y


class TestStratifiedFolds:
    @pytest.mark.parametrize("n,k,seed", [(30, 10, 0), (47, 10, 3),
                                          (23, 5, 1), (10, 10, 2)])
    def test_disjoint_and_covering(self, n, k, seed):
        rng = random.Random(seed)
        y = np.array([rng.randrange(2) for _ in range(n)])
        folds = stratified_folds(y, k, seed)
        assert len(folds) == k
        seen = np.concatenate(folds)
        assert sorted(seen.tolist()) == list(range(n))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_per_class_balance_within_one(self, seed):
        rng = random.Random(seed)
        y = np.array([rng.randrange(2) for _ in range(53)])
        k = 10
        folds = stratified_folds(y, k, seed)
        for cls in (0, 1):
            total = int((y == cls).sum())
            counts = [int((y[f] == cls).sum()) for f in folds]
            assert min(counts) >= total // k
            assert max(counts) <= -(-total // k)

    def test_deterministic_and_seed_sensitive(self):
        y = np.array([0, 1] * 20)
        a = stratified_folds(y, 5, seed=4)
        b = stratified_folds(y, 5, seed=4)
        c = stratified_folds(y, 5, seed=5)
        assert all((x == z).all() for x, z in zip(a, b))
        assert any((x.shape != z.shape) or (x != z).any()
                   for x, z in zip(a, c))


class TestKfoldCv:
    def test_counts_cover_every_instance_once(self):
        rng = random.Random(0)
        X, y = separable_arrays(rng, 37)
        report = kfold_cv_arrays(X, y, NAME_ID, "nb", k=10, seed=0)
        assert report.tp + report.fp + report.tn + report.fn == 37

    def test_per_fold_counts_sum_to_totals(self):
        rng = random.Random(1)
        X, y = separable_arrays(rng, 30)
        report = kfold_cv_arrays(X, y, NAME_ID, "dt", k=5, seed=0)
        assert sum(f["tp"] for f in report.per_fold) == report.tp
        assert sum(f["fp"] for f in report.per_fold) == report.fp
        assert sum(f["tn"] for f in report.per_fold) == report.tn
        assert sum(f["fn"] for f in report.per_fold) == report.fn

    def test_separable_data_scores_perfectly(self):
        rng = random.Random(2)
        X, y = separable_arrays(rng, 60)
        for kind in ("nb", "knn", "svm"):
            report = kfold_cv_arrays(X, y, NAME_ID, kind, k=10, seed=0)
            assert report.accuracy == 1.0, kind

    def test_leave_one_out(self):
        rng = random.Random(3)
        X, y = separable_arrays(rng, 12)
        report = kfold_cv_arrays(X, y, NAME_ID, "knn", k=12, seed=0)
        assert report.k == 12
        assert report.tp + report.fp + report.tn + report.fn == 12
        assert all(sum(f[c] for c in ("tp", "fp", "tn", "fn")) == 1
                   for f in report.per_fold)

    def test_shuffled_labels_score_near_chance(self):
        rng = random.Random(4)
        X, _ = separable_arrays(rng, 200)
        y = np.array([rng.randrange(2) for _ in range(200)], dtype=np.int8)
        report = kfold_cv_arrays(X, y, NAME_ID, "nb", k=10, seed=0)
        assert 0.3 <= report.accuracy <= 0.7

    def test_too_few_instances(self):
        X = np.zeros((5, 2))
        y = np.array([0, 1, 0, 1, 0])
        with pytest.raises(ValueError, match="smaller than k"):
            kfold_cv_arrays(X, y, NAME_ID, "nb", k=10)

    def test_single_class_rejected(self):
        X = np.zeros((12, 2))
        y = np.ones(12, dtype=np.int8)
        with pytest.raises(ValueError, match="both classes"):
            kfold_cv_arrays(X, y, NAME_ID, "nb", k=3)

    def test_vector_entry_point_matches_arrays(self):
        from profilematch.pipeline import SimilarityVector
        rng = random.Random(5)
        X, y = separable_arrays(rng, 24)
        vectors = [SimilarityVector(userid=float(r[0]), name=float(r[1]),
                                    label=Label.MATCH if lab else
                                    Label.NONMATCH, config_id=NAME_ID)
                   for r, lab in zip(X, y)]
        via_vectors = kfold_cv(vectors, "nb", k=4, seed=1)
        via_arrays = kfold_cv_arrays(X, y, NAME_ID, "nb", k=4, seed=1)
        assert via_vectors == via_arrays


class TestEvalReport:
    def test_metric_arithmetic(self):
        rep = EvalReport(kind="nb", k=10, seed=0, tp=3, fp=1, tn=4, fn=2)
        assert rep.accuracy == 0.7
        assert rep.precision == 0.75
        assert rep.recall == 0.6
        assert rep.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)

    def test_zero_denominators(self):
        rep = EvalReport(kind="nb", k=10, seed=0, tp=0, fp=0, tn=5, fn=5)
        assert rep.precision == 0.0
        assert rep.recall == 0.0
        assert rep.f1 == 0.0


def synthetic_matrix(rng, n):
    labels = tuple(Label.MATCH if rng.random() < 0.5 else Label.NONMATCH
                   for _ in range(n))
    base = np.array([0.8 if lab is Label.MATCH else 0.2 for lab in labels])
    scores = np.empty((n, len(COLUMNS)))
    for j in range(len(COLUMNS)):
        noise = np.array([rng.uniform(-0.2, 0.2) for _ in range(n)])
        scores[:, j] = np.clip(base + noise, 0.0, 1.0)
    return MetricMatrix(scores=scores, labels=labels, columns=COLUMNS)


class TestSubsetSearch:
    def test_enumerates_all_selections_sorted(self):
        rng = random.Random(6)
        matrix = synthetic_matrix(rng, 24)
        results = subset_search(matrix, "nb", k=3, seed=0)
        assert len(results) == 959
        ids = [cfg.config_id for cfg, _ in results]
        assert len(set(ids)) == 959
        keyed = [(-acc, cfg.config_id) for cfg, acc in results]
        assert keyed == sorted(keyed)
        assert all(cid.endswith("policy:impute_neutral") for cid in ids)

    def test_parallel_matches_serial(self):
        rng = random.Random(7)
        matrix = synthetic_matrix(rng, 20)
        serial = subset_search(matrix, "nb", k=2, seed=0, jobs=1)
        parallel = subset_search(matrix, "nb", k=2, seed=0, jobs=2)
        assert [(c.config_id, a) for c, a in serial] == \
            [(c.config_id, a) for c, a in parallel]

    def test_propagate_policy_flows_into_ids(self):
        rng = random.Random(8)
        matrix = synthetic_matrix(rng, 12)
        results = subset_search(matrix, "nb", k=2, seed=0,
                                missing_policy="propagate_missing")
        assert all(cfg.config_id.endswith("policy:propagate_missing")
                   for cfg, _ in results)

    def test_best_config_attains_max_accuracy(self):
        rng = random.Random(9)
        matrix = synthetic_matrix(rng, 24)
        results = subset_search(matrix, "nb", k=3, seed=0)
        best_acc = results[0][1]
        assert all(acc <= best_acc for _, acc in results)


def directory_profiles():
    return [
        Profile(service="lnkd", userid="anna.smith", name="Anna Smith"),
        Profile(service="lnkd", userid="anna.jones", name="Anna Jones"),
        Profile(service="lnkd", userid="bob.smith", name="Bob Smith"),
        Profile(service="lnkd", userid="ann.smythe", name="Ann Smythe"),
        Profile(service="lnkd", userid="carla", name="Carla Reyes"),
    ]


class TestCandidateIndex:
    def test_postings_are_sorted_token_lists(self):
        index = build_candidate_index(directory_profiles())
        assert index.postings["anna"] == (("lnkd", "anna.jones"),
                                          ("lnkd", "anna.smith"))
        assert index.postings["smith"] == (("lnkd", "anna.smith"),
                                           ("lnkd", "bob.smith"))

    def test_search_orders_by_overlap_then_similarity(self):
        index = build_candidate_index(directory_profiles())
        got = [p.userid for p in search(index, "Anna Smith")]
        # two shared tokens beats one; among one-token hits the closer
        # full name wins
        assert got[0] == "anna.smith"
        assert set(got[1:3]) == {"anna.jones", "bob.smith"}
        assert "carla" not in got

    def test_top_k_caps_results(self):
        profiles = [Profile(service="s", userid=f"u{i}", name="Sam Li")
                    for i in range(30)]
        index = build_candidate_index(profiles, top_k=7)
        assert len(search(index, "Sam Li")) == 7

    def test_empty_or_unknown_query(self):
        index = build_candidate_index(directory_profiles())
        assert search(index, "") == []
        assert search(index, "zzz qqq") == []


class TestRankCandidates:
    def make_model(self):
        from profilematch.pipeline import SimilarityVector
        rng = random.Random(10)
        vectors = []
        for _ in range(30):
            match = rng.random() < 0.5
            base = 0.9 if match else 0.15
            vectors.append(SimilarityVector(
                userid=min(1.0, max(0.0, base + rng.uniform(-0.1, 0.1))),
                name=min(1.0, max(0.0, base + rng.uniform(-0.1, 0.1))),
                label=Label.MATCH if match else Label.NONMATCH,
                config_id=NAME_ID))
        # the linear model keeps probabilities graded, so candidate order
        # reflects similarity instead of saturating at 1.0
        return md.train("svm", vectors)

    def test_true_match_found_at_rank_one(self):
        model = self.make_model()
        cfg = MetricConfig.from_config_id(NAME_ID)
        ctx = PipelineContext()
        index = build_candidate_index(directory_profiles())
        query = Profile(service="twtr", userid="anna.smith",
                        name="Anna Smith")
        res = rank_candidates(query, index, model, cfg, ctx,
                              true_key=("lnkd", "anna.smith"))
        assert res.position == 1
        assert res.query_key == ("twtr", "anna.smith")
        probs = [p for _, p in res.ranked]
        assert probs == sorted(probs, reverse=True)

    def test_absent_truth_reports_none(self):
        model = self.make_model()
        cfg = MetricConfig.from_config_id(NAME_ID)
        index = build_candidate_index(directory_profiles())
        query = Profile(service="twtr", userid="carla_r", name="Carla Reyes")
        res = rank_candidates(query, index, model, cfg, PipelineContext(),
                              true_key=("lnkd", "gone"))
        assert res.position is None
        assert len(res.ranked) >= 1

    def test_config_model_mismatch_rejected(self):
        model = self.make_model()
        other = MetricConfig.from_config_id(
            "userid:jw+policy:impute_neutral")
        index = build_candidate_index(directory_profiles())
        query = Profile(service="twtr", userid="x", name="Anna Smith")
        with pytest.raises(ConfigurationError, match="does not match model"):
            rank_candidates(query, index, model, other, PipelineContext())


class TestRankCurve:
    def res(self, position):
        return RankResult(query_key=("s", "u"), ranked=(), position=position)

    def test_counting(self):
        results = [self.res(1), self.res(2), self.res(None)]
        points = rank_curve(results, top_k=4)
        assert points == [(1, pytest.approx(1 / 3)),
                          (2, pytest.approx(2 / 3)),
                          (3, pytest.approx(2 / 3)),
                          (4, pytest.approx(2 / 3))]

    def test_monotone_nondecreasing(self):
        results = [self.res(p) for p in (1, 3, 3, 7, None, 2)]
        points = rank_curve(results, top_k=10)
        fractions = [f for _, f in points]
        assert fractions == sorted(fractions)
        assert fractions[-1] == pytest.approx(5 / 6)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rank_curve([])


class TestCsvIo:
    def test_eval_csv_layout(self, tmp_path):
        reports = [EvalReport(kind="nb", k=10, seed=0, tp=3, fp=1, tn=4,
                              fn=2)]
        path = tmp_path / "evaluation.csv"
        write_eval_csv(path, reports)
        lines = path.read_text().splitlines()
        assert lines[0] == "classifier,accuracy,precision,recall,f1"
        assert lines[1] == "nb,0.7,0.75,0.6," + repr(2 * 0.75 * 0.6 / 1.35)

    def test_subsets_csv_layout(self, tmp_path):
        cfg = MetricConfig.from_config_id(NAME_ID)
        path = tmp_path / "subsets.csv"
        write_subsets_csv(path, [(cfg, 0.875)])
        lines = path.read_text().splitlines()
        assert lines[0] == "config_id,accuracy"
        assert lines[1] == f"{NAME_ID},0.875"

    def test_rank_results_round_trip(self, tmp_path):
        results = [RankResult(query_key=("twtr", "a"), ranked=(),
                              position=1),
                   RankResult(query_key=("twtr", "b"), ranked=(),
                              position=None)]
        path = tmp_path / "ranks.csv"
        write_rank_results_csv(path, results)
        lines = path.read_text().splitlines()
        assert lines[0] == "service,userid,position"
        assert lines[2] == "twtr,b,"
        loaded = read_rank_results_csv(path)
        assert [(r.query_key, r.position) for r in loaded] == \
            [(("twtr", "a"), 1), (("twtr", "b"), None)]

    def test_rank_results_header_check(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ValueError, match="expected header"):
            read_rank_results_csv(path)

    def test_curve_csv_layout(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv(path, [(1, 1 / 3), (2, 2 / 3)])
        lines = path.read_text().splitlines()
        assert lines[0] == "r,fraction"
        assert lines[1] == f"1,{1 / 3!r}"
