import itertools
import math

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from ..data import Document, FoldPlan, QueryGroup
from ..evaluation import (
    MetricTable,
    QueryRecord,
    cross_validate,
    dcg_at_k,
    evaluate_fold,
    ndcg_at_k,
    paired_values,
    read_query_records,
    significance_table,
    to_records,
    wilcoxon_two_tailed,
    write_query_records,
)
from ..exceptions import (
    PairingError,
    RankingArgumentError,
    TrainingError,
    UndefinedTestError,
)
from ..pipeline import FEATURE_MODE, OracleMethod, OracleScorer, RunConfig, TrainedMethod
from .factories import TempDirMixin, feature_groups, ohsumed_groups


class FixedScorer:
    def __init__(self, scores):
        self.scores = scores

    def score_documents(self, group):
        return np.asarray(self.scores, dtype=float)


class RandomScorer:
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def score_documents(self, group):
        return self.rng.normal(size=len(group.docs))


class FailingMethod:
    name = 'Failing'

    def fit(self, train_groups, validation_groups, fold=None):
        raise RankingArgumentError('no luck')


def group_with_grades(grades, query_id=1):
    docs = tuple(Document(doc_id=str(i), grade=g) for i, g in enumerate(grades))
    return QueryGroup(query_id=query_id, docs=docs)


def brute_force_p_value(x, y):
    diffs = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    diffs = diffs[diffs != 0]
    ranks = stats.rankdata(np.abs(diffs))
    observed = min(ranks[diffs > 0].sum(), ranks[diffs < 0].sum())
    extreme = 0
    for signs in itertools.product((1, -1), repeat=len(ranks)):
        signs = np.array(signs)
        w_plus = ranks[signs > 0].sum()
        w_minus = ranks[signs < 0].sum()
        if min(w_plus, w_minus) <= observed + 1e-9:
            extreme += 1
    return extreme / 2 ** len(ranks)


class NdcgTests(SimpleTestCase):
    def test_perfect_ranking(self):
        for k in range(1, 5):
            self.assertEqual(ndcg_at_k([2, 2, 1, 0], [0, 1, 2, 2], k), 1.0)

    def test_all_zero_grades(self):
        self.assertEqual(ndcg_at_k([0, 0, 0], [0, 0, 0], 3), 0.0)

    def test_hand_computed(self):
        self.assertAlmostEqual(dcg_at_k([0, 2], 2), 3 / math.log2(3), places=12)
        self.assertAlmostEqual(ndcg_at_k([0, 2], [2, 0], 2), 0.6309, delta=1e-4)

    def test_cutoff_beyond_list(self):
        self.assertEqual(ndcg_at_k([1, 0], [1, 0], 10), 1.0)

    def test_invalid_cutoff(self):
        with self.assertRaises(RankingArgumentError):
            ndcg_at_k([1], [1], 0)

    def test_values_lie_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            grades = rng.integers(0, 3, size=rng.integers(1, 12))
            ranked = rng.permutation(grades)
            for k in range(1, 11):
                self.assertTrue(0.0 <= ndcg_at_k(ranked, grades, k) <= 1.0 + 1e-12)

    def test_swapping_an_adjacent_inversion_never_hurts(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            grades = list(rng.permutation(rng.integers(0, 3, size=8)))
            for position in range(len(grades) - 1):
                if grades[position] >= grades[position + 1]:
                    continue
                swapped = list(grades)
                swapped[position], swapped[position + 1] = swapped[position + 1], swapped[position]
                for k in range(1, 11):
                    self.assertGreaterEqual(
                        ndcg_at_k(swapped, grades, k) + 1e-12, ndcg_at_k(grades, grades, k)
                    )

    def test_permuting_equal_grades_keeps_value(self):
        # documents 0 and 2 share grade 1; exchanging their scores must not matter
        group = group_with_grades([1, 2, 1, 0, 2])
        scores = [0.9, 0.1, 0.4, 0.7, 0.3]
        exchanged = [0.4, 0.1, 0.9, 0.7, 0.3]
        np.testing.assert_array_equal(
            evaluate_fold(FixedScorer(scores), [group])[1],
            evaluate_fold(FixedScorer(exchanged), [group])[1],
        )


class EvaluateFoldTests(SimpleTestCase):
    def test_oracle_is_perfect(self):
        groups = [group_with_grades([0, 2, 1, 0, 2], 1), group_with_grades([1, 0], 2)]
        per_query = evaluate_fold(OracleScorer(), groups)
        self.assertEqual(list(per_query), [1, 2])
        for values in per_query.values():
            np.testing.assert_array_equal(values, np.ones(10))

    def test_anti_oracle(self):
        per_query = evaluate_fold(FixedScorer([0.0, 1.0]), [group_with_grades([2, 0])])
        self.assertEqual(per_query[1][0], 0.0)

    def test_empty_group_is_skipped(self):
        with self.assertLogs('ConvRankToolkit.evaluation', 'WARNING'):
            per_query = evaluate_fold(OracleScorer(), [QueryGroup(query_id=4, docs=())])
        self.assertEqual(len(per_query), 0)

    def test_random_scorer_matches_permutation_average(self):
        grades = [2, 1, 0, 1]
        group = group_with_grades(grades)
        exhaustive = np.mean([
            [ndcg_at_k([grades[i] for i in order], grades, k) for k in range(1, 5)]
            for order in itertools.permutations(range(4))
        ], axis=0)
        samples = np.array([
            evaluate_fold(RandomScorer(seed), [group], k_max=4)[1] for seed in range(1000)
        ])
        standard_error = samples.std(axis=0) / math.sqrt(len(samples))
        self.assertTrue(np.all(np.abs(samples.mean(axis=0) - exhaustive) < 4 * standard_error + 1e-12))


class RecordTests(TempDirMixin, SimpleTestCase):
    def test_table_averages_over_queries(self):
        records = to_records({1: np.array([1.0, 0.5]), 2: np.array([0.0, 0.5])}, fold=1, method='M')
        table = MetricTable.from_records(records, k_max=2)
        np.testing.assert_array_equal(table.rows['M'], [0.5, 0.5])
        self.assertEqual(table.render(), 'method\tNDCG@1\tNDCG@2\nM\t0.500000\t0.500000\n')

    def test_records_survive_a_file(self):
        records = to_records({3: np.array([0.1234567890123, 1.0])}, fold=2, method='RankNet')
        write_query_records(records, self.path('records.tsv'))
        self.assertEqual(read_query_records(self.path('records.tsv')), records)

    def test_wrong_header(self):
        path = self.write('records.tsv', 'a\tb\n1\t2\n')
        with self.assertRaises(PairingError):
            read_query_records(path)


class CrossValidateTests(SimpleTestCase):
    def test_oracle_table_is_all_ones(self):
        groups = [group_with_grades([0, 1, 2], query_id) for query_id in range(1, 107)]
        result = cross_validate(OracleMethod(), groups, FoldPlan.ohsumed())
        np.testing.assert_array_equal(result.table.rows['Oracle'], np.ones(10))
        self.assertEqual(len({r.query_id for r in result.records}), 106)

    def trained(self):
        config = RunConfig(mode=FEATURE_MODE, epochs=3, lr=0.01, batch_size=8, seed=2)
        return TrainedMethod(config, input_dim=3)

    def test_rerun_is_identical(self):
        groups = feature_groups(n_queries=10)
        plan = FoldPlan.contiguous(range(1, 11))
        first = cross_validate(self.trained(), groups, plan)
        second = cross_validate(self.trained(), groups, plan)
        self.assertEqual(first.table.render(), second.table.render())
        self.assertEqual(first.records, second.records)
        self.assertEqual(sorted(first.histories), [1, 2, 3, 4, 5])

    def test_parallel_folds_match_serial_run(self):
        groups = feature_groups(n_queries=10)
        plan = FoldPlan.contiguous(range(1, 11))
        serial = cross_validate(self.trained(), groups, plan, workers=1)
        parallel = cross_validate(self.trained(), groups, plan, workers=2)
        self.assertEqual(serial.records, parallel.records)

    def test_fold_errors_name_the_fold(self):
        with self.assertRaisesMessage(TrainingError, 'fold 2: no luck'):
            cross_validate(FailingMethod(), ohsumed_groups(), FoldPlan.ohsumed(), folds=(2,))


class WilcoxonTests(SimpleTestCase):
    def test_identical_samples(self):
        with self.assertRaises(UndefinedTestError):
            wilcoxon_two_tailed([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])

    def test_constant_shift(self):
        x = np.linspace(0.1, 0.9, 10)
        result = wilcoxon_two_tailed(x + 0.05, x)
        self.assertAlmostEqual(result.p_value, 2 / 1024, delta=1e-12)
        self.assertEqual(result.statistic, 0.0)
        self.assertTrue(result.exact)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=15), rng.normal(size=15)
        self.assertEqual(wilcoxon_two_tailed(x, y).p_value, wilcoxon_two_tailed(y, x).p_value)

    def test_zero_differences_are_dropped(self):
        result = wilcoxon_two_tailed([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0])
        self.assertEqual(result.n_effective, 3)

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(1)
        for n in range(1, 13):
            # rounding creates tied absolute differences
            x = np.round(rng.normal(size=n), 1)
            y = np.round(rng.normal(size=n), 1)
            if np.all(x == y):
                continue
            self.assertAlmostEqual(
                wilcoxon_two_tailed(x, y).p_value, brute_force_p_value(x, y), delta=1e-12,
            )

    def test_normal_approximation_for_large_samples(self):
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=40), rng.normal(loc=0.3, size=40)
        result = wilcoxon_two_tailed(x, y)
        self.assertFalse(result.exact)
        reference = stats.wilcoxon(x, y, correction=True, method='approx')
        self.assertAlmostEqual(result.p_value, reference.pvalue, delta=1e-10)
        self.assertEqual(result.statistic, reference.statistic)

    def test_length_mismatch(self):
        with self.assertRaises(RankingArgumentError):
            wilcoxon_two_tailed([1.0, 2.0], [1.0])


class SignificanceTests(SimpleTestCase):
    def records(self, method, values, k=10):
        return [QueryRecord(query_id=i, fold=1, method=method, k=k, value=v) for i, v in enumerate(values)]

    def test_unmatched_queries(self):
        a = self.records('A', [0.1, 0.2, 0.3])
        b = self.records('B', [0.1, 0.2])
        with self.assertRaisesMessage(PairingError, '[2]'):
            paired_values(a, b)

    def test_every_pair_of_methods(self):
        base = np.linspace(0.1, 0.9, 10)
        table = significance_table({
            'A': self.records('A', base + 0.05),
            'B': self.records('B', base),
            'C': self.records('C', base),
        })
        self.assertEqual(list(table), [('A', 'B'), ('A', 'C'), ('B', 'C')])
        self.assertAlmostEqual(table[('A', 'B')].p_value, 2 / 1024, delta=1e-12)
        self.assertIsNone(table[('B', 'C')])
