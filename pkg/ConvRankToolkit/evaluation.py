"""
NDCG@k, the cross-validation driver and the two-tailed Wilcoxon
signed-rank test used to compare methods query by query.
"""
import csv
import io
import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import make_folds
from .exceptions import (
    PairingError,
    RankingArgumentError,
    RankingError,
    TrainingError,
    UndefinedTestError,
)
from .ordering import rank_by_score
from .textfiles import read_lines

logger = logging.getLogger(__name__)

K_MAX = 10
EXACT_LIMIT = 20
RECORD_FIELDS = ('query_id', 'fold', 'method', 'k', 'value')


def dcg_at_k(grades, k):
    grades = np.asarray(list(grades)[:k], dtype=float)
    if grades.size == 0:
        return 0.0
    discounts = np.log2(np.arange(2, grades.size + 2))
    return float(np.sum((2.0 ** grades - 1.0) / discounts))


def ndcg_at_k(ranked_grades, ideal_grades, k):
    """DCG@k / IDCG@k with gain 2^rel - 1; 0 when every grade is 0."""
    if k < 1:
        raise RankingArgumentError(f'NDCG cutoff must be >= 1, got {k}')
    idcg = dcg_at_k(sorted(ideal_grades, reverse=True), k)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(ranked_grades, k) / idcg


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    fold: int
    method: str
    k: int
    value: float


@dataclass
class MetricTable:
    """Method name -> mean NDCG@1..k_max over every test query of every fold."""
    k_max: int = K_MAX
    rows: dict = field(default_factory=OrderedDict)

    @classmethod
    def from_records(cls, records, k_max=K_MAX):
        values = OrderedDict()
        for record in records:
            per_k = values.setdefault(record.method, [[] for _ in range(k_max)])
            if 1 <= record.k <= k_max:
                per_k[record.k - 1].append(record.value)
        table = cls(k_max=k_max)
        for method, per_k in values.items():
            table.rows[method] = np.array([np.mean(v) if v else 0.0 for v in per_k])
        return table

    def render(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter='\t', lineterminator='\n')
        writer.writerow(['method', *(f'NDCG@{k}' for k in range(1, self.k_max + 1))])
        for method, values in self.rows.items():
            writer.writerow([method, *(f'{value:.6f}' for value in values)])
        return buffer.getvalue()

    def write(self, path):
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(self.render())


def write_query_records(records, path):
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, delimiter='\t', lineterminator='\n')
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([r.query_id, r.fold, r.method, r.k, repr(float(r.value))])


def read_query_records(path):
    records = []
    reader = csv.DictReader((line for _, line in read_lines(path)), delimiter='\t')
    if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
        raise PairingError(f'{path} is not a per-query record file')
    for row in reader:
        records.append(QueryRecord(
            query_id=int(row['query_id']),
            fold=int(row['fold']),
            method=row['method'],
            k=int(row['k']),
            value=float(row['value']),
        ))
    return records


def evaluate_fold(scorer, groups, k_max=K_MAX):
    """
    Score every judged document of each test query, rank by score and
    return ``query_id -> NDCG@1..k_max``.
    """
    per_query = OrderedDict()
    for group in groups:
        if not group.docs:
            logger.warning('skipping query %s with no judged documents', group.query_id)
            continue
        scores = scorer.score_documents(group)
        ranked = [group.docs[i].grade for i in rank_by_score(scores)]
        per_query[group.query_id] = np.array([
            ndcg_at_k(ranked, group.grades, k) for k in range(1, k_max + 1)
        ])
    return per_query


def to_records(per_query, fold, method):
    return [
        QueryRecord(query_id=query_id, fold=fold, method=method, k=k, value=float(value))
        for query_id, values in per_query.items()
        for k, value in enumerate(values, start=1)
    ]


@dataclass
class CrossValidationResult:
    table: MetricTable
    records: list
    histories: dict = field(default_factory=dict)


def run_fold(method, groups, plan, fold, k_max=K_MAX):
    """Train on the fold's train split and evaluate on its test split."""
    split = make_folds(groups, plan, fold)
    try:
        fitted = method.fit(split.train, split.validation, fold)
    except RankingError as exc:
        raise TrainingError(f'fold {fold}: {exc}') from exc
    per_query = evaluate_fold(fitted.scorer, split.test, k_max)
    logger.info(
        'fold %d: %d test queries, mean NDCG@%d %.4f', fold, len(per_query), k_max,
        np.mean([v[-1] for v in per_query.values()]) if per_query else 0.0,
    )
    return fold, per_query, fitted.history


def cross_validate(method, groups, plan, folds=(1, 2, 3, 4, 5), k_max=K_MAX, workers=1):
    """
    Run every fold (concurrently when ``workers > 1``; each worker owns its
    model) and average NDCG@k over all test queries of all folds.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_fold, method, groups, plan, fold, k_max) for fold in folds]
            outcomes = [future.result() for future in futures]
    else:
        outcomes = [run_fold(method, groups, plan, fold, k_max) for fold in folds]

    records = []
    histories = {}
    for fold, per_query, history in outcomes:
        records.extend(to_records(per_query, fold, method.name))
        histories[fold] = history
    table = MetricTable.from_records(records, k_max)
    return CrossValidationResult(table=table, records=records, histories=histories)


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n_effective: int
    exact: bool


def _exact_p_value(ranks, statistic):
    """
    Share of the 2^n sign assignments whose min(W+, W-) is at most the
    observed one. Ranks are doubled so tied (half-integer) ranks stay exact.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for rank in doubled:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[:total + 1 - rank]
        counts = counts + shifted
    sums = np.arange(total + 1)
    extreme = np.minimum(sums, total - sums) <= int(round(2.0 * statistic))
    return float(counts[extreme].sum()) / float(2 ** ranks.size)


def _normal_p_value(ranks, abs_diffs, statistic):
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, ties = np.unique(abs_diffs, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
    z = max(abs(statistic - mean) - 0.5, 0.0) / np.sqrt(variance)
    return float(min(1.0, 2.0 * stats.norm.sf(z)))


def wilcoxon_two_tailed(x, y):
    """
    Paired two-tailed signed-rank test. Zero differences are dropped, ties
    share average ranks, W = min(W+, W-). Exact for up to 20 non-zero
    differences, normal approximation (tie and continuity corrected) above.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise RankingArgumentError(f'paired samples differ in length: {x.size} vs {y.size}')
    diffs = x - y
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        raise UndefinedTestError()
    abs_diffs = np.abs(diffs)
    ranks = stats.rankdata(abs_diffs)
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    statistic = min(w_plus, w_minus)
    if n <= EXACT_LIMIT:
        p_value = _exact_p_value(ranks, statistic)
    else:
        p_value = _normal_p_value(ranks, abs_diffs, statistic)
    return WilcoxonResult(statistic=statistic, p_value=min(p_value, 1.0), n_effective=n, exact=n <= EXACT_LIMIT)


def paired_values(records_a, records_b, k=K_MAX):
    """Align two record sets on query id at cutoff ``k``."""
    def by_query(records):
        return {r.query_id: r.value for r in records if r.k == k}

    a, b = by_query(records_a), by_query(records_b)
    missing = sorted(set(a) ^ set(b))
    if missing or not a:
        raise PairingError(f'records cannot be paired at k={k}; unmatched query ids: {missing}')
    ids = sorted(a)
    return np.array([a[i] for i in ids]), np.array([b[i] for i in ids])


def significance_table(records_by_method, k=K_MAX):
    """Wilcoxon result for every pair of methods (None when undefined)."""
    methods = list(records_by_method)
    table = OrderedDict()
    for i, first in enumerate(methods):
        for second in methods[i + 1:]:
            x, y = paired_values(records_by_method[first], records_by_method[second], k)
            try:
                table[(first, second)] = wilcoxon_two_tailed(x, y)
            except UndefinedTestError:
                table[(first, second)] = None
    return table
