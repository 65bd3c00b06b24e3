"""
Dataset parsing: raw OHSUMED (MEDLINE-tagged documents and queries, graded
judgments), LETOR feature files, query groups and the five-fold plan.
"""
import logging
import re
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import (
    ConfigError,
    FoldAssignmentError,
    FormatError,
    LabelError,
    RankingArgumentError,
)
from .ranker import grade_value
from .textfiles import read_lines

logger = logging.getLogger(__name__)

N_FOLDS = 5
OHSUMED_FOLD_RANGES = ((1, 21), (22, 42), (43, 63), (64, 84), (85, 106))

TAG_LINE = re.compile(r'^\.([A-Z])(?:\s+(.*?))?\s*$')
LETOR_COMMENT_DOC = re.compile(r'doc(?:id)?\s*=\s*(\S+)')


@dataclass(frozen=True)
class Judgment:
    query_id: int
    doc_id: str
    grade: int


@dataclass(frozen=True)
class Document:
    doc_id: str
    grade: int
    text: Optional[str] = None
    features: Optional[np.ndarray] = None
    sentence: object = None

    @property
    def payload(self):
        if self.sentence is not None:
            return self.sentence
        if self.features is not None:
            return self.features
        return self.text


@dataclass(frozen=True)
class QueryGroup:
    query_id: int
    docs: tuple
    query_text: Optional[str] = None
    query_sentence: object = None

    @property
    def query_payload(self):
        if self.query_sentence is not None:
            return self.query_sentence
        return self.query_text

    @property
    def grades(self):
        return [doc.grade for doc in self.docs]


class TaggedRecord(NamedTuple):
    line: int
    seq: Optional[str]
    fields: dict


def _read_tagged_records(path):
    """
    Yield one :class:`TaggedRecord` per ``.I`` record of a MEDLINE-style file.

    A tag's value is the rest of its own line, or else the following
    non-tag lines joined by spaces. A file ending on a tag with no value is
    truncated.
    """
    record = None
    pending = None
    pending_line = None

    for lineno, raw in read_lines(path):
        line = raw.rstrip('\n')
        match = TAG_LINE.match(line)
        if match:
            tag, inline = match.group(1), match.group(2)
            pending = None
            if tag == 'I':
                if record is not None:
                    yield record
                record = TaggedRecord(line=lineno, seq=inline, fields={})
                continue
            if record is None:
                raise FormatError(f'.{tag} outside of a record', line=lineno)
            record.fields[tag] = inline or ''
            if not inline:
                pending, pending_line = tag, lineno
        elif record is not None and pending is not None and line.strip():
            record.fields[pending] = f'{record.fields[pending]} {line.strip()}'.strip()

    if record is not None:
        if pending is not None and not record.fields[pending]:
            raise FormatError(
                f'record {record.seq!r} truncated after .{pending}', line=pending_line
            )
        yield record


def _join_fields(*values):
    return ' '.join(value for value in values if value)


def parse_ohsumed_docs(path):
    """Map each ``.U`` identifier to title + abstract."""
    documents = {}
    missing = 0
    for record in _read_tagged_records(path):
        doc_id = record.fields.get('U')
        if not doc_id:
            missing += 1
            continue
        if doc_id in documents:
            logger.warning(
                'duplicate document %s at line %d, keeping the last one', doc_id, record.line
            )
        documents[doc_id] = _join_fields(record.fields.get('T'), record.fields.get('W'))
    if missing:
        logger.warning('skipped %d records without a .U identifier', missing)
    return documents


def parse_ohsumed_queries(path):
    """Map the sequential ``.I`` query number to patient description + information need."""
    queries = {}
    for record in _read_tagged_records(path):
        try:
            query_id = int(record.seq)
        except (TypeError, ValueError):
            raise FormatError(
                f'query record has non-numeric id {record.seq!r}', line=record.line
            ) from None
        queries[query_id] = _join_fields(record.fields.get('T'), record.fields.get('W'))
    return queries


def parse_judgments(path):
    """
    Read ``query_id doc_id grade`` lines; repeated judgments of the same
    pair collapse to the highest grade.
    """
    grades = OrderedDict()
    for lineno, line in read_lines(path):
        parts = line.split()
        if not parts or parts[0].startswith('#'):
            continue
        if len(parts) < 3:
            raise FormatError(f'expected "query doc grade", got {line.strip()!r}', line=lineno)
        try:
            query_id = int(parts[0])
            grade = grade_value(parts[2])
        except ValueError:
            raise FormatError(f'non-numeric query id {parts[0]!r}', line=lineno) from None
        except LabelError as exc:
            raise FormatError(str(exc), line=lineno) from None
        key = (query_id, parts[1])
        grades[key] = max(grade, grades.get(key, grade))
    return [Judgment(query_id=q, doc_id=d, grade=g) for (q, d), g in grades.items()]


def _parse_letor_line(line, lineno):
    body, _, comment = line.partition('#')
    parts = body.split()
    if len(parts) < 2 or not parts[1].startswith('qid:'):
        raise FormatError('expected "<rel> qid:<id> ..."', line=lineno)
    try:
        grade = int(parts[0])
    except ValueError:
        raise FormatError(f'non-integer relevance {parts[0]!r}', line=lineno) from None
    if grade not in (0, 1, 2):
        raise FormatError(f'relevance {grade} outside {{0, 1, 2}}', line=lineno)
    try:
        query_id = int(parts[1][4:])
    except ValueError:
        raise FormatError(f'bad query id {parts[1]!r}', line=lineno) from None

    features = {}
    last = 0
    for item in parts[2:]:
        index, sep, value = item.partition(':')
        try:
            index = int(index)
            value = float(value)
        except ValueError:
            raise FormatError(f'bad feature {item!r}', line=lineno) from None
        if not sep or index <= last:
            raise FormatError(f'feature index {index} does not increase', line=lineno)
        features[index] = value
        last = index

    match = LETOR_COMMENT_DOC.search(comment)
    doc_id = match.group(1) if match else None
    return query_id, grade, features, doc_id


def parse_letor(path):
    """Group LETOR lines by qid; vectors are dense at the largest index seen."""
    rows = OrderedDict()
    dim = 0
    for lineno, line in read_lines(path):
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        query_id, grade, features, doc_id = _parse_letor_line(line, lineno)
        dim = max([dim, *features])
        bucket = rows.setdefault(query_id, [])
        doc_id = doc_id or f'{query_id}-{len(bucket) + 1}'
        if any(existing[0] == doc_id for existing in bucket):
            raise FormatError(f'duplicate document {doc_id} in query {query_id}', line=lineno)
        bucket.append((doc_id, grade, features))

    groups = []
    for query_id, bucket in rows.items():
        docs = []
        for doc_id, grade, features in bucket:
            vector = np.zeros(dim)
            for index, value in features.items():
                vector[index - 1] = value
            docs.append(Document(doc_id=doc_id, grade=grade, features=vector))
        groups.append(QueryGroup(query_id=query_id, docs=tuple(docs)))
    logger.info('parsed %d LETOR queries with %d features', len(groups), dim)
    return groups


def write_letor(groups, path):
    with open(path, 'w', encoding='utf-8') as handle:
        for group in groups:
            for doc in group.docs:
                features = ' '.join(
                    f'{index}:{value!r}' for index, value in enumerate(doc.features.tolist(), start=1)
                )
                handle.write(f'{doc.grade} qid:{group.query_id} {features} #docid = {doc.doc_id}\n')


def build_text_groups(queries, documents, judgments):
    """Raw-mode groups of judged documents, in ascending query id order."""
    by_query = OrderedDict()
    missing_docs = 0
    for judgment in judgments:
        if judgment.doc_id not in documents:
            missing_docs += 1
            continue
        by_query.setdefault(judgment.query_id, []).append(Document(
            doc_id=judgment.doc_id,
            grade=judgment.grade,
            text=documents[judgment.doc_id],
        ))
    if missing_docs:
        logger.warning('skipped %d judgments of documents missing from the collection', missing_docs)

    groups = []
    for query_id in sorted(by_query):
        if query_id not in queries:
            logger.warning('skipped judgments of unknown query %d', query_id)
            continue
        groups.append(QueryGroup(
            query_id=query_id,
            docs=tuple(by_query[query_id]),
            query_text=queries[query_id],
        ))
    return groups


@dataclass(frozen=True)
class FoldPlan:
    ranges: tuple
    strict: bool = True

    @classmethod
    def ohsumed(cls):
        return cls(ranges=OHSUMED_FOLD_RANGES)

    @classmethod
    def contiguous(cls, query_ids):
        """Five blocks of consecutive ids, for collections other than OHSUMED."""
        ids = sorted(set(query_ids))
        if len(ids) < N_FOLDS:
            raise ConfigError(f'need at least {N_FOLDS} queries for {N_FOLDS} folds, got {len(ids)}')
        blocks = np.array_split(np.array(ids), N_FOLDS)
        return cls(ranges=tuple((int(b[0]), int(b[-1])) for b in blocks))

    def fold_of(self, query_id):
        for index, (low, high) in enumerate(self.ranges, start=1):
            if low <= query_id <= high:
                return index
        raise FoldAssignmentError(f'query {query_id} lies outside every fold {list(self.ranges)}')

    def query_ids(self, fold):
        low, high = self.ranges[fold - 1]
        return range(low, high + 1)


class FoldSplit(NamedTuple):
    train: list
    validation: list
    test: list


def make_folds(groups, plan, fold_k):
    """Test = fold k, validation = the next fold cyclically, train = the rest."""
    if fold_k not in range(1, N_FOLDS + 1):
        raise RankingArgumentError(f'fold must be in 1..{N_FOLDS}, got {fold_k}')
    validation_k = fold_k % N_FOLDS + 1
    split = FoldSplit(train=[], validation=[], test=[])
    for group in groups:
        fold = plan.fold_of(group.query_id)
        if fold == fold_k:
            split.test.append(group)
        elif fold == validation_k:
            split.validation.append(group)
        else:
            split.train.append(group)
    return split


def min_max_normalize(groups):
    """Per-query, per-feature scaling to [0, 1]; constant features become 0."""
    normalized = []
    for group in groups:
        if not group.docs:
            normalized.append(group)
            continue
        matrix = np.stack([doc.features for doc in group.docs])
        low = matrix.min(axis=0)
        span = matrix.max(axis=0) - low
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (matrix - low) / safe, 0.0)
        docs = tuple(replace(doc, features=row) for doc, row in zip(group.docs, scaled))
        normalized.append(replace(group, docs=docs))
    return normalized
