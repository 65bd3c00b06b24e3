"""
Pretrained word vectors and the text -> sentence matrix conversion.

Embedding files are plain text: an optional ``count dim`` header, then one
``key x1 ... xd`` line per entry. Multiword keys join their words with an
underscore (``hello_world``), which is what lets the greedy segmentation
pick bigrams and trigrams over single words.
"""
import logging
import string
import unicodedata
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .exceptions import FormatError, RankingArgumentError
from .numerics import DTYPE
from .textfiles import read_lines

logger = logging.getLogger(__name__)

NGRAM_SEPARATOR = '_'
UNKNOWN_SCALE = 0.25
DEFAULT_TRUNCATION = 100


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: MappingProxyType
    max_ngram: int
    unk_vector: np.ndarray

    def __contains__(self, key):
        return key in self.entries

    def __len__(self):
        return len(self.entries)

    def lookup(self, key):
        return self.entries.get(key, self.unk_vector)


@dataclass(frozen=True)
class SentenceMatrix:
    matrix: np.ndarray
    valid_rows: int

    @property
    def shape(self):
        return self.matrix.shape


def _frozen(vector):
    vector = np.asarray(vector, dtype=DTYPE)
    vector.setflags(write=False)
    return vector


def _ngram_length(key):
    return max(1, sum(1 for word in key.split(NGRAM_SEPARATOR) if word))


def _parse_header(parts):
    if len(parts) != 2:
        return None
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        return None


def _parse_entry(parts, dim, lineno):
    key, raw = parts[0], parts[1:]
    if len(raw) != dim or dim == 0:
        raise FormatError(f'expected {dim} values for {key!r}, got {len(raw)}', line=lineno)
    try:
        return key, _frozen([float(value) for value in raw])
    except ValueError:
        raise FormatError(f'non-numeric value for {key!r}', line=lineno) from None


def load_embeddings(path, seed=0):
    """
    Read an embedding file; the unknown-word vector is drawn once from ``seed``.

    A first line of two integers ``count dim`` is a header only when the next
    line carries ``dim`` values and, for ``dim`` 1, when the file then holds
    ``count`` entries. Otherwise it is an ordinary one-value entry.
    """
    entries = {}
    dim = None
    candidate = None
    header = None
    for lineno, line in read_lines(path):
        parts = line.split()
        if not parts:
            continue
        if dim is None and candidate is None and _parse_header(parts) is not None:
            candidate = (lineno, parts)
            continue
        if candidate is not None:
            declared_dim = _parse_header(candidate[1])[1]
            if len(parts) - 1 == declared_dim:
                header, dim = candidate, declared_dim
            else:
                dim = 1
                key, vector = _parse_entry(candidate[1], dim, candidate[0])
                entries[key] = vector
            candidate = None
        if dim is None:
            dim = len(parts) - 1
        key, vector = _parse_entry(parts, dim, lineno)
        if key in entries:
            logger.warning('duplicate embedding key %r on line %d', key, lineno)
        entries[key] = vector

    if candidate is not None:
        # lone line of two integers
        dim = 1
        key, vector = _parse_entry(candidate[1], dim, candidate[0])
        entries[key] = vector
    elif header is not None:
        count, declared_dim = _parse_header(header[1])
        if declared_dim == 1 and count != len(entries):
            key, vector = _parse_entry(header[1], dim, header[0])
            entries = {key: vector, **entries}
        elif count != len(entries):
            logger.warning('embedding header declares %d entries, file has %d', count, len(entries))

    if not entries:
        raise FormatError(f'embedding file {path} has no entries')

    rng = np.random.default_rng(seed)
    unk_vector = _frozen(rng.uniform(-UNKNOWN_SCALE, UNKNOWN_SCALE, dim))
    max_ngram = max(_ngram_length(key) for key in entries)
    logger.info('loaded %d embeddings of dim %d (max n-gram %d)', len(entries), dim, max_ngram)
    return EmbeddingTable(
        dim=dim,
        entries=MappingProxyType(entries),
        max_ngram=max_ngram,
        unk_vector=unk_vector,
    )


def _is_punctuation(char):
    return char in string.punctuation or unicodedata.category(char).startswith('P')


def _strip_punctuation(token):
    start, end = 0, len(token)
    while start < end and _is_punctuation(token[start]):
        start += 1
    while end > start and _is_punctuation(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text):
    """Lowercase, split on whitespace, strip edge punctuation, drop empties."""
    tokens = (_strip_punctuation(token) for token in text.lower().split())
    return [token for token in tokens if token]


def segment_greedy(tokens, table):
    """
    Left-to-right longest-match segmentation into table keys.

    Words with no matching n-gram are emitted as-is (and later map to the
    unknown vector).
    """
    keys = []
    position = 0
    while position < len(tokens):
        longest = min(table.max_ngram, len(tokens) - position)
        for size in range(longest, 0, -1):
            key = NGRAM_SEPARATOR.join(tokens[position:position + size])
            if key in table:
                keys.append(key)
                position += size
                break
        else:
            keys.append(tokens[position])
            position += 1
    return keys


def to_sentence_matrix(text, table, trunc_len=DEFAULT_TRUNCATION):
    if trunc_len < 1:
        raise RankingArgumentError(f'truncation length must be >= 1, got {trunc_len}')
    keys = segment_greedy(tokenize(text), table)[:trunc_len]
    matrix = np.zeros((trunc_len, table.dim), dtype=DTYPE)
    for row, key in enumerate(keys):
        matrix[row] = table.lookup(key)
    return SentenceMatrix(matrix=matrix, valid_rows=len(keys))
