import numpy as np
from django.test import SimpleTestCase

from ..embeddings import load_embeddings, segment_greedy, to_sentence_matrix, tokenize
from ..exceptions import FormatError, RankingArgumentError
from .factories import TempDirMixin, embedding_text


class LoadEmbeddingsTests(TempDirMixin, SimpleTestCase):
    def test_two_entries(self):
        path = self.write('vectors.txt', 'cat 1 2 3\ndog 4 5 6\n')
        table = load_embeddings(path)
        self.assertEqual(table.dim, 3)
        self.assertEqual(len(table), 2)
        np.testing.assert_array_equal(table.lookup('dog'), [4.0, 5.0, 6.0])

    def test_header_line(self):
        path = self.write('vectors.txt', embedding_text(words=('a', 'b', 'c'), dim=5, header=True))
        table = load_embeddings(path)
        self.assertEqual((len(table), table.dim), (3, 5))

    def test_multiword_keys(self):
        path = self.write('vectors.txt', 'hello_world 1 1\npeace 0 1\n')
        self.assertGreaterEqual(load_embeddings(path).max_ngram, 2)

    def test_unknown_vector_is_seeded(self):
        path = self.write('vectors.txt', embedding_text())
        first = load_embeddings(path, seed=7).unk_vector
        np.testing.assert_array_equal(first, load_embeddings(path, seed=7).unk_vector)
        self.assertFalse(np.array_equal(first, load_embeddings(path, seed=8).unk_vector))
        self.assertTrue(np.all(np.abs(first) <= 0.25))

    def test_ragged_line_reports_line_number(self):
        path = self.write('vectors.txt', 'cat 1 2 3\ndog 4 5 6\nfox 7 8\n')
        with self.assertRaisesMessage(FormatError, 'line 3'):
            load_embeddings(path)

    def test_empty_file(self):
        with self.assertRaises(FormatError):
            load_embeddings(self.write('vectors.txt', ''))

    def test_invalid_utf8(self):
        path = self.write_bytes('vectors.txt', b'cat 0.1 0.2\ncaf\xe9 0.1 0.2\n')
        with self.assertRaisesMessage(FormatError, 'line 2'):
            load_embeddings(path)

    def test_two_integers_with_short_lines_are_entries(self):
        table = load_embeddings(self.write('vectors.txt', '1 5\n2 6\n'))
        self.assertEqual((len(table), table.dim), (2, 1))
        np.testing.assert_array_equal(table.lookup('1'), [5.0])

    def test_single_line_of_two_integers_is_an_entry(self):
        table = load_embeddings(self.write('vectors.txt', '1 5\n'))
        self.assertEqual((len(table), table.dim), (1, 1))
        np.testing.assert_array_equal(table.lookup('1'), [5.0])

    def test_one_dimensional_header_must_match_count(self):
        table = load_embeddings(self.write('vectors.txt', '2 1\ncat 0.5\ndog 0.25\n'))
        self.assertEqual(sorted(table.entries), ['cat', 'dog'])
        table = load_embeddings(self.write('vectors.txt', '7 1\ncat 0.5\ndog 0.25\n'))
        self.assertEqual(sorted(table.entries), ['7', 'cat', 'dog'])

    def test_entries_are_read_only(self):
        table = load_embeddings(self.write('vectors.txt', 'cat 1 2\n'))
        with self.assertRaises(ValueError):
            table.lookup('cat')[0] = 5.0


class TokenizeTests(SimpleTestCase):
    def test_punctuation_and_case(self):
        self.assertEqual(tokenize('Hello, World!'), ['hello', 'world'])

    def test_empty(self):
        self.assertEqual(tokenize(''), [])

    def test_multiword_phrase_stays_split(self):
        self.assertEqual(tokenize('la carte'), ['la', 'carte'])

    def test_unicode_quotes(self):
        self.assertEqual(tokenize('“quoted” -- text'), ['quoted', 'text'])


class SegmentGreedyTests(TempDirMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        self.table = load_embeddings(self.write(
            'vectors.txt', 'hello_world 1 0\npeace 0 1\nworld_peace 1 1\nworld 0.5 0.5\n',
        ))

    def test_longest_match_first(self):
        self.assertEqual(
            segment_greedy(['hello', 'world', 'peace'], self.table), ['hello_world', 'peace']
        )

    def test_empty(self):
        self.assertEqual(segment_greedy([], self.table), [])

    def test_no_hits(self):
        self.assertEqual(segment_greedy(['foo', 'bar'], self.table), ['foo', 'bar'])


class SentenceMatrixTests(TempDirMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        self.table = load_embeddings(self.write('vectors.txt', 'a 1 2\nb 3 4\nc 5 6\n'))

    def test_empty_text(self):
        sentence = to_sentence_matrix('', self.table)
        self.assertEqual(sentence.shape, (100, 2))
        self.assertEqual(sentence.valid_rows, 0)
        self.assertFalse(sentence.matrix.any())

    def test_truncation(self):
        sentence = to_sentence_matrix(' '.join(['a'] * 150), self.table)
        self.assertEqual(sentence.valid_rows, 100)
        self.assertEqual(sentence.shape, (100, 2))

    def test_rows_are_table_vectors(self):
        sentence = to_sentence_matrix('a b c', self.table)
        np.testing.assert_array_equal(sentence.matrix[:3], [[1, 2], [3, 4], [5, 6]])
        self.assertFalse(sentence.matrix[3:].any())

    def test_unknown_words_use_unknown_vector(self):
        sentence = to_sentence_matrix('zebra', self.table, trunc_len=4)
        np.testing.assert_array_equal(sentence.matrix[0], self.table.unk_vector)

    def test_invalid_truncation(self):
        with self.assertRaises(RankingArgumentError):
            to_sentence_matrix('a', self.table, trunc_len=0)
