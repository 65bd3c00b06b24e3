from django.core.management.base import CommandError

from ...data import Document, QueryGroup, min_max_normalize, parse_letor
from ...embeddings import load_embeddings, to_sentence_matrix
from ...modelfile import load_model
from ...ordering import rank_by_score
from ...pipeline import CONV_MODE
from ...textfiles import read_lines
from ..base import RankingCommand


def read_documents(path):
    """
    One document per non-empty line: ``doc_id<TAB>text``, or bare text
    whose id is its 1-based position.
    """
    docs = []
    for _, line in read_lines(path):
        line = line.rstrip('\n')
        if not line.strip():
            continue
        doc_id, tab, text = line.partition('\t')
        if not tab:
            doc_id, text = str(len(docs) + 1), line
        docs.append(Document(doc_id=doc_id, grade=0, text=text))
    return docs


class Command(RankingCommand):
    help = (
        'Score every document of a file once against a query and print them '
        'by descending score.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True)
        parser.add_argument('--documents', required=True, help=(
            'Text file with one document per line (conv mode) or a LETOR file (feature mode).'
        ))
        parser.add_argument('--query', default='', help='Query text (conv mode).')
        parser.add_argument('--embeddings', help='Word embedding file (required in conv mode).')

    def run(self, *args, **options):
        model, config = load_model(options['model'])

        if model.mode == CONV_MODE:
            if not options['embeddings']:
                raise CommandError('a convranknet model needs --embeddings')
            table = load_embeddings(options['embeddings'], seed=config.seed)
            docs = tuple(
                Document(
                    doc_id=doc.doc_id,
                    grade=doc.grade,
                    text=doc.text,
                    sentence=to_sentence_matrix(doc.text, table, config.trunc_len),
                )
                for doc in read_documents(options['documents'])
            )
            group = QueryGroup(
                query_id=0,
                docs=docs,
                query_text=options['query'],
                query_sentence=to_sentence_matrix(options['query'], table, config.trunc_len),
            )
        else:
            docs = tuple(doc for g in parse_letor(options['documents']) for doc in g.docs)
            group = QueryGroup(query_id=0, docs=docs)
            if config.normalize and docs:
                group = min_max_normalize([group])[0]

        if not group.docs:
            raise CommandError(f'{options["documents"]} holds no documents')

        passes_before = model.document_passes if model.mode == CONV_MODE else 0
        scores = model.score_documents(group)
        for position, index in enumerate(rank_by_score(scores), start=1):
            self.stdout.write(f'{position}\t{group.docs[index].doc_id}\t{scores[index]:.6f}')

        if model.mode == CONV_MODE:
            passes = model.document_passes - passes_before
            self.stderr.write(
                f'{passes} encoder forward passes for {len(group.docs)} documents '
                '(query encoded once)'
            )
