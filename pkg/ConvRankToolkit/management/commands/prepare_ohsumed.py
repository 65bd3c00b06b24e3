from ...data import build_text_groups, parse_judgments, parse_ohsumed_docs, parse_ohsumed_queries
from ...serializers import write_text_groups
from ..base import RankingCommand


class Command(RankingCommand):
    help = (
        'Join raw OHSUMED queries, documents and graded judgments into the '
        'text-group JSON lines read by convranknet mode.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--queries', required=True)
        parser.add_argument('--documents', required=True)
        parser.add_argument('--judgments', required=True)
        parser.add_argument('--output', required=True)

    def run(self, *args, **options):
        queries = parse_ohsumed_queries(options['queries'])
        documents = parse_ohsumed_docs(options['documents'])
        judgments = parse_judgments(options['judgments'])
        groups = build_text_groups(queries, documents, judgments)
        write_text_groups(groups, options['output'])
        n_docs = sum(len(group.docs) for group in groups)
        self.stdout.write(self.style.SUCCESS(
            f'wrote {len(groups)} queries with {n_docs} judged documents to {options["output"]}'
        ))
