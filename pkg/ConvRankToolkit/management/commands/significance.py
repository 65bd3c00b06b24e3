from collections import OrderedDict

from django.conf import settings
from django.core.management.base import CommandError

from ...evaluation import read_query_records, significance_table
from ...exceptions import UndefinedTestError
from ..base import RankingCommand


class Command(RankingCommand):
    help = (
        'Two-tailed Wilcoxon signed-rank test between every pair of methods '
        'found in the given per-query record files.'
    )

    def add_arguments(self, parser):
        parser.add_argument('records', nargs='+', help='Per-query record TSV files.')
        parser.add_argument(
            '--k', type=int, default=None,
            help='NDCG cutoff to compare (default: RANKING["SIGNIFICANCE_CUTOFF"]).',
        )

    @staticmethod
    def method_name(method, path, index, taken):
        """Methods repeated across files are told apart by file, then by position."""
        for name in (method, f'{method} ({path})', f'{method} ({path}) [{index + 1}]'):
            if name not in taken:
                return name
        raise CommandError(f'cannot name method {method!r} of {path}')

    def run(self, *args, **options):
        k = options['k'] or settings.RANKING['SIGNIFICANCE_CUTOFF']
        records_by_method = OrderedDict()
        names = {}
        for index, path in enumerate(options['records']):
            for record in read_query_records(path):
                key = (index, record.method)
                if key not in names:
                    names[key] = self.method_name(record.method, path, index, records_by_method)
                    records_by_method[names[key]] = []
                records_by_method[names[key]].append(record)
        if len(records_by_method) < 2:
            raise CommandError('need records of at least two methods')

        table = significance_table(records_by_method, k)
        if len(table) == 1 and None in table.values():
            raise UndefinedTestError()

        self.stdout.write('\t'.join(['method_a', 'method_b', 'W', 'p_value', 'n', 'exact']))
        for (first, second), result in table.items():
            if result is None:
                self.stdout.write(f'{first}\t{second}\tundefined\tundefined\t0\t-')
                continue
            self.stdout.write(
                f'{first}\t{second}\t{result.statistic:g}\t{result.p_value:.6g}\t'
                f'{result.n_effective}\t{"yes" if result.exact else "no"}'
            )
