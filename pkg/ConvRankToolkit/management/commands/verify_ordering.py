import numpy as np
from django.core.management.base import CommandError

from ...exceptions import PreconditionError
from ...ordering import PreferenceGraph, topo_sort, verify_score_order
from ..base import RankingCommand

COMPARATORS = {
    'identity': lambda x: x,
    'tanh': np.tanh,
    'cube': lambda x: x ** 3,
}


class Command(RankingCommand):
    help = (
        'Check on random score vectors that the order induced by a pairwise '
        'comparator psi(f(i) - f(j)) equals sorting by f.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--n-max', type=int, default=8)
        parser.add_argument('--seeds', type=int, default=100)
        parser.add_argument('--psi', choices=sorted(COMPARATORS), default='identity')
        parser.add_argument(
            '--inject-tie', action='store_true',
            help='Duplicate one score per trial; every trial must then be rejected.',
        )

    def run(self, *args, **options):
        n_max, seeds = options['n_max'], options['seeds']
        if n_max < 1 or seeds < 1:
            raise CommandError('--n-max and --seeds must be positive')
        psi = COMPARATORS[options['psi']]

        checked = rejected = 0
        failures = []
        for n in range(1, n_max + 1):
            for seed in range(seeds):
                scores = np.random.default_rng(seed).standard_normal(n)
                if options['inject_tie'] and n > 1:
                    scores[-1] = scores[0]
                    try:
                        verify_score_order(scores, n, psi)
                    except PreconditionError:
                        rejected += 1
                        continue
                    failures.append((n, seed))
                    continue
                checked += 1
                if not verify_score_order(scores, n, psi):
                    failures.append((n, seed))

        cycle = PreferenceGraph(n=3, edges=frozenset({(0, 1), (1, 2), (2, 0)}))
        if not topo_sort(cycle).has_cycle:
            failures.append(('3-cycle', None))

        self.stdout.write(
            f'n = 1..{n_max}, {seeds} seeds each: {checked} orders agreed, '
            f'{rejected} tied score vectors rejected, {len(failures)} failures'
        )
        if failures:
            raise CommandError(f'ordering disagreements at (n, seed): {failures[:10]}')
        self.stdout.write(self.style.SUCCESS('score order and comparator order agree'))
