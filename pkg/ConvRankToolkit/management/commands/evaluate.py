from django.conf import settings
from django.core.management.base import CommandError

from ...data import make_folds
from ...evaluation import (
    MetricTable,
    cross_validate,
    evaluate_fold,
    to_records,
    write_query_records,
)
from ...modelfile import load_model
from ...pipeline import CONV_MODE, OracleMethod, TrainedMethod
from ..base import RankingCommand, load_dataset

ALL_FOLDS = (1, 2, 3, 4, 5)


class Command(RankingCommand):
    help = (
        'Report NDCG@1..k: a saved model on its fold, the grade oracle, or '
        'five-fold cross-validation of a fresh model per fold.'
    )
    run_config_fields = (
        'mode', 'dataset', 'embeddings', 'epochs', 'lr', 'batch_size', 'trunc_len',
        'filter_sizes', 'copies', 'dropout_p', 'hidden', 'seed', 'fold', 'fold_plan',
        'normalize', 'select_on_validation', 'workers',
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--model', help='Evaluate this saved model on the test split of --fold.')
        parser.add_argument(
            '--oracle', action='store_true',
            help='Score documents by their own grade (upper bound, no training).',
        )
        parser.add_argument(
            '--folds', type=lambda v: [int(p) for p in v.split(',')],
            help='Folds to cross-validate (default: all five).',
        )
        parser.add_argument('--method', help='Method name written to the table and records.')
        parser.add_argument('--k-max', type=int, default=None)
        parser.add_argument('--table', help='Metric table TSV to write.')
        parser.add_argument('--records', help='Per-query record TSV to write.')

    def run(self, *args, **options):
        k_max = options['k_max'] or settings.RANKING['K_MAX']
        if options['model'] and options['oracle']:
            raise CommandError('--model and --oracle are mutually exclusive')

        if options['model']:
            table, records = self.evaluate_saved(options, k_max)
        else:
            table, records = self.cross_validate(options, k_max)

        self.stdout.write(table.render(), ending='')

        if options['table']:
            table.write(options['table'])
        if options['records']:
            write_query_records(records, options['records'])

    def evaluate_saved(self, options, k_max):
        model, model_config = load_model(options['model'])
        if options.get('mode') and options['mode'] != model.mode:
            raise CommandError(
                f'model file holds a {model.mode} model but --mode is {options["mode"]}'
            )
        fallbacks = model_config.model_dict()
        config = self.run_config(options, **fallbacks)
        if config.mode != model.mode:
            raise CommandError(
                f'model file holds a {model.mode} model but the config asks for {config.mode}'
            )
        groups, plan, _ = load_dataset(config)
        split = make_folds(groups, plan, config.fold)
        method = options['method'] or ('ConvRankNet' if model.mode == CONV_MODE else 'RankNet')
        records = to_records(evaluate_fold(model, split.test, k_max), config.fold, method)
        return MetricTable.from_records(records, k_max), records

    def cross_validate(self, options, k_max):
        config = self.run_config(options)
        groups, plan, input_dim = load_dataset(config)
        folds = tuple(options['folds'] or ALL_FOLDS)
        if options['oracle']:
            method = OracleMethod()
        else:
            method = TrainedMethod(config, input_dim, name=options['method'])
        result = cross_validate(
            method, groups, plan, folds=folds, k_max=k_max, workers=config.workers,
        )
        return result.table, result.records
