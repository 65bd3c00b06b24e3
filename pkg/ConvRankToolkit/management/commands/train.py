import csv

from django.core.management.base import CommandError

from ...data import make_folds
from ...modelfile import save_model
from ...pipeline import build_model, fit_model
from ..base import RankingCommand, load_dataset


def write_loss_history(history, path):
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['epoch', 'mean_loss'])
        for epoch, loss in enumerate(history, start=1):
            writer.writerow([epoch, repr(float(loss))])


class Command(RankingCommand):
    help = 'Train a ranker on the train split of one fold and save it.'
    run_config_fields = (
        'mode', 'dataset', 'embeddings', 'epochs', 'lr', 'batch_size', 'trunc_len',
        'filter_sizes', 'copies', 'dropout_p', 'hidden', 'seed', 'fold', 'fold_plan',
        'normalize', 'select_on_validation',
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--output', required=True, help='Model file to write.')
        parser.add_argument(
            '--loss-history',
            help='Per-epoch loss CSV (default: <output>.loss.csv).',
        )

    def run(self, *args, **options):
        config = self.run_config(options)
        groups, plan, input_dim = load_dataset(config)
        split = make_folds(groups, plan, config.fold)
        if not split.train:
            raise CommandError(f'fold {config.fold} leaves no training queries')

        model = build_model(config, input_dim)
        result = fit_model(model, config, split.train, split.validation)
        save_model(model, config, options['output'])
        history_path = options['loss_history'] or f'{options["output"]}.loss.csv'
        write_loss_history(result.history, history_path)

        if result.history:
            self.stdout.write(
                f'trained {config.mode} on fold {config.fold}: '
                f'loss {result.history[0]:.6f} -> {result.history[-1]:.6f}'
            )
        else:
            self.stdout.write(f'saved untrained {config.mode} model (0 epochs)')
        self.stdout.write(self.style.SUCCESS(f'model written to {options["output"]}'))
