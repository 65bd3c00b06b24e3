import argparse
import logging

from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from ..data import FoldPlan, min_max_normalize, parse_letor
from ..embeddings import load_embeddings
from ..exceptions import RankingError
from ..pipeline import CONV_MODE, FEATURE_MODE, MODES, attach_sentences
from ..serializers import load_json_object, read_text_groups, validated_run_config

logger = logging.getLogger(__name__)


def comma_separated_ints(value):
    try:
        return [int(part) for part in value.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated integers, got {value!r}')


# RunConfig field -> (flag, add_argument kwargs)
RUN_CONFIG_FLAGS = {
    'mode': ('--mode', {'choices': MODES}),
    'dataset': ('--dataset', {'help': 'LETOR file (feature mode) or text-group JSON lines (conv mode).'}),
    'embeddings': ('--embeddings', {'help': 'Word embedding file (conv mode).'}),
    'epochs': ('--epochs', {'type': int}),
    'lr': ('--lr', {'type': float}),
    'batch_size': ('--batch-size', {'type': int}),
    'trunc_len': ('--trunc-len', {'type': int}),
    'filter_sizes': ('--filter-sizes', {'type': comma_separated_ints, 'help': 'e.g. 3,4,5'}),
    'copies': ('--copies', {'type': int}),
    'dropout_p': ('--dropout', {'type': float}),
    'hidden': ('--hidden', {'type': int}),
    'seed': ('--seed', {'type': int}),
    'fold': ('--fold', {'type': int}),
    'fold_plan': ('--fold-plan', {'choices': ['ohsumed', 'contiguous']}),
    'normalize': ('--normalize', {'action': argparse.BooleanOptionalAction}),
    'select_on_validation': ('--select-on-validation', {'action': argparse.BooleanOptionalAction}),
    'workers': ('--workers', {'type': int}),
}


class RankingCommand(BaseCommand):
    """
    Base for the toolkit's commands. Subclasses implement ``run()``; any
    RankingError it raises becomes a CommandError with a one-line cause.
    """
    run_config_fields = ()

    def add_arguments(self, parser):
        if not self.run_config_fields:
            return
        parser.add_argument(
            '--config',
            help='JSON object with RunConfig fields; command-line flags take precedence.',
        )
        for field_name in self.run_config_fields:
            flag, kwargs = RUN_CONFIG_FLAGS[field_name]
            parser.add_argument(flag, dest=field_name, default=None, **kwargs)

    def handle(self, *args, **options):
        try:
            self.run(*args, **options)
        except RankingError as exc:
            raise CommandError(str(exc)) from exc
        except serializers.ValidationError as exc:
            raise CommandError(str(exc.detail)) from exc
        except UnicodeDecodeError as exc:
            raise CommandError(f'input is not valid UTF-8: {exc.reason}') from exc
        except OSError as exc:
            raise CommandError(f'{exc.filename or "file"}: {exc.strerror or exc}') from exc

    def run(self, *args, **options):
        raise NotImplementedError('subclasses of RankingCommand must provide a run() method')

    def config_data(self, options, **fallbacks):
        """settings defaults < ``fallbacks`` < --config file < command-line flags."""
        data = dict(fallbacks)
        if options.get('config'):
            data.update(load_json_object(options['config']))
        for field_name in self.run_config_fields:
            if options.get(field_name) is not None:
                data[field_name] = options[field_name]
        return data

    def run_config(self, options, **fallbacks):
        return validated_run_config(self.config_data(options, **fallbacks))


def load_dataset(config):
    """Return ``(groups, fold plan, input dimension)`` for a run config."""
    if not config.dataset:
        raise CommandError('a --dataset is required')
    if config.mode == FEATURE_MODE:
        groups = parse_letor(config.dataset)
        if config.normalize:
            groups = min_max_normalize(groups)
        input_dim = next((g.docs[0].features.size for g in groups if g.docs), 0)
    elif config.mode == CONV_MODE:
        table = load_embeddings(config.embeddings, seed=config.seed)
        groups = attach_sentences(read_text_groups(config.dataset), table, config.trunc_len)
        input_dim = table.dim
    else:
        raise CommandError(f'unknown mode {config.mode!r}')
    if not groups:
        raise CommandError(f'{config.dataset} holds no query groups')

    if config.fold_plan == 'contiguous':
        plan = FoldPlan.contiguous([group.query_id for group in groups])
    else:
        plan = FoldPlan.ohsumed()
    logger.info('loaded %d query groups from %s', len(groups), config.dataset)
    return groups, plan, input_dim
