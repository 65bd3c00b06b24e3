"""
Glue between a validated :class:`RunConfig` and the library: building
models, fitting them on a fold and exposing them as scorers.
"""
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from .embeddings import to_sentence_matrix
from .encoder import EncoderConfig, init_encoder
from .evaluation import K_MAX, evaluate_fold
from .exceptions import ConfigError
from .numerics import ParamStore
from .ranker import (
    ConvRankNet,
    FeatureRankNet,
    RankNetConfig,
    TrainConfig,
    init_ranknet,
    make_pairs,
    train,
)

logger = logging.getLogger(__name__)

FEATURE_MODE = 'ranknet-features'
CONV_MODE = 'convranknet'
MODES = (FEATURE_MODE, CONV_MODE)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    epochs: int = 500
    lr: float = 1e-5
    batch_size: int = 64
    trunc_len: int = 100
    filter_sizes: tuple = (3, 4, 5)
    copies: int = 10
    dropout_p: float = 0.5
    hidden: int = 10
    seed: int = 0
    fold: int = 1
    fold_plan: str = 'ohsumed'
    normalize: bool = True
    select_on_validation: bool = False
    workers: int = 1
    dataset: Optional[str] = None
    embeddings: Optional[str] = None

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        values = {key: value for key, value in data.items() if key in known}
        if 'filter_sizes' in values:
            values['filter_sizes'] = tuple(values['filter_sizes'])
        return cls(**values)

    def to_dict(self):
        data = asdict(self)
        data['filter_sizes'] = list(self.filter_sizes)
        return data

    def model_dict(self):
        """The fields that determine a trained model (no paths or fold choice)."""
        data = self.to_dict()
        for key in ('dataset', 'embeddings', 'fold', 'workers'):
            data.pop(key)
        return data

    def train_config(self):
        return TrainConfig(
            epochs=self.epochs, lr=self.lr, batch_size=self.batch_size, seed=self.seed,
        )


def build_model(config, input_dim):
    """
    A freshly initialised model. ``input_dim`` is the feature count in
    feature mode and the embedding dimension in conv mode.
    """
    if config.mode == FEATURE_MODE:
        ranknet = init_ranknet(RankNetConfig(input_dim=input_dim, hidden=config.hidden), config.seed)
        return FeatureRankNet(ranknet)
    if config.mode == CONV_MODE:
        params = ParamStore()
        encoder = init_encoder(
            EncoderConfig(
                dim=input_dim,
                filter_sizes=tuple(config.filter_sizes),
                copies=config.copies,
                dropout_p=config.dropout_p,
            ),
            config.seed,
            params,
        )
        ranknet = init_ranknet(
            RankNetConfig(input_dim=encoder.output_dim, hidden=config.hidden),
            config.seed + 1,
            params,
        )
        return ConvRankNet(encoder, ranknet)
    raise ConfigError(f'unknown mode {config.mode!r}; expected one of {MODES}')


def model_input_dim(model):
    if isinstance(model, ConvRankNet):
        return model.encoder.config.dim
    return model.ranknet.config.input_dim


def attach_sentences(groups, table, trunc_len):
    """Convert query and document texts of raw-mode groups to sentence matrices."""
    prepared = []
    for group in groups:
        docs = tuple(
            replace(doc, sentence=to_sentence_matrix(doc.text or '', table, trunc_len))
            for doc in group.docs
        )
        prepared.append(replace(
            group,
            docs=docs,
            query_sentence=to_sentence_matrix(group.query_text or '', table, trunc_len),
        ))
    return prepared


def training_triples(groups):
    triples = []
    for group in groups:
        triples.extend(make_pairs(group))
    return triples


def fit_model(model, config, train_groups, validation_groups=()):
    """Train ``model`` on all preference pairs of ``train_groups``."""
    monitor = None
    if config.select_on_validation and validation_groups:
        def monitor(candidate):
            per_query = evaluate_fold(candidate, validation_groups, K_MAX)
            return float(np.mean([values[-1] for values in per_query.values()]))

    triples = training_triples(train_groups)
    logger.info('%d training pairs from %d queries', len(triples), len(train_groups))
    return train(model, triples, config.train_config(), monitor=monitor)


@dataclass(frozen=True)
class FittedMethod:
    scorer: object
    history: list


class OracleScorer:
    """Scores every document by its own grade (the ideal ranking)."""

    def score_documents(self, group):
        return np.array(group.grades, dtype=float)


class OracleMethod:
    name = 'Oracle'

    def fit(self, train_groups, validation_groups, fold=None):
        return FittedMethod(scorer=OracleScorer(), history=[])


class TrainedMethod:
    """A RunConfig-driven method for :func:`cross_validate`."""

    def __init__(self, config, input_dim, name=None):
        self.config = config
        self.input_dim = input_dim
        self.name = name or ('ConvRankNet' if config.mode == CONV_MODE else 'RankNet')

    def fit(self, train_groups, validation_groups, fold=None):
        model = build_model(self.config, self.input_dim)
        result = fit_model(model, self.config, train_groups, validation_groups)
        return FittedMethod(scorer=model, history=result.history)
