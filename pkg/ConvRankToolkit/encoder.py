"""
Siamese convolutional sentence encoder.

Query and documents all go through the same :class:`EncoderModel`, so the
three branches of the Siamese network read the same parameter slots. Each
filter copy contributes one pooled scalar; features are ordered by filter
size (ascending) then copy index.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .embeddings import SentenceMatrix
from .exceptions import ConfigError, DimensionError, RankingArgumentError
from .numerics import (
    ParamStore,
    Tape,
    as_matrix,
    as_vector,
    backward,
    conv1d_wide,
    conv1d_wide_backward,
    dropout_mask,
    max_pool,
    max_pool_backward,
    relu,
    relu_backward,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncoderConfig:
    dim: int
    filter_sizes: tuple = (3, 4, 5)
    copies: int = 10
    dropout_p: float = 0.5

    def validate(self):
        if self.dim < 1:
            raise ConfigError(f'embedding dimension must be >= 1, got {self.dim}')
        if not self.filter_sizes:
            raise ConfigError('at least one filter size is required')
        if any(size < 1 for size in self.filter_sizes):
            raise ConfigError(f'filter sizes must be >= 1, got {list(self.filter_sizes)}')
        if len(set(self.filter_sizes)) != len(self.filter_sizes):
            raise ConfigError(f'duplicate filter sizes in {list(self.filter_sizes)}')
        if self.copies < 1:
            raise ConfigError(f'filter copies must be >= 1, got {self.copies}')
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f'dropout must be in [0, 1), got {self.dropout_p}')
        return self

    @property
    def output_dim(self):
        return len(self.filter_sizes) * self.copies


class FilterBank(NamedTuple):
    size: int
    copies: int
    weights: np.ndarray
    bias: np.ndarray


class EncoderModel:
    """
    Filter banks stored as ``<prefix>conv<m>.weight`` (copies x m*d, one
    flattened m x d filter per row) and ``<prefix>conv<m>.bias`` (1 x copies).
    """

    def __init__(self, config, params, prefix='encoder.'):
        self.config = config.validate()
        self.params = params
        self.prefix = prefix
        self.sizes = tuple(sorted(config.filter_sizes))
        self.forward_passes = 0

    def weight_name(self, size):
        return f'{self.prefix}conv{size}.weight'

    def bias_name(self, size):
        return f'{self.prefix}conv{size}.bias'

    @property
    def output_dim(self):
        return self.config.output_dim

    @property
    def filters(self):
        dim = self.config.dim
        return [
            FilterBank(
                size=size,
                copies=self.config.copies,
                weights=self.params.value(self.weight_name(size)).reshape(-1, size, dim),
                bias=self.params.value(self.bias_name(size)).reshape(-1),
            )
            for size in self.sizes
        ]

    def forward(self, sentence, train_mode=False, rng=None):
        matrix = sentence.matrix if isinstance(sentence, SentenceMatrix) else as_matrix(sentence)
        if matrix.shape[1] != self.config.dim:
            raise DimensionError(
                f'filters of width {self.config.dim} do not fit '
                f'sentence matrix {matrix.shape}'
            )
        if train_mode and rng is None and self.config.dropout_p > 0.0:
            raise RankingArgumentError('train mode with dropout needs an rng')

        banks = []
        pooled = []
        for size in self.sizes:
            weights = self.params.value(self.weight_name(size))
            bias = self.params.value(self.bias_name(size))
            bank = weights.reshape(-1, size, self.config.dim)
            pre = conv1d_wide(matrix, bank, bias)
            activated = relu(pre)
            banks.append((size, bank, pre, activated))
            pooled.append(max_pool(activated, axis=0))
        features = np.concatenate(pooled)
        mask = dropout_mask(features.shape, self.config.dropout_p, rng, train_mode)
        self.forward_passes += 1

        tape = Tape(self._backward)
        tape.save(matrix=matrix, banks=banks, mask=mask)
        return features * mask, tape

    def encode(self, sentence, train_mode=False, rng=None):
        return self.forward(sentence, train_mode, rng)[0]

    def backward(self, tape, grad_features):
        return backward(tape, grad_features)

    def _backward(self, tape, grad_features):
        grad_pooled = as_vector(grad_features) * tape['mask']
        grad_sentence = np.zeros_like(tape['matrix'])
        offset = 0
        for size, bank, pre, activated in tape['banks']:
            copies = bank.shape[0]
            grad_activated = max_pool_backward(
                activated, grad_pooled[offset:offset + copies], axis=0
            )
            grad_pre = relu_backward(pre, grad_activated)
            grad_matrix, grad_bank, grad_bias = conv1d_wide_backward(tape['matrix'], bank, grad_pre)
            self.params.accumulate(self.weight_name(size), grad_bank.reshape(copies, -1))
            self.params.accumulate(self.bias_name(size), grad_bias)
            grad_sentence += grad_matrix
            offset += copies
        return grad_sentence


def encode(sentence, model, train_mode=False, rng=None):
    return model.encode(sentence, train_mode, rng)


def join_phi(v_q, v_d):
    """Element-wise squared difference of two encodings."""
    v_q = as_vector(v_q)
    v_d = as_vector(v_d)
    if v_q.shape != v_d.shape:
        raise DimensionError(f'cannot join encodings of length {v_q.size} and {v_d.size}')
    return (v_q - v_d) ** 2


def join_phi_backward(v_q, v_d, grad):
    """Return ``(grad_v_q, grad_v_d)``."""
    diff = 2.0 * (as_vector(v_q) - as_vector(v_d)) * as_vector(grad)
    return diff, -diff


def init_encoder(config, seed, params=None, prefix='encoder.'):
    """Glorot-uniform filters, zero biases, deterministic under ``seed``."""
    config = config.validate()
    params = ParamStore() if params is None else params
    rng = np.random.default_rng(seed)
    for size in sorted(config.filter_sizes):
        fan_in = size * config.dim
        limit = math.sqrt(6.0 / (fan_in + 1))
        params.add(
            f'{prefix}conv{size}.weight',
            rng.uniform(-limit, limit, (config.copies, fan_in)),
        )
        params.add(f'{prefix}conv{size}.bias', np.zeros((1, config.copies)))
    logger.debug('initialised encoder %s with seed %d', config, seed)
    return EncoderModel(config, params, prefix)
