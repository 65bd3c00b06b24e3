"""
RankNet scoring network, the pairwise cross-entropy loss and the SGD
training loop shared by the feature-based and the end-to-end text ranker.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Optional

import numpy as np
from scipy.special import expit

from .encoder import join_phi, join_phi_backward
from .exceptions import (
    ConfigError,
    DimensionError,
    GradientError,
    LabelError,
    TrainingError,
)
from .numerics import (
    ParamStore,
    Tape,
    as_matrix,
    as_vector,
    backward,
    relu,
    relu_backward,
    sgd_step,
)

logger = logging.getLogger(__name__)

GRADE_TOKENS = {'n': 0, 'p': 1, 'd': 2}
GRADES = frozenset(GRADE_TOKENS.values())


class Preference(IntEnum):
    WORSE = -1
    TIE = 0
    BETTER = 1


def grade_value(grade):
    """Map a grade token (n/p/d) or integer 0..2 onto its integer code."""
    if isinstance(grade, str):
        token = grade.strip().lower()
        if token in GRADE_TOKENS:
            return GRADE_TOKENS[token]
        try:
            grade = int(token)
        except ValueError:
            raise LabelError(f'unknown relevance grade {grade!r}') from None
    if isinstance(grade, bool) or int(grade) != grade or int(grade) not in GRADES:
        raise LabelError(f'unknown relevance grade {grade!r}')
    return int(grade)


def preference(rel_i, rel_j):
    rel_i = grade_value(rel_i)
    rel_j = grade_value(rel_j)
    if rel_i > rel_j:
        return Preference.BETTER
    if rel_i < rel_j:
        return Preference.WORSE
    return Preference.TIE


def target_probability(pref):
    return (1.0 + int(pref)) / 2.0


def posterior(s_ij):
    """Bradley-Terry probability that d_i beats d_j given s_i - s_j."""
    return expit(s_ij)


def ranknet_loss(s_ij, target):
    """
    C = -target * s + log(1 + exp(s)), evaluated without overflow as
    max(s, 0) - target * s + log1p(exp(-|s|)).
    """
    s_ij = np.asarray(s_ij, dtype=float)
    loss = np.maximum(s_ij, 0.0) - target * s_ij + np.log1p(np.exp(-np.abs(s_ij)))
    return float(loss) if loss.ndim == 0 else loss


def ranknet_loss_grad(s_ij, target):
    return posterior(s_ij) - target


@dataclass(frozen=True)
class Triple:
    query: Any
    doc_i: Any
    doc_j: Any
    target: float = 1.0
    query_id: Optional[int] = None
    doc_ids: tuple = ()


def make_pairs(group):
    """
    One triple per pair of documents with different grades, oriented so that
    doc_i is the more relevant one. Ties are not trained on.
    """
    triples = []
    docs = group.docs
    for i in range(len(docs)):
        for j in range(i + 1, len(docs)):
            pref = preference(docs[i].grade, docs[j].grade)
            if pref == Preference.TIE:
                continue
            better, worse = (docs[i], docs[j]) if pref == Preference.BETTER else (docs[j], docs[i])
            triples.append(Triple(
                query=group.query_payload,
                doc_i=better.payload,
                doc_j=worse.payload,
                target=target_probability(Preference.BETTER),
                query_id=group.query_id,
                doc_ids=(better.doc_id, worse.doc_id),
            ))
    return triples


@dataclass(frozen=True)
class RankNetConfig:
    input_dim: int
    hidden: int = 10

    def validate(self):
        if self.input_dim < 1 or self.hidden < 1:
            raise ConfigError(
                f'RankNet needs positive layer sizes, got [{self.input_dim}, {self.hidden}, 1]'
            )
        return self


class RankNetModel:
    """Three-layer scorer: features -> ReLU hidden layer -> one real score."""

    def __init__(self, config, params, prefix='ranknet.'):
        self.config = config.validate()
        self.params = params
        self.prefix = prefix

    def _slot(self, name):
        return self.params.value(self.prefix + name)

    def forward(self, features):
        X = as_matrix(features)
        if X.shape[1] != self.config.input_dim:
            raise DimensionError(
                f'RankNet expects {self.config.input_dim} features, got shape {X.shape}'
            )
        hidden_pre = X @ self._slot('hidden.weight') + self._slot('hidden.bias')
        hidden = relu(hidden_pre)
        scores = (hidden @ self._slot('output.weight') + self._slot('output.bias')).reshape(-1)
        tape = Tape(self._backward)
        tape.save(X=X, hidden_pre=hidden_pre, hidden=hidden)
        return scores, tape

    def _backward(self, tape, grad_scores):
        grad_out = as_vector(grad_scores).reshape(-1, 1)
        p = self.prefix
        self.params.accumulate(p + 'output.weight', tape['hidden'].T @ grad_out)
        self.params.accumulate(p + 'output.bias', grad_out.sum(axis=0))
        grad_hidden = grad_out @ self._slot('output.weight').T
        grad_pre = relu_backward(tape['hidden_pre'], grad_hidden)
        self.params.accumulate(p + 'hidden.weight', tape['X'].T @ grad_pre)
        self.params.accumulate(p + 'hidden.bias', grad_pre.sum(axis=0))
        return grad_pre @ self._slot('hidden.weight').T

    def score_batch(self, features):
        return self.forward(features)[0]

    def score(self, features):
        return float(self.score_batch(features)[0])


def init_ranknet(config, seed, params=None, prefix='ranknet.'):
    config = config.validate()
    params = ParamStore() if params is None else params
    rng = np.random.default_rng(seed)
    for name, (fan_in, fan_out) in (
        ('hidden', (config.input_dim, config.hidden)),
        ('output', (config.hidden, 1)),
    ):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params.add(f'{prefix}{name}.weight', rng.uniform(-limit, limit, (fan_in, fan_out)))
        params.add(f'{prefix}{name}.bias', np.zeros((1, fan_out)))
    return RankNetModel(config, params, prefix)


def score(model, features):
    return model.score(features)


def score_conv(encoder, ranknet, v_q, v_d):
    return ranknet.score(join_phi(v_q, v_d))


class FeatureRankNet:
    """RankNet over precomputed query-document feature vectors."""
    mode = 'ranknet-features'

    def __init__(self, ranknet):
        self.ranknet = ranknet
        self.params = ranknet.params

    def _pair_forward(self, triples):
        X = np.vstack([
            np.stack([as_vector(t.doc_i) for t in triples]),
            np.stack([as_vector(t.doc_j) for t in triples]),
        ])
        scores, tape = self.ranknet.forward(X)
        half = len(triples)
        return scores[:half] - scores[half:], tape

    def score_pairs(self, triples):
        return self._pair_forward(triples)[0]

    def batch_loss(self, triples, train_mode=False, rng=None):
        s_ij, ranknet_tape = self._pair_forward(triples)
        targets = np.array([t.target for t in triples])
        loss = float(np.mean(ranknet_loss(s_ij, targets)))

        def backward_fn(tape, upstream):
            grad = upstream * ranknet_loss_grad(s_ij, targets) / len(triples)
            backward(ranknet_tape, np.concatenate([grad, -grad]))

        return loss, Tape(backward_fn)

    def score_documents(self, group):
        return self.ranknet.score_batch(np.stack([as_vector(doc.features) for doc in group.docs]))


class ConvRankNet:
    """
    End-to-end text ranker: Siamese encoder -> squared-difference join ->
    RankNet. Encoder and RankNet slots live in one ParamStore and are
    updated together.
    """
    mode = 'convranknet'

    def __init__(self, encoder, ranknet):
        if encoder.params is not ranknet.params:
            raise ConfigError('encoder and RankNet must share one parameter store')
        if ranknet.config.input_dim != encoder.output_dim:
            raise ConfigError(
                f'RankNet input {ranknet.config.input_dim} does not match '
                f'encoder output {encoder.output_dim}'
            )
        self.encoder = encoder
        self.ranknet = ranknet
        self.params = encoder.params
        self.document_passes = 0

    def _pair_forward(self, triples, train_mode, rng):
        branches = []
        for triple in triples:
            v_q, tape_q = self.encoder.forward(triple.query, train_mode, rng)
            v_i, tape_i = self.encoder.forward(triple.doc_i, train_mode, rng)
            v_j, tape_j = self.encoder.forward(triple.doc_j, train_mode, rng)
            branches.append((v_q, tape_q, v_i, tape_i, v_j, tape_j))
        phi = np.vstack([
            np.stack([join_phi(b[0], b[2]) for b in branches]),
            np.stack([join_phi(b[0], b[4]) for b in branches]),
        ])
        scores, ranknet_tape = self.ranknet.forward(phi)
        half = len(triples)
        return scores[:half] - scores[half:], branches, ranknet_tape

    def score_pairs(self, triples):
        return self._pair_forward(triples, False, None)[0]

    def batch_loss(self, triples, train_mode=False, rng=None):
        s_ij, branches, ranknet_tape = self._pair_forward(triples, train_mode, rng)
        targets = np.array([t.target for t in triples])
        loss = float(np.mean(ranknet_loss(s_ij, targets)))

        def backward_fn(tape, upstream):
            half = len(triples)
            grad = upstream * ranknet_loss_grad(s_ij, targets) / half
            grad_phi = backward(ranknet_tape, np.concatenate([grad, -grad]))
            for row, (v_q, tape_q, v_i, tape_i, v_j, tape_j) in enumerate(branches):
                grad_q_i, grad_i = join_phi_backward(v_q, v_i, grad_phi[row])
                grad_q_j, grad_j = join_phi_backward(v_q, v_j, grad_phi[half + row])
                self.encoder.backward(tape_q, grad_q_i + grad_q_j)
                self.encoder.backward(tape_i, grad_i)
                self.encoder.backward(tape_j, grad_j)

        return loss, Tape(backward_fn)

    def score_documents(self, group):
        """One encoder pass for the query and one per document; never pairs."""
        v_q = self.encoder.encode(group.query_payload)
        scores = np.empty(len(group.docs))
        for index, doc in enumerate(group.docs):
            v_d = self.encoder.encode(doc.payload)
            self.document_passes += 1
            scores[index] = self.ranknet.score(join_phi(v_q, v_d))
        return scores


def pairwise_accuracy(model, triples):
    """Fraction of triples whose preferred document scores strictly higher."""
    if not triples:
        return 0.0
    return float(np.mean(model.score_pairs(triples) > 0.0))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 0

    def validate(self):
        if self.epochs < 0:
            raise ConfigError(f'epochs must be >= 0, got {self.epochs}')
        if self.batch_size < 1:
            raise ConfigError(f'batch size must be >= 1, got {self.batch_size}')
        if not math.isfinite(self.lr) or self.lr < 0:
            raise ConfigError(f'learning rate must be a finite value >= 0, got {self.lr}')
        return self


@dataclass
class TrainResult:
    model: Any
    history: list = field(default_factory=list)
    best_epoch: Optional[int] = None


def train(model, triples, config, monitor=None):
    """
    Mini-batch SGD on the mean pairwise loss, reshuffling every epoch.

    ``monitor(model)`` is called after each epoch when given; the parameters
    with the highest monitor value are restored at the end.
    """
    config = config.validate()
    if not triples:
        raise TrainingError('no training triples')
    rng = np.random.default_rng(config.seed)
    params = model.params
    params.zero_grads()
    history = []
    best = None
    n_triples = len(triples)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_triples)
        total = 0.0
        for batch_index, start in enumerate(range(0, n_triples, config.batch_size), start=1):
            batch = [triples[i] for i in order[start:start + config.batch_size]]
            loss, tape = model.batch_loss(batch, train_mode=True, rng=rng)
            if not math.isfinite(loss):
                raise TrainingError(
                    f'non-finite loss {loss} at epoch {epoch}, batch {batch_index}'
                )
            backward(tape)
            try:
                sgd_step(params, config.lr)
            except GradientError as exc:
                raise TrainingError(f'epoch {epoch}, batch {batch_index}: {exc}') from exc
            total += loss * len(batch)
        history.append(total / n_triples)
        logger.debug('epoch %d mean loss %.6f', epoch, history[-1])

        if monitor is not None:
            value = monitor(model)
            if best is None or value > best[0]:
                best = (value, epoch, params.snapshot())

    best_epoch = None
    if best is not None:
        params.restore(best[2])
        best_epoch = best[1]
    if history:
        logger.info(
            'trained %s for %d epochs: loss %.6f -> %.6f',
            model.mode, config.epochs, history[0], history[-1],
        )
    return TrainResult(model=model, history=history, best_epoch=best_epoch)
