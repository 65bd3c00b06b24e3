"""
Dense 64-bit linear algebra for the ranking networks.

Every layer primitive comes with a hand-derived backward pass. Gradients
are accumulated (``+=``) into a :class:`ParamStore` and only cleared by
``zero_grads``; ``grad_check`` compares them with central differences.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import (
    DimensionError,
    GradientError,
    NonFiniteLossError,
    RankingArgumentError,
    StateError,
)

logger = logging.getLogger(__name__)

DTYPE = np.float64


def as_matrix(values):
    """Return ``values`` as a 2-D float64 array (vectors become one row)."""
    array = np.asarray(values, dtype=DTYPE)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim != 2:
        raise DimensionError(f'expected a matrix, got shape {array.shape}')
    return array


def as_vector(values):
    return np.asarray(values, dtype=DTYPE).reshape(-1)


def check_finite(array, what):
    if not np.all(np.isfinite(array)):
        raise GradientError(f'non-finite values in {what}')


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f'cannot multiply {a.shape} by {b.shape}')
    return a @ b


def window_matrix(S, m):
    """
    Rows of the zero-padded sliding windows used by wide convolution.

    ``S`` (N x d) is padded with m-1 zero rows above and below; row i of the
    result is the flattened window ``padded[i:i+m]``, so the result has
    N+m-1 rows and m*d columns.
    """
    if m < 1:
        raise DimensionError(f'filter height must be >= 1, got {m}')
    n_rows, dim = S.shape
    padded = np.zeros((n_rows + 2 * (m - 1), dim), dtype=DTYPE)
    padded[m - 1:m - 1 + n_rows] = S
    windows = sliding_window_view(padded, (m, dim))
    return windows.reshape(n_rows + m - 1, m * dim)


def fold_windows(grad_windows, n_rows):
    """Adjoint of :func:`window_matrix`: scatter window gradients back onto S."""
    n_windows, m, dim = grad_windows.shape
    padded = np.zeros((n_rows + 2 * (m - 1), dim), dtype=DTYPE)
    for offset in range(m):
        padded[offset:offset + n_windows] += grad_windows[:, offset, :]
    return padded[m - 1:m - 1 + n_rows]


def _filter_bank(S, filt):
    """Return ``(S, bank, single)``; a single m x d filter becomes a 1 x m x d bank."""
    S = as_matrix(S)
    filt = np.asarray(filt, dtype=DTYPE)
    single = filt.ndim == 2
    bank = filt[np.newaxis] if single else filt
    if bank.ndim != 3 or bank.shape[1] < 1:
        raise DimensionError(f'invalid filter shape {filt.shape}')
    if bank.shape[2] != S.shape[1]:
        raise DimensionError(
            f'filter {filt.shape} does not fit sentence matrix {S.shape}'
        )
    return S, bank, single


def conv1d_wide(S, filt, bias):
    """
    Wide convolution of an m x d filter over S; returns N+m-1 values.

    ``filt`` may also be a bank of c filters (c x m x d) with c biases, in
    which case the result is an (N+m-1) x c matrix, one column per filter.
    """
    S, bank, single = _filter_bank(S, filt)
    copies, m, dim = bank.shape
    out = matmul(window_matrix(S, m), bank.reshape(copies, m * dim).T)
    out = out + np.asarray(bias, dtype=DTYPE).reshape(-1)
    return out[:, 0] if single else out


def conv1d_wide_backward(S, filt, grad_v):
    """Return ``(grad_S, grad_filter, grad_bias)`` for :func:`conv1d_wide`."""
    S, bank, single = _filter_bank(S, filt)
    copies, m, dim = bank.shape
    grad_v = np.asarray(grad_v, dtype=DTYPE)
    if single:
        grad_v = grad_v.reshape(-1, 1)
    windows = window_matrix(S, m)
    if grad_v.shape != (windows.shape[0], copies):
        raise DimensionError(
            f'upstream gradient of shape {grad_v.shape} for '
            f'{windows.shape[0]} windows of {copies} filters'
        )
    grad_filter = matmul(grad_v.T, windows).reshape(copies, m, dim)
    grad_bias = grad_v.sum(axis=0)
    grad_windows = matmul(grad_v, bank.reshape(copies, m * dim)).reshape(-1, m, dim)
    grad_S = fold_windows(grad_windows, S.shape[0])
    if single:
        return grad_S, grad_filter[0], float(grad_bias[0])
    return grad_S, grad_filter, grad_bias


def relu(v):
    return np.maximum(v, 0.0)


def relu_backward(v, grad):
    # relu'(0) = 0
    return grad * (v > 0.0)


def max_pool(v, axis=None):
    """Maximum entry of ``v`` (column-wise with ``axis=0``)."""
    if axis is None:
        return float(np.max(v))
    return np.max(v, axis=axis)


def max_pool_backward(v, grad, axis=None):
    """Route ``grad`` to the argmax position; ties go to the lowest index."""
    out = np.zeros_like(v, dtype=DTYPE)
    if axis is None:
        out.flat[int(np.argmax(v))] = grad
        return out
    if axis != 0 or v.ndim != 2:
        raise DimensionError('max_pool_backward supports axis=0 on matrices only')
    rows = np.argmax(v, axis=0)
    out[rows, np.arange(v.shape[1])] = grad
    return out


def dropout_mask(shape, p, rng, train_mode):
    """Inverted-dropout mask: zeros with probability p, survivors 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise RankingArgumentError(f'dropout probability must be in [0, 1), got {p}')
    if not train_mode or p == 0.0:
        return np.ones(shape, dtype=DTYPE)
    return (rng.random(shape) >= p).astype(DTYPE) / (1.0 - p)


def dropout(v, p, rng, train_mode):
    return v * dropout_mask(np.shape(v), p, rng, train_mode)


class ParamStore:
    """
    Named parameter slots, each a value matrix paired with a gradient
    buffer of identical shape.
    """

    def __init__(self):
        self._values = {}
        self._grads = {}

    def __contains__(self, name):
        return name in self._values

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def add(self, name, value):
        if name in self._values:
            raise StateError(f'parameter slot {name!r} already exists')
        value = np.array(as_matrix(value), dtype=DTYPE, copy=True)
        self._values[name] = value
        self._grads[name] = np.zeros_like(value)
        return value

    def value(self, name):
        return self._values[name]

    def grad(self, name):
        return self._grads[name]

    def set_value(self, name, value):
        value = as_matrix(value)
        current = self._values[name]
        if value.shape != current.shape:
            raise DimensionError(
                f'slot {name!r} has shape {current.shape}, got {value.shape}'
            )
        current[...] = value

    def accumulate(self, name, grad):
        current = self._grads[name]
        grad = np.asarray(grad, dtype=DTYPE)
        if grad.size != current.size:
            raise DimensionError(
                f'gradient for {name!r} has shape {grad.shape}, '
                f'slot has {current.shape}'
            )
        current += grad.reshape(current.shape)

    def zero_grads(self):
        for grad in self._grads.values():
            grad.fill(0.0)

    def items(self):
        for name, value in self._values.items():
            yield name, value, self._grads[name]

    def names(self, prefix=''):
        return [name for name in self._values if name.startswith(prefix)]

    def snapshot(self):
        return {name: value.copy() for name, value in self._values.items()}

    def restore(self, snapshot):
        for name, value in snapshot.items():
            self.set_value(name, value)


class Tape:
    """
    Intermediates recorded by one forward pass, consumed by one backward pass.
    """

    def __init__(self, backward_fn=None):
        self._saved = {}
        self.backward_fn = backward_fn
        self.consumed = False

    def save(self, **values):
        self._saved.update(values)

    def __getitem__(self, key):
        try:
            return self._saved[key]
        except KeyError:
            raise StateError(f'forward pass did not record {key!r}') from None

    def __contains__(self, key):
        return key in self._saved


def backward(tape, upstream=1.0):
    """
    Run the backward pass recorded on ``tape`` with the given upstream
    gradient, accumulating into the owning ParamStore. Returns whatever the
    recorded backward function returns (input gradients).
    """
    if tape is None or tape.backward_fn is None:
        raise StateError('backward called without a recorded forward pass')
    if tape.consumed:
        raise StateError('backward called twice on the same forward pass')
    tape.consumed = True
    return tape.backward_fn(tape, np.asarray(upstream, dtype=DTYPE))


def sgd_step(params, lr):
    """value <- value - lr * grad for every slot, then zero the gradients."""
    for name, _, grad in params.items():
        check_finite(grad, f'gradient of {name!r}')
    if lr != 0.0:
        for _, value, grad in params.items():
            value -= lr * grad
    params.zero_grads()


def relative_error(analytic, numeric, floor=1e-6):
    analytic = np.asarray(analytic, dtype=DTYPE)
    numeric = np.asarray(numeric, dtype=DTYPE)
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


@dataclass
class GradCheckReport:
    tol: float
    errors: dict = field(default_factory=dict)

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self):
        return all(error < self.tol for error in self.errors.values())

    def failing(self):
        return [name for name, error in self.errors.items() if error >= self.tol]


def grad_check(params, loss_fn, h=1e-5, tol=1e-4, names=None):
    """
    Compare analytic gradients with central finite differences.

    ``loss_fn()`` must be deterministic and return ``(loss, tape)``. Slot
    values are perturbed in place and restored afterwards.
    """
    names = list(params) if names is None else list(names)

    def evaluate():
        loss, tape = loss_fn()
        if not np.isfinite(loss):
            raise NonFiniteLossError(f'loss evaluated to {loss}')
        return float(loss), tape

    params.zero_grads()
    _, tape = evaluate()
    backward(tape, 1.0)
    analytic = {name: params.grad(name).copy() for name in names}
    params.zero_grads()

    report = GradCheckReport(tol=tol)
    for name in names:
        value = params.value(name)
        numeric = np.zeros_like(value)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + h
            plus, _ = evaluate()
            value[index] = original - h
            minus, _ = evaluate()
            value[index] = original
            numeric[index] = (plus - minus) / (2.0 * h)
        report.errors[name] = relative_error(analytic[name], numeric)

    if not report.passed:
        logger.warning('gradient check failed for %s', ', '.join(report.failing()))
    return report
