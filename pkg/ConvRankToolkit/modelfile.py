"""
Self-describing binary model files.

Layout: the 8-byte magic ``CRNKMDL1``, a little-endian uint32 header
length, a JSON header (format version, mode, input dimension, the config
echo and the list of parameter blocks) and then every block as row-major
little-endian float64 values, in header order.
"""
import io
import logging
import struct

import numpy as np
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from .exceptions import ConfigError, FormatError
from .pipeline import RunConfig, build_model, model_input_dim
from .serializers import ModelHeaderSerializer

logger = logging.getLogger(__name__)

MAGIC = b'CRNKMDL1'
FORMAT_VERSION = 1
BLOCK_DTYPE = np.dtype('<f8')
LENGTH = struct.Struct('<I')


def _header(model, config):
    return {
        'format_version': FORMAT_VERSION,
        'mode': model.mode,
        'input_dim': model_input_dim(model),
        'config': config.model_dict(),
        'blocks': [
            {'name': name, 'shape': list(value.shape)}
            for name, value, _ in model.params.items()
        ],
    }


def save_model(model, config, path):
    if model.mode != config.mode:
        raise ConfigError(f'cannot save a {model.mode} model under a {config.mode} config')
    header = JSONRenderer().render(_header(model, config))
    with open(path, 'wb') as handle:
        handle.write(MAGIC)
        handle.write(LENGTH.pack(len(header)))
        handle.write(header)
        for _, value, _ in model.params.items():
            handle.write(np.ascontiguousarray(value, dtype=BLOCK_DTYPE).tobytes())
    logger.info('saved %s model with %d blocks to %s', model.mode, len(model.params), path)


def _read_exact(handle, size, what):
    data = handle.read(size)
    if len(data) != size:
        raise FormatError(f'model file truncated in {what}')
    return data


def read_header(handle):
    if _read_exact(handle, len(MAGIC), 'magic') != MAGIC:
        raise FormatError('not a model file (bad magic)')
    (length,) = LENGTH.unpack(_read_exact(handle, LENGTH.size, 'header length'))
    raw = _read_exact(handle, length, 'header')
    try:
        data = JSONParser().parse(io.BytesIO(raw))
    except ParseError as exc:
        raise FormatError(f'unreadable model header: {exc.detail}') from None
    serializer = ModelHeaderSerializer(data=data)
    if not serializer.is_valid():
        raise FormatError(f'invalid model header: {serializer.errors}')
    header = serializer.validated_data
    if header['format_version'] != FORMAT_VERSION:
        raise FormatError(f'unsupported model format version {header["format_version"]}')
    return header


def load_model(path):
    """Return ``(model, config)``; the config carries no dataset paths."""
    with open(path, 'rb') as handle:
        header = read_header(handle)
        config = RunConfig.from_dict(header['config'])
        model = build_model(config, header['input_dim'])

        expected = [(name, value.shape) for name, value, _ in model.params.items()]
        stored = [(block['name'], tuple(block['shape'])) for block in header['blocks']]
        if expected != stored:
            raise FormatError(
                f'parameter blocks {stored} do not match the {config.mode} model layout {expected}'
            )
        for name, shape in stored:
            count = int(np.prod(shape))
            raw = _read_exact(handle, count * BLOCK_DTYPE.itemsize, f'block {name!r}')
            model.params.set_value(name, np.frombuffer(raw, dtype=BLOCK_DTYPE).reshape(shape))
        if handle.read(1):
            raise FormatError('trailing bytes after the last parameter block')
    logger.info('loaded %s model from %s', config.mode, path)
    return model, config
