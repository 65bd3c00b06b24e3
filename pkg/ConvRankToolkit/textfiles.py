"""
Line-oriented reading of UTF-8 input files.

Bad bytes surface as a :class:`FormatError` naming the line, the same way
every other malformed input is reported.
"""
from .exceptions import FormatError

ENCODING = 'utf-8'


def read_lines(path):
    """Yield ``(lineno, line)`` with ``\\r\\n`` endings normalised to ``\\n``."""
    with open(path, 'rb') as handle:
        for lineno, raw in enumerate(handle, start=1):
            try:
                line = raw.decode(ENCODING)
            except UnicodeDecodeError as exc:
                raise FormatError(
                    f'{path} is not valid UTF-8 (byte {exc.start})', line=lineno
                ) from None
            if line.endswith('\r\n'):
                line = line[:-2] + '\n'
            yield lineno, line
