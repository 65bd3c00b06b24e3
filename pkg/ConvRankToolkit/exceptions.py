from rest_framework.exceptions import APIException


class RankingError(APIException):
    """
    Base class for every error raised by the toolkit.

    ``detail`` is the one-line cause management commands report.
    """
    default_detail = 'A ranking toolkit error occurred.'
    default_code = 'error'


class RankingArgumentError(RankingError, ValueError):
    default_detail = 'Invalid argument.'
    default_code = 'invalid_argument'


class DimensionError(RankingError):
    default_detail = 'Array dimensions do not match.'
    default_code = 'dimension_mismatch'


class StateError(RankingError):
    default_detail = 'Operation called in an invalid state.'
    default_code = 'invalid_state'


class GradientError(RankingError):
    default_detail = 'Non-finite gradient.'
    default_code = 'non_finite_gradient'


class NonFiniteLossError(RankingError):
    default_detail = 'Loss is not finite.'
    default_code = 'non_finite_loss'


class TrainingError(RankingError):
    default_detail = 'Training aborted.'
    default_code = 'training_aborted'


class FormatError(RankingError):
    default_detail = 'Malformed input file.'
    default_code = 'format_error'

    def __init__(self, detail=None, line=None, code=None):
        self.line = line
        if line is not None and detail is not None:
            detail = f'line {line}: {detail}'
        super().__init__(detail, code)


class LabelError(RankingError):
    default_detail = 'Unknown relevance grade.'
    default_code = 'unknown_grade'


class ConfigError(RankingError):
    default_detail = 'Invalid configuration.'
    default_code = 'invalid_config'


class FoldAssignmentError(RankingError):
    default_detail = 'Query id cannot be assigned to a fold.'
    default_code = 'fold_assignment'


class PreconditionError(RankingError):
    default_detail = 'Precondition violated.'
    default_code = 'precondition'


class InconsistentComparatorError(RankingError):
    default_detail = 'Comparator prefers both documents of a pair.'
    default_code = 'inconsistent_comparator'


class UndefinedTestError(RankingError):
    default_detail = 'Test statistic is undefined: all differences are zero.'
    default_code = 'undefined_test'


class PairingError(RankingError):
    default_detail = 'Records cannot be paired.'
    default_code = 'unpairable'
