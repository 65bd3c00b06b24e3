import io

from django.conf import settings
from rest_framework import serializers
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from .data import Document, QueryGroup
from .exceptions import ConfigError, FormatError
from .pipeline import CONV_MODE, MODES, RunConfig

FOLD_PLANS = ['ohsumed', 'contiguous']

SETTING_DEFAULTS = {
    'epochs': 'EPOCHS',
    'batch_size': 'BATCH_SIZE',
    'trunc_len': 'TRUNCATION_LENGTH',
    'filter_sizes': 'FILTER_SIZES',
    'copies': 'FILTER_COPIES',
    'dropout_p': 'DROPOUT',
    'hidden': 'HIDDEN_UNITS',
    'seed': 'SEED',
    'workers': 'WORKERS',
}


class RunConfigSerializer(serializers.Serializer):
    """
    Validates a run configuration. Missing fields fall back to
    ``settings.RANKING``; the learning rate default depends on the mode.
    """
    mode = serializers.ChoiceField(choices=MODES)
    epochs = serializers.IntegerField(min_value=0, required=False)
    lr = serializers.FloatField(min_value=0.0, required=False)
    batch_size = serializers.IntegerField(min_value=1, required=False)
    trunc_len = serializers.IntegerField(min_value=1, required=False)
    filter_sizes = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        allow_empty=False,
        required=False,
    )
    copies = serializers.IntegerField(min_value=1, required=False)
    dropout_p = serializers.FloatField(min_value=0.0, required=False)
    hidden = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    fold = serializers.IntegerField(min_value=1, max_value=5, required=False)
    fold_plan = serializers.ChoiceField(choices=FOLD_PLANS, required=False)
    normalize = serializers.BooleanField(required=False)
    select_on_validation = serializers.BooleanField(required=False)
    workers = serializers.IntegerField(min_value=1, required=False)
    dataset = serializers.CharField(required=False, allow_null=True)
    embeddings = serializers.CharField(required=False, allow_null=True)

    def validate_dropout_p(self, value):
        if value >= 1.0:
            raise serializers.ValidationError('dropout must be less than 1.')
        return value

    def validate_filter_sizes(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError('filter sizes must be distinct.')
        return sorted(value)

    def validate(self, attrs):
        ranking = settings.RANKING
        for field_name, setting in SETTING_DEFAULTS.items():
            attrs.setdefault(field_name, ranking[setting])
        attrs.setdefault('lr', ranking['LEARNING_RATE'][attrs['mode']])

        if attrs['mode'] == CONV_MODE and not attrs.get('embeddings'):
            raise serializers.ValidationError({
                'embeddings': 'convranknet mode needs an embedding file.',
            })
        return attrs

    def create(self, validated_data):
        return RunConfig.from_dict(validated_data)


def validated_run_config(data):
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigError(_flatten_errors(serializer.errors))
    return serializer.save()


def _flatten_errors(errors):
    parts = []
    for field_name, messages in errors.items():
        if isinstance(messages, dict):
            messages = [_flatten_errors(messages)]
        parts.append(f'{field_name}: {" ".join(str(m) for m in messages)}')
    return '; '.join(parts)


def load_json_object(path):
    try:
        with open(path, 'rb') as handle:
            data = JSONParser().parse(handle)
    except ParseError as exc:
        raise ConfigError(f'{path}: {exc.detail}') from None
    if not isinstance(data, dict):
        raise ConfigError(f'{path} must hold a JSON object')
    return data


class DocumentSerializer(serializers.Serializer):
    doc_id = serializers.CharField()
    grade = serializers.IntegerField(min_value=0, max_value=2)
    text = serializers.CharField(allow_blank=True, trim_whitespace=False)


class QueryGroupSerializer(serializers.Serializer):
    query_id = serializers.IntegerField()
    query_text = serializers.CharField(allow_blank=True, trim_whitespace=False)
    docs = DocumentSerializer(many=True)

    def validate_docs(self, docs):
        doc_ids = [doc['doc_id'] for doc in docs]
        if len(set(doc_ids)) != len(doc_ids):
            raise serializers.ValidationError('document ids must be unique within a query.')
        return docs

    def create(self, validated_data):
        docs = tuple(Document(**doc) for doc in validated_data['docs'])
        return QueryGroup(
            query_id=validated_data['query_id'],
            query_text=validated_data['query_text'],
            docs=docs,
        )


def write_text_groups(groups, path):
    renderer = JSONRenderer()
    with open(path, 'wb') as handle:
        for group in groups:
            handle.write(renderer.render(QueryGroupSerializer(group).data))
            handle.write(b'\n')


def read_text_groups(path):
    groups = []
    parser = JSONParser()
    with open(path, 'rb') as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = parser.parse(io.BytesIO(line))
            except ParseError as exc:
                raise FormatError(str(exc.detail), line=lineno) from None
            serializer = QueryGroupSerializer(data=data)
            if not serializer.is_valid():
                raise FormatError(_flatten_errors(serializer.errors), line=lineno)
            groups.append(serializer.save())
    return groups


class BlockSerializer(serializers.Serializer):
    name = serializers.CharField()
    shape = serializers.ListField(
        child=serializers.IntegerField(min_value=0), min_length=2, max_length=2,
    )


class ModelHeaderSerializer(serializers.Serializer):
    format_version = serializers.IntegerField(min_value=1)
    mode = serializers.ChoiceField(choices=MODES)
    input_dim = serializers.IntegerField(min_value=1)
    config = serializers.DictField()
    blocks = BlockSerializer(many=True)

    def validate(self, attrs):
        if attrs['config'].get('mode') != attrs['mode']:
            raise serializers.ValidationError('header mode does not match the config echo.')
        return attrs
