"""
Django settings for the ConvRank project.

The project has no web surface: Django provides the settings layer, the
logging configuration and ``manage.py`` commands that drive the ranking
toolkit in ``ConvRankToolkit``.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'convrank-local-only')

DEBUG = os.environ.get('DJANGO_DEBUG', '') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'ConvRankToolkit',
]

# No models, no database.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],

    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],

    'UNAUTHENTICATED_USER': None,
}


# Ranking defaults. Every RunConfig field missing from the command line
# and from --config falls back to these values.

RANKING = {
    'EPOCHS': 500,

    'LEARNING_RATE': {
        'ranknet-features': 1e-5,
        'convranknet': 1e-3,
    },

    'BATCH_SIZE': 64,

    'TRUNCATION_LENGTH': 100,

    'FILTER_SIZES': [3, 4, 5],
    'FILTER_COPIES': 10,
    'DROPOUT': 0.5,

    'HIDDEN_UNITS': 10,

    'SEED': int(os.environ.get('CONVRANK_SEED', 0)),
    'WORKERS': int(os.environ.get('CONVRANK_WORKERS', 1)),

    'K_MAX': 10,
    'SIGNIFICANCE_CUTOFF': 10,
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'timestamped': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'timestamped',
        },
    },
    'loggers': {
        'ConvRankToolkit': {
            'handlers': ['console'],
            'level': os.environ.get('CONVRANK_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
