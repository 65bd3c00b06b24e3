import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ConvRank.settings')
django.setup()
