from django.apps import AppConfig


class ConvranktoolkitConfig(AppConfig):
    name = 'ConvRankToolkit'
    verbose_name = 'ConvRank learning-to-rank toolkit'
