"""Paths to the data files bundled with the package."""

from importlib import resources


def _data_path(name: str):
    return resources.files("soess").joinpath("data").joinpath(name)


def default_lexicon_path():
    return _data_path("lexicon.txt")


def default_code_rules_path():
    return _data_path("code_token_rules.tsv")


def default_patterns_path():
    return _data_path("patterns.txt")
