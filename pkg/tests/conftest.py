import os

import pytest

from klassen.repository.source_data import QuelltextData

BENCHMARKS = os.path.join(os.path.dirname(os.path.dirname(__file__)), "benchmarks")
GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def benchmark_pfad(name: str, endung: str) -> str:
    return os.path.join(BENCHMARKS, f"{name}.{endung}")


@pytest.fixture
def benchmark():
    """ Liefert (schema, programm, bedingungen) eines mitgelieferten Benchmarks """
    def laden(name: str):
        bedingungen = benchmark_pfad(name, "init")
        return QuelltextData(benchmark_pfad(name, "schema"), benchmark_pfad(name, "txn"),
                             bedingungen if os.path.exists(bedingungen) else None).laden()
    return laden


@pytest.fixture
def golden():
    def lesen(name: str) -> str:
        with open(os.path.join(GOLDEN, name), 'r', encoding='utf-8') as datei:
            return datei.read()
    return lesen


@pytest.fixture
def cli_runner():
    from app import anomalie_app
    return anomalie_app.test_cli_runner()


@pytest.fixture
def benchmark_datei():
    return benchmark_pfad
