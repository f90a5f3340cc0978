import pytest

from biposlm.corpus import load_tagmap, read_lob, split_corpus
from biposlm.fixtures import fixture_path
from biposlm.models import train_bipos

MICRO_SPLIT = 1500


@pytest.fixture(scope="session")
def micro_tagmap():
    return load_tagmap(fixture_path("micro_tags.tsv"))


@pytest.fixture(scope="session")
def micro(micro_tagmap):
    return read_lob(fixture_path("micro.txt"), micro_tagmap)


@pytest.fixture(scope="session")
def micro_split(micro):
    return split_corpus(micro, MICRO_SPLIT)


@pytest.fixture(scope="session")
def micro_model(micro_split, micro_tagmap):
    train, _ = micro_split
    return train_bipos(train, None, micro_tagmap.target())


# lines appended by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
