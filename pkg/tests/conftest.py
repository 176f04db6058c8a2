import pytest

import corpus_fixture
from rmd.corpus import StubEmbedder, build_database

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(ACCEPTANCE, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    return corpus_fixture.build(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def fixture_db(fixture_corpus):
    return build_database(fixture_corpus.motion_dir, fixture_corpus.annotations, fixture_corpus.fresh_llm(),
                          StubEmbedder())
