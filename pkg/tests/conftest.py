import pytest

from codetect import fixtures, qa, splits


@pytest.fixture(scope="session")
def fixture_corpus():
    return fixtures.make_fixture_corpus(600)


@pytest.fixture(scope="session")
def qa_corpus(fixture_corpus):
    clean, _ = qa.run_qa(fixture_corpus)
    return clean


@pytest.fixture(scope="session")
def split_corpus(qa_corpus):
    assigned, _ = splits.assign_splits(qa_corpus, splits.SplitAssignment(seed=11))
    return assigned
