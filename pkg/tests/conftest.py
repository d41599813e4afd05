import numpy as np
import pytest

from brakemine import synthkit


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


@pytest.fixture(scope="session")
def small_corpus():
    """One noise-free log per behavior category (session-cached: tagging is
    the slow part of the suite)."""
    return {
        lab.log.log_id: lab
        for lab in (
            synthkit.generate(synthkit.ScenarioSpec(category=c, seed=11))
            for c in synthkit.BEHAVIOR_CATEGORIES
        )
    }


@pytest.fixture(scope="session")
def tagged_corpus(small_corpus):
    from brakemine import preprocess, tagger

    out = {}
    for log_id, lab in small_corpus.items():
        plog, _ = preprocess.preprocess_log(lab.log)
        out[log_id] = (lab, tagger.tag_log(plog))
    return out
