"""Shared fixtures: the reference corpus and small synthetic datasets."""

import numpy as np
import pytest

from wedgekit.dataset import synthesize
from wedgekit.editdist import apx_matrices
from wedgekit.refcorpus import build_reference_dataset


@pytest.fixture(scope="session")
def corpus():
    return build_reference_dataset()


@pytest.fixture(scope="session")
def corpus_labels(corpus):
    return np.asarray(corpus.labels)


@pytest.fixture(scope="session")
def corpus_apx(corpus):
    """(APX1, APX2) full distance matrices over the reference corpus."""
    return apx_matrices(corpus.graphs)


@pytest.fixture(scope="session")
def small_synth():
    return synthesize(classes=4, per_class=5, wedge_range=(1, 3), seed=5)
