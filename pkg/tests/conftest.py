import pytest

from pias.evidence import build_training_set
from pias.native_scorer import AdamConfig, TfidfLogisticModel
from pias.synth import phase_graded_corpus, planted_corpus, synthetic_annotations


@pytest.fixture(scope="session")
def planted():
    return planted_corpus(seed=0)


@pytest.fixture(scope="session")
def graded():
    return phase_graded_corpus(seed=0)


@pytest.fixture(scope="session")
def evidence_scorer():
    pairs = build_training_set(synthetic_annotations(seed=1), ratio=4, seed=1)
    model = TfidfLogisticModel(config=AdamConfig(lr=0.5, epochs=30, batch_size=32), seed=7)
    model.fit([(text, 1 if label else 0) for text, label in pairs])
    return model
