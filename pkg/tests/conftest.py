import time

import pytest

from opbayes.corpus import BENIGN, MALWARE, Dataset, OpcodeHistogram, Sample


@pytest.fixture(scope="session", autouse=True)
def _suite_runtime_budget():
    """The whole suite has to stay comfortably runnable; fail the run if it
    crosses the sixty-second line."""
    started = time.perf_counter()
    yield
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"test suite took {elapsed:.1f}s, budget is 60s"


def make_sample(sample_id, label, size_bytes, counts):
    return Sample(sample_id, label, size_bytes, OpcodeHistogram(dict(counts), sum(counts.values())))


@pytest.fixture
def toy_dataset():
    """Two files per class with hand-checkable class means:
    benign push=3.0 mov=2.0, malware push=1.0 jmp=4.0."""
    return Dataset(
        (
            make_sample("b1", BENIGN, 1000, {"push": 4, "mov": 2}),
            make_sample("b2", BENIGN, 2000, {"push": 2, "mov": 2}),
            make_sample("m1", MALWARE, 1500, {"push": 1, "jmp": 4}),
            make_sample("m2", MALWARE, 2500, {"push": 1, "jmp": 4}),
        )
    )


@pytest.fixture(scope="session")
def bench_corpus(tmp_path_factory):
    """The default synthetic benchmark corpus, generated once per run."""
    from opbayes.corpus import load_manifest
    from opbayes.synth import generate_corpus

    root = tmp_path_factory.mktemp("bench")
    summary = generate_corpus(root, seed=0)
    dataset = load_manifest(summary.manifest_path)
    return summary, dataset


@pytest.fixture(scope="session")
def bench_split(bench_corpus):
    from opbayes.evaluate import split

    _, dataset = bench_corpus
    return split(dataset, 0.2, 0)
