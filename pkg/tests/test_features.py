"""
Tests for the sentence feature backends, cache and extractor.
"""
import numpy as np
import pytest
import requests

from signface.core.errors import BackendError, ConfigurationError, InvalidInputError, TransportError
from signface.features.cache import FeatureCache
from signface.features.extractor import FeatureExtractor, build_backend, extract_semantic, extract_sentiment
from signface.features.http_backend import HttpBackend
from signface.features.stub import StubBackend, keyword_label, stub_backend
from signface.models.run_config import BackendConfig


def _cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


class FakeResponse:
    def __init__(self, body=None, status=200, invalid_json=False):
        self.body = body
        self.status = status
        self.invalid_json = invalid_json

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.exceptions.HTTPError(f"status {self.status}")

    def json(self):
        if self.invalid_json:
            raise ValueError("not json")
        return self.body


class FakeSession:
    """Records requests and replays a fixed response or error."""

    def __init__(self, response=None, error=None):
        self.response = response
        self.error = error
        self.calls = []

    def post(self, url, json=None, timeout=None):
        self.calls.append((url, json))
        if self.error is not None:
            raise self.error
        return self.response


def test_stub_semantic_is_deterministic():
    backend = stub_backend(seed=0)
    first = extract_semantic("hello", backend)
    second = extract_semantic("hello", backend)
    assert first.shape == (768,)
    assert first.dtype == np.float32
    assert np.array_equal(first, second)


def test_stub_semantic_distinguishes_texts_and_seeds():
    assert not np.array_equal(StubBackend().semantic("hello"), StubBackend().semantic("hellp"))
    assert not np.array_equal(StubBackend(0).semantic("hello"), StubBackend(1).semantic("hello"))


def test_empty_text_is_rejected():
    with pytest.raises(InvalidInputError):
        extract_semantic("", StubBackend())
    with pytest.raises(InvalidInputError):
        extract_sentiment("   ", StubBackend())


def test_forced_label_lands_near_its_prototype():
    backend = StubBackend(forced_label="joy")
    vector, label = extract_sentiment("the train is late", backend)
    assert label == "joy"
    assert _cosine(vector, backend.sentiment_prototype("joy")) > 0.99


def test_sentiment_is_deterministic():
    backend = StubBackend()
    first = extract_sentiment("I miss the river", backend)
    second = extract_sentiment("I miss the river", backend)
    assert np.array_equal(first[0], second[0])
    assert first[1] == second[1] == "sadness"


def test_prototypes_are_separated():
    backend = StubBackend()
    assert _cosine(backend.sentiment_prototype("joy"), backend.sentiment_prototype("anger")) < 0.1


def test_keyword_table():
    assert keyword_label("I am so happy today") == "joy"
    assert keyword_label("I hate rain") == "anger"
    assert keyword_label("the weather") is None
    assert StubBackend().label_for("Happy birthday") == "joy"


def test_extractor_with_override():
    extractor = FeatureExtractor(StubBackend())
    features = extractor.extract("I hate the game", sentiment_override="joy")
    assert features.sentiment_label == "joy"
    np.testing.assert_allclose(features.sentiment, StubBackend().sentiment_prototype("joy"), rtol=1e-6)
    assert features.concatenated().shape == (1536,)
    with pytest.raises(InvalidInputError):
        extractor.extract("I hate the game", sentiment_override="surprise")


def test_cache_hits_return_identical_vectors(tmp_path):
    cache = FeatureCache(tmp_path / "cache")
    extractor = FeatureExtractor(StubBackend(), cache)
    first = extractor.extract("What a wonderful dog")
    second = extractor.extract("What a wonderful dog")
    assert cache.hits == 2
    assert np.array_equal(first.semantic, second.semantic)
    assert np.array_equal(first.sentiment, second.sentiment)
    assert second.sentiment_label == "joy"


def test_cache_ignores_unreadable_records(tmp_path):
    cache = FeatureCache(tmp_path)
    path = cache.put("stub", "semantic", "text", np.ones(768, dtype=np.float32))
    path.write_bytes(b"garbage")
    assert cache.get("stub", "semantic", "text") is None


def test_http_backend_success():
    session = FakeSession(FakeResponse({"embedding": [0.5] * 768, "label": "anger"}))
    backend = HttpBackend("http://localhost:9000/", session=session)
    vector, label = extract_sentiment("I am furious", backend)
    assert label == "anger"
    assert vector.shape == (768,)
    assert session.calls[0][0] == "http://localhost:9000/sentiment"


def test_http_backend_unreachable():
    session = FakeSession(error=requests.exceptions.ConnectionError("refused"))
    with pytest.raises(TransportError):
        HttpBackend("http://localhost:9000", session=session).semantic("hello")


def test_http_backend_bad_responses():
    with pytest.raises(BackendError):
        HttpBackend("http://x", session=FakeSession(FakeResponse(invalid_json=True))).semantic("hello")
    with pytest.raises(BackendError):
        HttpBackend("http://x", session=FakeSession(FakeResponse({"vector": []}))).semantic("hello")
    with pytest.raises(BackendError):
        HttpBackend("http://x", session=FakeSession(FakeResponse(status=500))).semantic("hello")


def test_http_backend_unknown_label():
    session = FakeSession(FakeResponse({"embedding": [0.5] * 768, "label": "surprise"}))
    with pytest.raises(BackendError):
        extract_sentiment("hello", HttpBackend("http://x", session=session))


def test_http_backend_requires_endpoint():
    with pytest.raises(ConfigurationError):
        build_backend(BackendConfig(kind="http"))


def test_cached_features_match_uncached_ones(tmp_path):
    """Test that a miss, a hit and a cache-free extraction give the same vectors."""
    cache = FeatureCache(tmp_path / "cache")
    cached = FeatureExtractor(StubBackend(), cache)
    plain = FeatureExtractor(StubBackend())
    for text in ("I hate the weather", "I miss the old train", "the river on sunday"):
        miss = cached.extract(text)
        hit = cached.extract(text)
        reference = plain.extract(text)
        for features in (miss, hit):
            assert np.array_equal(features.semantic, reference.semantic)
            assert np.array_equal(features.sentiment, reference.sentiment)
            assert features.sentiment_label == reference.sentiment_label
    assert cache.misses == 6
    assert cache.hits == 6
