"""Annotation sidecar: HTTP contract, determinism, schema compatibility."""

import pytest
from fastapi.testclient import TestClient

from bridgekit_sidecar.annotate import rule_annotate
from bridgekit_sidecar.app import create_app

FIXTURE_TEXT = "There is a house. The door is red."


@pytest.fixture
def client():
    with TestClient(create_app()) as client:
        yield client


def test_annotate_fixture_sentence(client):
    resp = client.post("/annotate", json={"text": FIXTURE_TEXT})
    assert resp.status_code == 200
    body = resp.json()
    assert body["model"] == "rule-0.1"
    words = [t["text"] for t in body["tokens"]]
    assert words == [
        "There", "is", "a", "house", ".", "The", "door", "is", "red", ".",
    ]
    assert [t["sentence_index"] for t in body["tokens"]] == [0] * 5 + [1] * 5
    assert len(body["pos"]) == len(body["tokens"])
    assert len(body["deps"]) == len(body["tokens"])

    spans = {(m["start"], m["end"]) for m in body["mentions"]}
    assert len(spans) >= 2
    assert (2, 3) in spans  # "a house"
    assert (5, 6) in spans  # "The door"


def test_same_text_twice_is_identical(client):
    a = client.post("/annotate", json={"text": FIXTURE_TEXT}).json()
    b = client.post("/annotate", json={"text": FIXTURE_TEXT}).json()
    assert a == b


def test_empty_body_is_400(client):
    assert client.post("/annotate", json={"text": ""}).status_code == 400
    assert client.post("/annotate", json={"text": "   \n"}).status_code == 400


def test_unknown_model_is_400(client):
    resp = client.post("/annotate", json={"text": "Hi there.", "model": "bogus"})
    assert resp.status_code == 400


def test_unloaded_neural_model_is_503(client):
    resp = client.post(
        "/annotate", json={"text": "Hi there.", "model": "gum-style"}
    )
    assert resp.status_code == 503


def test_health_transitions_503_to_200():
    app = create_app(preload=())
    with TestClient(app) as client:
        assert client.get("/health").status_code == 503  # warmup window
        app.state.registry.load("rule")
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert "rule" in body["models"]
        assert body["version"]


def test_unknown_route_is_404(client):
    assert client.get("/nope").status_code == 404


def test_coreference_chains_with_singletons():
    result = rule_annotate("A dog barked . The dog was hungry . The cat is small .")
    chains = {}
    for m in result.mentions:
        chains.setdefault(m.chain_id, []).append(
            " ".join(t.text for t in result.tokens[m.start : m.end + 1])
        )
    assert ["A dog", "The dog"] in chains.values()  # shared head noun
    assert ["The cat"] in chains.values()  # singleton gets a chain too
    assert all(m.chain_id for m in result.mentions)


def test_mentions_never_cross_sentences():
    result = rule_annotate("She saw the old house. Door frames creaked loudly.")
    for m in result.mentions:
        sentences = {
            t.sentence_index for t in result.tokens[m.start : m.end + 1]
        }
        assert len(sentences) == 1


def test_response_passes_corpus_validation():
    # The primary package must accept sidecar output as a document.
    corpus_model = pytest.importorskip("bridgekit.corpus")
    result = rule_annotate(FIXTURE_TEXT)
    doc, excluded = corpus_model.document_from_dict(
        result.to_document_dict("sidecar_doc")
    )
    assert excluded == 0
    assert doc.n_sentences == 2
    assert {m.text for m in doc.mentions} >= {"a house", "The door"}
    for mention in doc.mentions:
        assert doc.chain(mention.chain_id)  # chain ids all resolve
