import math

import torch
from fastapi.testclient import TestClient

from oracle_service.app import create_app
from oracle_service.config import Settings

from conftest import MODEL_ID


def predict(client, tokens, target, candidates=None):
    payload = {"tokens": tokens, "target_position": target}
    if candidates is not None:
        payload["candidates"] = candidates
    return client.post("/v1/masked_predict", json=payload)


# -- health ----------------------------------------------------------------


def test_healthz_reports_model(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "model_id": MODEL_ID}


def test_unloaded_model_reports_unavailable():
    app = create_app(model=None, settings=Settings(model_id="absent/model"))
    # skip startup loading by calling the route directly without the context
    client = TestClient(app)
    assert client.get("/healthz").status_code == 503
    response = predict(client, ["[MASK]"], 0, ["the"])
    assert response.status_code == 503


# -- masked prediction -------------------------------------------------------


def test_candidate_probability_for_masked_conditional(client):
    response = predict(client, ["she", "[MASK]", "[MASK]"], 1, ["answered"])
    assert response.status_code == 200
    body = response.json()
    assert body["model_id"] == MODEL_ID
    probability = body["probabilities"]["answered"]
    assert 0.0 < probability < 1.0
    assert body["tokenization_note"]["answered"] == 1


def test_identical_requests_return_identical_bodies(client):
    first = predict(client, ["the", "[MASK]", "eat", "."], 1, ["kids", "candy"])
    second = predict(client, ["the", "[MASK]", "eat", "."], 1, ["kids", "candy"])
    assert first.json() == second.json()


def test_full_vocabulary_sums_to_one(client):
    response = predict(client, ["the", "[MASK]", "."], 1)
    body = response.json()
    total = sum(body["probabilities"].values())
    assert abs(total - 1.0) <= 1e-6
    assert all(0.0 <= p <= 1.0 for p in body["probabilities"].values())


def test_multi_subword_candidate_fans_out(client, tiny_model):
    response = predict(client, ["the", "[MASK]", "."], 1, ["playground", "candy"])
    body = response.json()
    assert body["tokenization_note"] == {"playground": 2, "candy": 1}

    # reference: two mask slots, geometric mean of the piece probabilities
    tok = tiny_model.tokenizer
    ids = tok.convert_tokens_to_ids(
        ["[CLS]", "the", "[MASK]", "[MASK]", ".", "[SEP]"]
    )
    with torch.no_grad():
        logits = tiny_model.model(input_ids=torch.tensor([ids])).logits[0]
    log_play = torch.log_softmax(logits[2].double(), -1)[
        tok.convert_tokens_to_ids("play")
    ]
    log_ground = torch.log_softmax(logits[3].double(), -1)[
        tok.convert_tokens_to_ids("##ground")
    ]
    expected = math.exp((float(log_play) + float(log_ground)) / 2)
    assert body["probabilities"]["playground"] == round(
        body["probabilities"]["playground"], 20
    )
    assert abs(body["probabilities"]["playground"] - expected) <= 1e-9


def test_unknown_word_in_context_is_tolerated(client):
    response = predict(client, ["zzzunknown", "[MASK]"], 1, ["candy"])
    assert response.status_code == 200


# -- error paths ----------------------------------------------------------------


def test_target_must_be_masked(client):
    assert predict(client, ["the", "kids"], 0, ["candy"]).status_code == 400
    assert predict(client, ["[MASK]"], 4, ["candy"]).status_code == 400


def test_schema_errors_are_400(client):
    response = client.post("/v1/masked_predict", json={"tokens": ["a"]})
    assert response.status_code == 400
    response = client.post("/v1/masked_predict", json={"tokens": [], "target_position": 0})
    assert response.status_code == 400


def test_over_long_sequence_is_413(client):
    tokens = ["the"] * 40 + ["[MASK]"]
    response = predict(client, tokens, 40, ["candy"])
    assert response.status_code == 413


# -- batch ----------------------------------------------------------------------


def test_batch_of_one_equals_single_call(client):
    request = {"tokens": ["the", "[MASK]"], "target_position": 1, "candidates": ["kids"]}
    single = client.post("/v1/masked_predict", json=request).json()
    batched = client.post("/v1/batch", json=[request]).json()
    assert batched == [single]


def test_batch_preserves_order(client):
    requests = [
        {"tokens": ["the", "[MASK]"], "target_position": 1, "candidates": ["kids"]},
        {"tokens": ["[MASK]", "kids"], "target_position": 0, "candidates": ["the"]},
        {"tokens": ["she", "[MASK]"], "target_position": 1, "candidates": ["answered"]},
    ]
    straight = client.post("/v1/batch", json=requests).json()
    shuffled = client.post("/v1/batch", json=requests[::-1]).json()
    assert shuffled == straight[::-1]


def test_oversize_batch_is_413(client):
    request = {"tokens": ["[MASK]"], "target_position": 0, "candidates": ["the"]}
    response = client.post("/v1/batch", json=[request] * 9)  # max is 8
    assert response.status_code == 413
