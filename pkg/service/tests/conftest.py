import pytest
import torch
from fastapi.testclient import TestClient
from transformers import BertConfig, BertForMaskedLM, BertTokenizer

from oracle_service.app import create_app
from oracle_service.config import Settings
from oracle_service.model import MaskedLanguageModel

# Tiny word-level vocabulary plus one wordpiece pair so that "playground"
# fans out into two pieces.
VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "kids", "eat", "candy", "small", "quickly", ".",
    "she", "answered", "left", "ball", "wooden", "play", "##ground",
]

MODEL_ID = "tiny-random-bert"


def build_tiny_model(tmp_path) -> MaskedLanguageModel:
    vocab_file = tmp_path / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB), encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    model = BertForMaskedLM(config)
    return MaskedLanguageModel(
        model, tokenizer, model_id=MODEL_ID, max_sequence_length=32
    )


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory):
    return build_tiny_model(tmp_path_factory.mktemp("tiny-bert"))


@pytest.fixture(scope="session")
def app(tiny_model):
    settings = Settings(model_id=MODEL_ID, max_sequence_length=32, max_batch_size=8)
    return create_app(model=tiny_model, settings=settings)


@pytest.fixture()
def client(app):
    with TestClient(app) as test_client:
        yield test_client
