"""Masked-LM scoring core.

The service receives word-level token lists with the literal "[MASK]"
sentinel; the model works on subword pieces. Context words expand to their
pieces, non-target masked slots stay a single mask piece, and the target
slot is widened to as many mask pieces as the candidate being scored needs.
A multi-piece candidate's probability is the geometric mean of its piece
probabilities (reported per candidate as the fan-out), which keeps scores
comparable across candidates of different piece counts.

Inference runs in eval mode under no_grad and is serialized behind a lock,
so concurrent identical requests return identical bodies.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import torch

MASK = "[MASK]"


class SequenceTooLong(Exception):
    """The pieced input exceeds the model's sequence budget."""


class BadQuery(Exception):
    """Malformed query semantics (target not a mask, out of bounds...)."""


@dataclass
class PredictionResult:
    probabilities: dict[str, float]
    fanout: dict[str, int]


class MaskedLanguageModel:
    def __init__(self, model, tokenizer, model_id: str, max_sequence_length: int = 512):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.model_id = model_id
        self.max_sequence_length = max_sequence_length
        self._lock = threading.Lock()
        self._mask_id = tokenizer.convert_tokens_to_ids(tokenizer.mask_token)

    @classmethod
    def load(cls, model_id: str, max_sequence_length: int = 512, device: str = "cpu"):
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForMaskedLM.from_pretrained(model_id).to(device)
        return cls(model, tokenizer, model_id, max_sequence_length)

    def vocabulary(self) -> list[str]:
        """Every tokenizer vocabulary entry, special tokens included.

        The full-vocabulary response covers the model's whole softmax
        support, so its probabilities sum to one.
        """
        return [
            token
            for token, _ in sorted(self.tokenizer.get_vocab().items(), key=lambda kv: kv[1])
        ]

    def _word_pieces(self, word: str) -> list[str]:
        pieces = self.tokenizer.tokenize(word)
        if not pieces:
            pieces = [self.tokenizer.unk_token]
        return pieces

    def predict(
        self,
        tokens: list[str],
        target_position: int,
        candidates: list[str] | None = None,
    ) -> PredictionResult:
        """Probability of each candidate filling the target slot.

        Without an explicit candidate list, the full (single-piece)
        vocabulary is scored, whose probabilities sum to one.
        """
        if not tokens:
            raise BadQuery("empty token list")
        if not (0 <= target_position < len(tokens)):
            raise BadQuery(f"target position {target_position} out of bounds")
        if tokens[target_position] != MASK:
            raise BadQuery("target position must hold the [MASK] sentinel")

        if candidates is None:
            pieced = {token: [token] for token in self.vocabulary()}
        else:
            pieced = {c: self._word_pieces(c) for c in candidates}

        probabilities: dict[str, float] = {}
        fanout: dict[str, int] = {}
        by_width: dict[int, list[str]] = {}
        for candidate, pieces in pieced.items():
            by_width.setdefault(len(pieces), []).append(candidate)

        for width, group in sorted(by_width.items()):
            log_piece_probs = self._target_log_probs(tokens, target_position, width)
            for candidate in group:
                piece_ids = self.tokenizer.convert_tokens_to_ids(pieced[candidate])
                logs = [log_piece_probs[slot][pid] for slot, pid in enumerate(piece_ids)]
                probabilities[candidate] = math.exp(sum(logs) / width)
                fanout[candidate] = width
        return PredictionResult(probabilities=probabilities, fanout=fanout)

    def _target_log_probs(
        self, tokens: list[str], target_position: int, width: int
    ) -> list[torch.Tensor]:
        """Log-softmax rows at the target slots, widened to `width` masks."""
        ids: list[int] = [self.tokenizer.cls_token_id]
        target_slots: list[int] = []
        for position, word in enumerate(tokens):
            if position == target_position:
                target_slots = [len(ids) + k for k in range(width)]
                ids.extend([self._mask_id] * width)
            elif word == MASK:
                ids.append(self._mask_id)
            else:
                ids.extend(
                    self.tokenizer.convert_tokens_to_ids(self._word_pieces(word))
                )
        ids.append(self.tokenizer.sep_token_id)
        if len(ids) > self.max_sequence_length:
            raise SequenceTooLong(
                f"{len(ids)} pieces exceed the {self.max_sequence_length} budget"
            )

        with self._lock, torch.no_grad():
            logits = self.model(input_ids=torch.tensor([ids])).logits[0]
        # float64 so full-vocabulary sums hold to well under 1e-6
        return [
            torch.log_softmax(logits[slot].double(), dim=-1) for slot in target_slots
        ]
