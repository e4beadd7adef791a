"""Mutant annotation, windowing, and the token vocabulary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

MST = "MST"
MSP = "MSP"
UNK = "<unk>"
BOS = "<s>"


@dataclass(frozen=True)
class SelectorConfig:
    max_len: int = 500
    embedding_dim: int = 256
    epochs: int = 10
    seed: int = 0
    token_dim: int = 32
    batch_size: int = 32
    learning_rate: float = 0.005
    n_trees: int = 100

    def __post_init__(self):
        if self.max_len < 16:
            raise ValueError("max_len must be at least 16")
        if self.embedding_dim < 8 or self.embedding_dim % 2:
            raise ValueError("embedding_dim must be an even number >= 8")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")


@dataclass(frozen=True)
class TokenSequence:
    tokens: Tuple[str, ...]
    mutation_index: int

    def text(self) -> str:
        return " ".join(self.tokens)


class StatementNotFound(LookupError):
    pass


def _literal_kind(text: str) -> str:
    return {"0": "ZERO", "1": "ONE", "-1": "NEG_ONE"}.get(text, "LIT")


def operator_tail(mutant) -> List[str]:
    """Tokens after MSP: the operator tag plus its from/to tokens.

    Literal values are replaced by small symbolic kinds so that the tail does
    not leak subject-specific constants into the vocabulary.
    """
    op = mutant.operator
    if op.tag == "LVR" and op.from_token not in ("true", "false"):
        old, new = int(op.from_token), int(op.to_token)
        if new in (0, 1, -1):
            to_kind = _literal_kind(op.to_token)
        else:
            to_kind = "INC" if new == old + 1 else "DEC"
        return [op.tag, _literal_kind(op.from_token), to_kind]
    return [op.tag] + [t for t in (op.from_token, op.to_token) if t]


def annotate_and_window(abstracted: str, mutant, config: SelectorConfig) -> TokenSequence:
    tokens = abstracted.split()
    start, end = mutant.span
    if not (0 <= start < end <= len(tokens)):
        raise StatementNotFound(f"statement {mutant.statement_index} not found in token stream")
    tail = [MSP] + operator_tail(mutant)
    stmt = tokens[start:end]
    room = config.max_len - 1 - len(tail)
    if len(stmt) > room:
        stmt = stmt[:room]
    core = [MST] + stmt + tail
    left, right = tokens[:start], tokens[end:]
    spare = config.max_len - len(core)
    take_l = min(len(left), spare // 2)
    take_r = min(len(right), spare - take_l)
    take_l = min(len(left), spare - take_r)
    window = left[len(left) - take_l:] + core + right[:take_r]
    return TokenSequence(tuple(window), take_l)


class Vocab:
    """Token <-> integer table; index 0 is UNK, 1 is the decoder start symbol."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: List[str] = [UNK, BOS]
        self.stoi: Dict[str, int] = {UNK: 0, BOS: 1}
        for t in tokens:
            self.add(t)

    def add(self, token: str) -> int:
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    @classmethod
    def build(cls, sequences: Iterable[TokenSequence]) -> "Vocab":
        seen = set()
        for s in sequences:
            seen.update(s.tokens)
        return cls(sorted(seen))

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.stoi.get(t, 0) for t in tokens]

    def __len__(self) -> int:
        return len(self.itos)
