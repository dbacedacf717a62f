"""On-the-fly synthesis of training and evaluation samples.

Example ``i`` of a stream is a pure function of ``(seed, stream tag, i)``:
its message letters are read first from the example's Philox substream,
then its key (length, then letters; redrawn while it is a holdout key).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

from . import rng
from .ciphers import (
    LETTERS,
    autokey_decrypt,
    autokey_encrypt,
    vigenere_decrypt,
    vigenere_encrypt,
)
from .encoding import Batch, Sample, assemble_batch, build_attack_sample, build_decryption_sample
from .enigma import DEFAULT_CONFIG, encipher_message


def _enigma(key: str, text: str) -> str:
    return encipher_message(DEFAULT_CONFIG, key, text)


# name -> (encrypt, decrypt)
CIPHERS: dict[str, tuple[Callable[[str, str], str], Callable[[str, str], str]]] = {
    "vigenere": (vigenere_encrypt, vigenere_decrypt),
    "autokey": (autokey_encrypt, autokey_decrypt),
    "enigma": (_enigma, _enigma),
}
TASKS = ("decrypt", "attack")


@dataclass(frozen=True)
class GenConfig:
    cipher: str = "vigenere"
    message_len: int = 14
    key_len_min: int = 1
    key_len_max: int = 6
    holdout_keys: tuple[str, ...] = ("KEY",)
    seed: int = 0
    task: str = "decrypt"

    def __post_init__(self):
        object.__setattr__(self, "holdout_keys", tuple(self.holdout_keys))
        if self.cipher not in CIPHERS:
            raise ValueError(f"unknown cipher {self.cipher!r}; choose from {sorted(CIPHERS)}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.message_len < 1:
            raise ValueError("message_len must be >= 1")
        if not 1 <= self.key_len_min <= self.key_len_max <= 6:
            raise ValueError(f"key length range must lie within 1..6: {self.key_len_min}..{self.key_len_max}")
        if self.cipher == "enigma" and (self.key_len_min, self.key_len_max) != (3, 3):
            raise ValueError("enigma keys are exactly 3 letters; set key_len_min = key_len_max = 3")
        if self.task == "attack" and self.cipher == "enigma":
            raise ValueError("the key-reconstruction task supports vigenere and autokey only")


def random_message(stream: rng.Stream, length: int) -> str:
    if length < 1:
        raise ValueError("message length must be >= 1")
    return "".join(LETTERS[i] for i in stream.below(26, length))


def random_key(stream: rng.Stream, config: GenConfig) -> str:
    span = config.key_len_max - config.key_len_min + 1
    while True:
        z = config.key_len_min + int(stream.below(span, 1)[0])
        key = "".join(LETTERS[i] for i in stream.below(26, z))
        if key not in config.holdout_keys:
            return key


def make_sample(config: GenConfig, key: str, plaintext: str) -> Sample:
    encrypt = CIPHERS[config.cipher][0]
    if config.task == "attack":
        return build_attack_sample(key, plaintext, encrypt)
    return build_decryption_sample(key, plaintext, encrypt)


def example(config: GenConfig, index: int, stream_tag: int = rng.TRAIN, key: str | None = None,
            message_len: int | None = None) -> Sample:
    """Example ``index`` of the given stream; ``key`` overrides the drawn key."""
    stream = rng.Stream(config.seed, index, stream_tag)
    plaintext = random_message(stream, message_len or config.message_len)
    if key is None:
        key = random_key(stream, config)
    return make_sample(config, key, plaintext)


def next_batch(config: GenConfig, batch_size: int, cursor: int = 0) -> Batch:
    """Training examples ``cursor .. cursor + batch_size - 1`` stacked into a batch."""
    return assemble_batch([example(config, cursor + i) for i in range(batch_size)])


@dataclass
class BatchStream:
    """Stateful wrapper that advances the global example cursor."""

    config: GenConfig
    batch_size: int
    cursor: int = field(default=0)

    def next_batch(self) -> Batch:
        batch = next_batch(self.config, self.batch_size, self.cursor)
        self.cursor += self.batch_size
        return batch


def eval_set(config: GenConfig, count: int, key: str | None = None, message_len: int | None = None) -> list[Sample]:
    """Fixed evaluation samples, disjoint from the training stream.

    The message of eval sample ``i`` does not depend on ``key``, so a seen-key
    set and a fixed-key set of equal size share their plaintexts.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return [example(config, i, rng.EVAL, key=key, message_len=message_len) for i in range(count)]
