"""One-hot encoding of (key, plaintext, ciphertext) triples.

Decryption task: input rows are the null-padded key followed by ciphertext,
target rows the same key followed by plaintext (both T x 27).

Attack task: input rows are [plaintext_t | ciphertext_t] (T x 54); the
target holds the padded key in its first 6 rows and nulls after.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ciphers import MAX_KEY_LEN, NULL, Alphabet, validate_key, validate_message

KEY_SLOTS = MAX_KEY_LEN
D = Alphabet.size

Encrypt = Callable[[str, str], str]


def encode_symbol(ch: str) -> np.ndarray:
    v = np.zeros(D, dtype=np.float32)
    v[Alphabet.index_of(ch)] = 1.0
    return v


def decode_symbol(v) -> str:
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return Alphabet.symbols[int(np.argmax(np.asarray(v)))]


def encode_text(text: str, dtype=np.float32) -> np.ndarray:
    out = np.zeros((len(text), D), dtype=dtype)
    out[np.arange(len(text)), [Alphabet.index_of(ch) for ch in text]] = 1.0
    return out


def decode_text(rows) -> str:
    rows = np.asarray(rows)
    return "".join(Alphabet.symbols[i] for i in np.argmax(rows[..., :D], axis=-1))


def decode_pairs(rows) -> list[tuple[str, str]]:
    """Decode attack-task input rows into (plaintext, ciphertext) character pairs."""
    rows = np.asarray(rows)
    return list(zip(decode_text(rows[:, :D]), decode_text(rows[:, D:])))


def pad_key(key: str) -> str:
    return key + NULL * (KEY_SLOTS - len(key))


@dataclass
class Sample:
    x: np.ndarray
    y: np.ndarray
    key: str
    plaintext: str
    ciphertext: str
    task: str = "decrypt"

    @property
    def N(self) -> int:
        return self.x.shape[0]


@dataclass
class Batch:
    xs: np.ndarray
    ys: np.ndarray

    @property
    def B(self) -> int:
        return self.xs.shape[0]

    @property
    def T(self) -> int:
        return self.xs.shape[1]


def build_decryption_sample(key: str, plaintext: str, encrypt: Encrypt) -> Sample:
    validate_key(key)
    validate_message(plaintext)
    cipher = encrypt(key, plaintext)
    padded = pad_key(key)
    return Sample(
        x=encode_text(padded + cipher),
        y=encode_text(padded + plaintext),
        key=key,
        plaintext=plaintext,
        ciphertext=cipher,
    )


def build_attack_sample(key: str, plaintext: str, encrypt: Encrypt) -> Sample:
    """Known-plaintext sample; messages shorter than 6 are padded with null pairs."""
    validate_key(key)
    validate_message(plaintext)
    cipher = encrypt(key, plaintext)
    T = max(len(plaintext), KEY_SLOTS)
    m = plaintext.ljust(T, NULL)
    c = cipher.ljust(T, NULL)
    x = np.concatenate([encode_text(m), encode_text(c)], axis=1)
    y = encode_text(pad_key(key) + NULL * (T - KEY_SLOTS))
    return Sample(x=x, y=y, key=key, plaintext=plaintext, ciphertext=cipher, task="attack")


def assemble_batch(samples: Sequence[Sample]) -> Batch:
    if not samples:
        raise ValueError("cannot assemble an empty batch")
    shape_x, shape_y = samples[0].x.shape, samples[0].y.shape
    for s in samples:
        if s.x.shape != shape_x or s.y.shape != shape_y:
            raise ValueError(f"ragged batch: {s.x.shape} vs {shape_x}")
    return Batch(np.stack([s.x for s in samples]), np.stack([s.y for s in samples]))
