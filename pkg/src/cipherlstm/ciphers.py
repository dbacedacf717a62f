"""Caesar-shift primitive and the Vigenere / Autokey ciphers.

Ciphertext is plaintext plus keystream (mod 26); decryption subtracts.
"""

from __future__ import annotations

import string

LETTERS = string.ascii_uppercase
NULL = "-"
MAX_KEY_LEN = 6


class Alphabet:
    """The 27-symbol space: 'A'..'Z' at indices 0..25, null '-' at 26."""

    symbols: tuple[str, ...] = tuple(LETTERS) + (NULL,)
    size = 27
    null_index = 26

    _index = {ch: i for i, ch in enumerate(symbols)}

    @classmethod
    def index_of(cls, ch: str) -> int:
        try:
            return cls._index[ch]
        except KeyError:
            raise ValueError(f"symbol {ch!r} not in alphabet") from None


ALPHABET = Alphabet()


def letter_index(ch: str) -> int:
    idx = Alphabet.index_of(ch)
    if idx >= 26:
        raise ValueError(f"expected a letter A-Z, got {ch!r}")
    return idx


def to_indices(text: str) -> list[int]:
    return [letter_index(ch) for ch in text]


def to_text(indices) -> str:
    return "".join(LETTERS[i] for i in indices)


def validate_key(key: str, max_len: int = MAX_KEY_LEN) -> str:
    if not isinstance(key, str) or not key:
        raise ValueError("key must be a non-empty string")
    if len(key) > max_len:
        raise ValueError(f"key longer than {max_len} characters: {key!r}")
    for ch in key:
        letter_index(ch)
    return key


def validate_message(text: str) -> str:
    for ch in text:
        letter_index(ch)
    return text


def caesar_shift(sym: int, dist: int) -> int:
    """Rotate letter index `sym` by `dist` places (negative allowed)."""
    if not 0 <= sym <= 25:
        raise ValueError(f"letter index out of range: {sym}")
    return (sym + dist) % 26


def vigenere_encrypt(key: str, m: str) -> str:
    k = to_indices(validate_key(key))
    z = len(k)
    return to_text(caesar_shift(s, k[t % z]) for t, s in enumerate(to_indices(m)))


def vigenere_decrypt(key: str, c: str) -> str:
    k = to_indices(validate_key(key))
    z = len(k)
    return to_text(caesar_shift(s, -k[t % z]) for t, s in enumerate(to_indices(c)))


def autokey_encrypt(key: str, m: str) -> str:
    k = to_indices(validate_key(key))
    msg = to_indices(m)
    stream = k + msg
    return to_text(caesar_shift(s, stream[t]) for t, s in enumerate(msg))


def autokey_decrypt(key: str, c: str) -> str:
    stream = to_indices(validate_key(key))
    out = []
    for t, s in enumerate(to_indices(c)):
        p = caesar_shift(s, -stream[t])
        out.append(p)
        stream.append(p)
    return to_text(out)
