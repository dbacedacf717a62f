import numpy as np
import pytest

from cipherlstm.ciphers import autokey_encrypt, vigenere_decrypt, vigenere_encrypt
from cipherlstm.encoding import (
    assemble_batch,
    build_attack_sample,
    build_decryption_sample,
    decode_pairs,
    decode_symbol,
    decode_text,
    encode_symbol,
    pad_key,
)

SYMBOLS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ-"


def test_encode_symbol():
    assert np.array_equal(encode_symbol("A"), np.eye(27)[0])
    assert np.array_equal(encode_symbol("-"), np.eye(27)[26])
    with pytest.raises(ValueError):
        encode_symbol("?")
    assert all(decode_symbol(encode_symbol(ch)) == ch for ch in SYMBOLS)


def test_decode_symbol():
    assert decode_symbol(np.eye(27)[4]) == "E"
    assert decode_symbol(np.full(27, 1 / 27)) == "A"
    v = np.full(27, 0.01)
    v[26] = 0.74
    assert decode_symbol(v) == "-"


@pytest.mark.parametrize("key,padded", [("KEY", "KEY---"), ("ABCDEF", "ABCDEF"), ("A", "A-----")])
def test_pad_key(key, padded):
    assert pad_key(key) == padded


def test_decryption_sample_worked_example():
    s = build_decryption_sample("KEY", "YOUKNOWNOTHINGJONSNOW", autokey_encrypt)
    assert decode_text(s.x) == "KEY---ISSIBIGACPUWGNRBTBBBO"
    assert decode_text(s.y) == "KEY---YOUKNOWNOTHINGJONSNOW"
    assert s.x.shape == s.y.shape == (27, 27)


def test_decryption_sample_identity_and_prefix():
    s = build_decryption_sample("AAA", "HELLO", vigenere_encrypt)
    assert decode_text(s.x) == decode_text(s.y) == "AAA---HELLO"
    s = build_decryption_sample("QWERTY", "ABCDEFGHIJKLMN", vigenere_encrypt)
    assert np.array_equal(s.x[:6], s.y[:6])
    assert s.N == 20
    assert np.all(s.x.sum(axis=1) == 1) and np.all(s.y.sum(axis=1) == 1)
    # decoding x and decrypting reproduces the target message
    assert vigenere_decrypt("QWERTY", decode_text(s.x)[6:]) == decode_text(s.y)[6:]


def test_attack_sample_hand_oracle():
    s = build_attack_sample("B", "AAA", vigenere_encrypt)
    assert decode_pairs(s.x[:3]) == [("A", "B")] * 3
    assert decode_pairs(s.x[3:]) == [("-", "-")] * 3
    assert decode_text(s.y) == "B-----"
    assert np.all(s.x.sum(axis=1) == 2)
    assert s.x.shape == (6, 54)


def test_attack_sample_long_message():
    s = build_attack_sample("ABCDEF", "HELLOWORLDHELL", autokey_encrypt)
    assert s.x.shape == (14, 54) and s.y.shape == (14, 27)
    assert "-" not in decode_text(s.y)[:6]
    assert decode_text(s.y)[6:] == "-" * 8
    assert np.all(s.x[:, :27].sum(axis=1) == 1) and np.all(s.x[:, 27:].sum(axis=1) == 1)


def test_assemble_batch():
    samples = [build_decryption_sample("KEY", "ABCDEFGHIJKLMN", vigenere_encrypt) for _ in range(50)]
    b = assemble_batch(samples)
    assert (b.B, b.T) == (50, 20)
    assert b.xs.shape == (50, 20, 27)
    assert assemble_batch(samples[:1]).B == 1
    with pytest.raises(ValueError):
        assemble_batch([samples[0], build_decryption_sample("KEY", "ABC", vigenere_encrypt)])
    with pytest.raises(ValueError):
        assemble_batch([])


def test_batch_preserves_order():
    samples = [build_decryption_sample("AB", m, vigenere_encrypt) for m in ("AAAA", "BBBB", "CCCC")]
    b = assemble_batch(samples)
    assert [decode_text(y)[6:] for y in b.ys] == ["AAAA", "BBBB", "CCCC"]
