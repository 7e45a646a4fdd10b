import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from idea_mec import cfb, idea

from oracles import ref_cfb_encrypt

KEY = bytes(range(16))
IV = bytes.fromhex("0102030405060708")


def test_empty_message_is_noop():
    ctx = cfb.cfb_init(KEY, IV)
    assert cfb.cfb_encrypt(ctx, b"") == b""
    assert ctx.used == 8
    assert bytes(ctx.shift_register) == IV


def test_identical_contexts_identical_keystream():
    a, b = cfb.cfb_init(KEY, IV), cfb.cfb_init(KEY, IV)
    assert a.encrypt(bytes(40)) == b.encrypt(bytes(40))


def test_distinct_ivs_distinct_first_block():
    rng = random.Random(5)
    differ = 0
    for _ in range(1000):
        iv1, iv2 = rng.randbytes(8), rng.randbytes(8)
        if iv1 == iv2:
            continue
        differ += cfb.cfb_init(KEY, iv1).encrypt(bytes(8)) != cfb.cfb_init(KEY, iv2).encrypt(bytes(8))
    assert differ >= 990


def test_round_trip_all_lengths():
    rng = random.Random(7)
    for n in range(1001):
        msg = rng.randbytes(n)
        ct = cfb.cfb_init(KEY, IV).encrypt(msg)
        assert len(ct) == n
        assert cfb.cfb_init(KEY, IV).decrypt(ct) == msg


def test_one_byte_uses_one_block(monkeypatch):
    calls = []
    real = idea.encrypt_bytes

    def counting(block, subkeys):
        calls.append(block)
        return real(block, subkeys)

    monkeypatch.setattr(idea, "encrypt_bytes", counting)
    cfb.cfb_init(KEY, IV).encrypt(b"x")
    assert calls == [IV]


def test_against_two_block_oracle():
    enc = idea.expand_key(KEY)
    ct = cfb.cfb_init(KEY, IV).encrypt(bytes(16))
    first = idea.encrypt_bytes(IV, enc)
    second = idea.encrypt_bytes(first, enc)  # zero plaintext: ciphertext == keystream
    assert ct == first + second
    assert ct == ref_cfb_encrypt(lambda b: idea.encrypt_bytes(b, enc), IV, bytes(16))


@given(st.binary(max_size=300), st.lists(st.integers(0, 300), max_size=10))
def test_chunked_decrypt_matches_one_shot(msg, cuts):
    ct = cfb.cfb_init(KEY, IV).encrypt(msg)
    points = sorted({min(c, len(ct)) for c in cuts} | {0, len(ct)})
    ctx = cfb.cfb_init(KEY, IV)
    pieces = [ctx.decrypt(ct[a:b]) for a, b in zip(points, points[1:])]
    assert b"".join(pieces) == msg


@given(st.binary(max_size=200))
def test_matches_block_oracle(msg):
    enc = idea.expand_key(KEY)
    assert cfb.cfb_init(KEY, IV).encrypt(msg) == ref_cfb_encrypt(
        lambda b: idea.encrypt_bytes(b, enc), IV, msg
    )


def test_reinit_restarts_stream():
    ctx = cfb.cfb_init(KEY, IV)
    first = ctx.encrypt(b"hello world")
    cfb.cfb_reinit(ctx, IV)
    assert ctx.encrypt(b"hello world") == first


def test_destroy_zeroes_everything():
    ctx = cfb.cfb_init(KEY, IV)
    ctx.encrypt(b"abc")
    cfb.cfb_destroy(ctx)
    assert ctx.subkeys.keys == [0] * 52
    assert bytes(ctx.shift_register) == bytes(8)
    assert bytes(ctx.keystream) == bytes(8)


def test_bad_iv_length():
    with pytest.raises(ValueError):
        cfb.cfb_init(KEY, bytes(7))


class TestRand:
    SEED = bytes.fromhex("a1b2c3d4e5f60718")

    def test_deterministic(self):
        a, b = cfb.rand_init(KEY, self.SEED), cfb.rand_init(KEY, self.SEED)
        assert a.read(100) == b.read(100)

    def test_first_block_is_encrypted_seed(self):
        ctx = cfb.rand_init(KEY, self.SEED)
        first = bytes(cfb.rand_byte(ctx) for _ in range(8))
        assert first == idea.encrypt_bytes(self.SEED, idea.expand_key(KEY))

    def test_second_block_mixes_counter(self):
        ctx = cfb.rand_init(KEY, self.SEED)
        enc = idea.expand_key(KEY)
        b1 = idea.encrypt_bytes(self.SEED, enc)
        b2 = idea.encrypt_bytes((int.from_bytes(b1, "big") ^ 1).to_bytes(8, "big"), enc)
        assert ctx.read(16) == b1 + b2

    def test_distinct_seeds_differ(self):
        rng = random.Random(11)
        streams = {cfb.rand_init(KEY, rng.randbytes(8)).read(16) for _ in range(200)}
        assert len(streams) == 200

    def test_byte_frequencies(self):
        ctx = cfb.rand_init(KEY, self.SEED)
        n = 1_000_000
        counts = Counter(ctx.read(n))
        for v in range(256):
            assert abs(counts[v] / n - 1 / 256) <= 0.01
