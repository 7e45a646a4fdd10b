"""Acceptance suite: one test (or small group) per criterion, at the stated tolerances."""

import io
import os
import random
import time

import pytest

from idea_mec import cfb, cli, idea, keygen
from idea_mec.net import Client, G2CServer
from idea_mec.registry import ACTIVE, REVOKED, RegistryStore

from oracles import collapse_128_to_64, digital_root_closed, literal_encrypt
from test_net import corrupt_frames
from test_registry import replay

crit = pytest.mark.criterion


@crit(1, "10^4 random (key, block) round trips, under 1 s")
def test_round_trip_contract():
    rng = random.Random(1)
    pairs = [(rng.randbytes(16), rng.randbytes(8)) for _ in range(10_000)]
    start = time.perf_counter()
    bad = 0
    for key, block in pairs:
        enc = idea.expand_key(key)
        dec = idea.invert_key(enc)
        if idea.decrypt_bytes(idea.encrypt_bytes(block, enc), dec) != block:
            bad += 1
    elapsed = time.perf_counter() - start
    print(f"round trips: 10000, failures {bad}, {elapsed:.3f} s")
    assert bad == 0
    assert elapsed < 1.0


@crit(2, "mul(x, mul_inv(x)) == 1 for all 65536 encodings, under 1 s")
def test_group_arithmetic():
    start = time.perf_counter()
    bad = [x for x in range(65536) if idea.mul(x, idea.mul_inv(x)) != 1]
    elapsed = time.perf_counter() - start
    print(f"inverse check: {elapsed:.3f} s")
    assert bad == []
    assert elapsed < 1.0


@crit(3, "optimized cipher agrees with the step-by-step transcription on 10^3 inputs")
def test_literal_oracle():
    rng = random.Random(3)
    mismatches = 0
    for _ in range(1000):
        key, block = rng.randbytes(16), rng.randbytes(8)
        if idea.encrypt_bytes(block, idea.expand_key(key)) != literal_encrypt(block, key):
            mismatches += 1
    assert mismatches == 0


@crit(4, 'mix_password("PASSWORD", 5,1,3,5,2,4,2,4) equals the published table exactly')
def test_table_reproduction():
    got = list(keygen.mix_password("PASSWORD", [5, 1, 3, 5, 2, 4, 2, 4]))
    print(f"computed {got}")
    assert got == [85, 66, 86, 88, 87, 83, 84, 72]


@crit(5, "284/7000 crossover and mutation at locus 4 give 856 and 6428")
def test_ga_worked_example():
    c1, c2 = keygen.crossover(284, 7000, 4, 13)
    assert (c1, c2) == (0b0000101011000, 0b1101100011100)
    assert (keygen.mutate(c1, 4, 13), keygen.mutate(c2, 4, 13)) == (856, 6428)


@crit(6, "digital root closed form matches iteration on 0..10^6; 2365 -> 7")
def test_digital_root():
    bad = [n for n in range(1_000_001) if keygen.digital_root(n) != digital_root_closed(n)]
    assert bad == []
    assert keygen.digital_root(2365) == 7


@crit(7, "64->128 expansion injective in every byte position; 0x00 and 0xFF fixed points")
def test_key_expansion():
    rng = random.Random(7)
    base = bytearray(rng.randbytes(8))
    for pos in range(8):
        seen = set()
        for v in range(256):
            base[pos] = v
            out = keygen.expand_64_to_128(bytes(base))
            assert collapse_128_to_64(out) == bytes(base)
            seen.add(out)
        assert len(seen) == 256
    assert keygen.expand_64_to_128(bytes(8)) == bytes(16)
    assert keygen.expand_64_to_128(b"\xff" * 8) == b"\xf0" * 16


@crit(8, "CFB round trip for every length 0..1000; chunked decryption equals one-shot")
def test_cfb():
    rng = random.Random(8)
    key, iv = rng.randbytes(16), rng.randbytes(8)
    for n in range(1001):
        msg = rng.randbytes(n)
        ct = cfb.cfb_init(key, iv).encrypt(msg)
        assert len(ct) == n
        assert cfb.cfb_init(key, iv).decrypt(ct) == msg
    msg = rng.randbytes(1000)
    ct = cfb.cfb_init(key, iv).encrypt(msg)
    ctx, parts, i = cfb.cfb_init(key, iv), [], 0
    while i < len(ct):
        step = rng.randrange(1, 20)
        parts.append(ctx.decrypt(ct[i:i + step]))
        i += step
    assert b"".join(parts) == cfb.cfb_init(key, iv).decrypt(ct) == msg


@crit(9, "100-op registry script matches the in-memory oracle; save/load is bit-exact")
def test_registry_script(tmp_path):
    key = random.Random(9).randbytes(16)
    store = RegistryStore(key, tmp_path / "cards.txt")
    assert replay(store, seed=9, n_ops=100) == []
    again = RegistryStore(key, store.path)
    assert again.records == store.records
    assert again.dumps().encode() == store.path.read_bytes()


@crit(10, "loopback issue/grant/check/revoke; 10^3 single-byte corruptions all rejected")
def test_network(tmp_path):
    key = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    server = G2CServer(RegistryStore(key, tmp_path / "cards.txt"), key, "127.0.0.1:0")
    server.start()
    try:
        client = Client(server.endpoint, key)
        issued = client.issue("Abhishek Roy", 27)
        assert (issued.serial, issued.name, issued.age, issued.facilities, issued.status) == (
            1, "Abhishek Roy", 27, 0, ACTIVE)
        uid = issued.unique_id
        assert client.grant(uid).facilities & 1
        assert client.check(uid).voting_right
        revoked = client.revoke(uid)
        assert revoked.status == REVOKED and revoked.facilities == 0
        assert client.check(uid).status == REVOKED

        target = client.issue("target", 40).unique_id
        before = dict(server.store.records)
        accepted, reasons = corrupt_frames(server.endpoint, target, 1000, seed=10)
        print(f"corruptions: accepted {accepted}, rejected by reason {reasons}")
        assert accepted == 0
        assert server.store.records == before
    finally:
        server.shutdown()
        server.server_close()


@crit(11, "demo with bytes 12 34 56 77 86 34 55 66 prints dec row equal to orig row")
def test_figure_flow():
    data = [12, 34, 56, 77, 86, 34, 55, 66]
    feed = io.StringIO("Abhishek Roy\n27\n" + "".join(f"{v}\n" for v in data))
    out = io.StringIO()
    cli.run_demo(os.urandom(16), feed, out)
    rows = {}
    for line in out.getvalue().splitlines():
        if " message is " in line:
            label, values = line.split(" message is ")
            rows[label.strip()] = [int(v) for v in values.split()]
    print(out.getvalue())
    assert rows["orig"] == data
    assert rows["dec."] == rows["orig"]
