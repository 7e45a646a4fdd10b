"""Byte-granular CFB-64 over IDEA, and an IDEA-based deterministic byte generator.

A context is single-owner mutable state. Do not share one between threads.
"""

from __future__ import annotations

from . import idea

IV_BYTES = idea.BLOCK_BYTES


def _check_iv(iv: bytes, what: str = "iv") -> bytes:
    if len(iv) != IV_BYTES:
        raise ValueError(f"{what} must be {IV_BYTES} bytes, got {len(iv)}")
    return bytes(iv)


class CfbContext:
    """Cipher-feedback state: a shift register of the last 8 ciphertext bytes.

    A new keystream block is drawn every 8 bytes by encrypting the register,
    so no padding is ever needed.
    """

    def __init__(self, key: bytes, iv: bytes) -> None:
        self.subkeys = idea.expand_key(key)
        self.shift_register = bytearray(_check_iv(iv))
        self.keystream = bytearray(IV_BYTES)
        self.used = IV_BYTES

    def reinit(self, iv: bytes) -> None:
        """Restart the stream at a new IV, keeping the key."""
        self.shift_register[:] = _check_iv(iv)
        self.keystream[:] = bytes(IV_BYTES)
        self.used = IV_BYTES

    def _refill(self) -> None:
        self.keystream[:] = idea.encrypt_bytes(bytes(self.shift_register), self.subkeys)
        self.used = 0

    def encrypt(self, data: bytes) -> bytes:
        out = bytearray(len(data))
        reg = self.shift_register
        for i, p in enumerate(data):
            if self.used == IV_BYTES:
                self._refill()
            c = p ^ self.keystream[self.used]
            del reg[0]
            reg.append(c)
            self.used += 1
            out[i] = c
        return bytes(out)

    def decrypt(self, data: bytes) -> bytes:
        out = bytearray(len(data))
        reg = self.shift_register
        for i, c in enumerate(data):
            if self.used == IV_BYTES:
                self._refill()
            del reg[0]
            reg.append(c)
            out[i] = c ^ self.keystream[self.used]
            self.used += 1
        return bytes(out)

    def destroy(self) -> None:
        """Zero the subkeys and all buffers."""
        self.subkeys.wipe()
        self.shift_register[:] = bytes(IV_BYTES)
        self.keystream[:] = bytes(IV_BYTES)
        self.used = IV_BYTES


class RandContext:
    """Deterministic byte stream: state <- E(state XOR counter), one block per 8 bytes."""

    def __init__(self, key: bytes, seed: bytes) -> None:
        self.subkeys = idea.expand_key(key)
        self.state = _check_iv(seed, "seed")
        self.counter = 0
        self.buffer = bytes(IV_BYTES)
        self.used = IV_BYTES

    def byte(self) -> int:
        if self.used == IV_BYTES:
            mixed = int.from_bytes(self.state, "big") ^ (self.counter & 0xFFFFFFFFFFFFFFFF)
            self.buffer = idea.encrypt_bytes(mixed.to_bytes(8, "big"), self.subkeys)
            self.state = self.buffer
            self.counter += 1
            self.used = 0
        b = self.buffer[self.used]
        self.used += 1
        return b

    def read(self, n: int) -> bytes:
        return bytes(self.byte() for _ in range(n))


def cfb_init(key: bytes, iv: bytes) -> CfbContext:
    return CfbContext(key, iv)


def cfb_reinit(ctx: CfbContext, iv: bytes) -> None:
    ctx.reinit(iv)


def cfb_encrypt(ctx: CfbContext, plaintext: bytes) -> bytes:
    return ctx.encrypt(plaintext)


def cfb_decrypt(ctx: CfbContext, ciphertext: bytes) -> bytes:
    return ctx.decrypt(ciphertext)


def cfb_destroy(ctx: CfbContext) -> None:
    ctx.destroy()


def rand_init(key: bytes, seed: bytes) -> RandContext:
    return RandContext(key, seed)


def rand_byte(ctx: RandContext) -> int:
    return ctx.byte()
