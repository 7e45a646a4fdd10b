"""IDEA block cipher: 64-bit blocks, 128-bit keys, 8 rounds plus an output half-round.

Arithmetic is done on 16-bit lanes using three group operations: XOR, addition
mod 2**16 and multiplication mod 2**16 + 1 (where the encoding 0 stands for 65536).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

ENCRYPT = "encrypt"
DECRYPT = "decrypt"

ROUNDS = 8
SUBKEY_COUNT = 6 * ROUNDS + 4
KEY_BYTES = 16
BLOCK_BYTES = 8

_MASK16 = 0xFFFF
_MASK128 = (1 << 128) - 1
_MUL_MOD = 0x10001


class Block64(NamedTuple):
    """A 64-bit block as four big-endian 16-bit lanes (x1 most significant)."""

    x1: int
    x2: int
    x3: int
    x4: int

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block64":
        if len(data) != BLOCK_BYTES:
            raise ValueError(f"block must be {BLOCK_BYTES} bytes, got {len(data)}")
        return cls(
            (data[0] << 8) | data[1],
            (data[2] << 8) | data[3],
            (data[4] << 8) | data[5],
            (data[6] << 8) | data[7],
        )

    @classmethod
    def from_int(cls, value: int) -> "Block64":
        if not 0 <= value < 1 << 64:
            raise ValueError("block value out of 64-bit range")
        return cls(value >> 48, (value >> 32) & _MASK16, (value >> 16) & _MASK16, value & _MASK16)

    def to_bytes(self) -> bytes:
        return bytes(
            (self.x1 >> 8, self.x1 & 0xFF, self.x2 >> 8, self.x2 & 0xFF,
             self.x3 >> 8, self.x3 & 0xFF, self.x4 >> 8, self.x4 & 0xFF)
        )

    def to_int(self) -> int:
        return (self.x1 << 48) | (self.x2 << 32) | (self.x3 << 16) | self.x4


@dataclass
class SubKeys:
    """The 52 round subkeys for one direction of the cipher."""

    keys: list[int]
    direction: str = ENCRYPT
    _wiped: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.keys = list(self.keys)
        if len(self.keys) != SUBKEY_COUNT:
            raise ValueError(f"expected {SUBKEY_COUNT} subkeys, got {len(self.keys)}")
        if self.direction not in (ENCRYPT, DECRYPT):
            raise ValueError(f"unknown direction {self.direction!r}")
        if any(not 0 <= k <= _MASK16 for k in self.keys):
            raise ValueError("subkeys must be 16-bit values")

    def wipe(self) -> None:
        """Overwrite the key material with zeros."""
        for i in range(len(self.keys)):
            self.keys[i] = 0
        self._wiped = True


def mul(a: int, b: int) -> int:
    """Multiply modulo 65537, with 0 encoding 65536."""
    # 65536 % 65537 == 65536, and masking it to 16 bits gives back the 0 encoding
    return ((a or 0x10000) * (b or 0x10000)) % _MUL_MOD & _MASK16


def mul_inv(x: int) -> int:
    """Multiplicative inverse of x modulo 65537 by the extended Euclidean algorithm.

    0 (i.e. 65536 == -1) and 1 are their own inverses.
    """
    if x <= 1:
        return x
    t0, t1 = 0, 1
    r0, r1 = _MUL_MOD, x
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    return t0 % _MUL_MOD & _MASK16


def add_inv(x: int) -> int:
    return -x & _MASK16


def expand_key(key: bytes) -> SubKeys:
    """Derive the 52 encryption subkeys from a 16-byte key.

    Subkeys are consecutive big-endian 16-bit slices of the key; after every
    eight the whole key is rotated left by 25 bits.
    """
    if len(key) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes, got {len(key)}")
    k = int.from_bytes(key, "big")
    out: list[int] = []
    while True:
        for shift in range(112, -1, -16):
            out.append((k >> shift) & _MASK16)
            if len(out) == SUBKEY_COUNT:
                return SubKeys(out, ENCRYPT)
        k = ((k << 25) | (k >> 103)) & _MASK128


def invert_key(enc: SubKeys) -> SubKeys:
    """Build the decryption subkeys matching an encryption schedule."""
    if enc.direction != ENCRYPT:
        raise ValueError("invert_key expects encryption subkeys")
    ek = enc.keys
    dk = [0] * SUBKEY_COUNT
    for r in range(ROUNDS + 1):
        # decryption round r undoes encryption half-round (8 - r)
        src = 6 * (ROUNDS - r)
        dst = 6 * r
        dk[dst] = mul_inv(ek[src])
        if r == 0 or r == ROUNDS:
            dk[dst + 1] = add_inv(ek[src + 1])
            dk[dst + 2] = add_inv(ek[src + 2])
        else:
            dk[dst + 1] = add_inv(ek[src + 2])
            dk[dst + 2] = add_inv(ek[src + 1])
        dk[dst + 3] = mul_inv(ek[src + 3])
        if r < ROUNDS:
            dk[dst + 4] = ek[src - 2]
            dk[dst + 5] = ek[src - 1]
    return SubKeys(dk, DECRYPT)


def round_function(x1: int, x2: int, x3: int, x4: int, z: Sequence[int]) -> tuple[int, int, int, int]:
    """One full round with subkeys z[0..5]; the two inner output lanes come back swapped."""
    x1 = ((x1 or 0x10000) * (z[0] or 0x10000)) % _MUL_MOD & _MASK16
    x2 = (x2 + z[1]) & _MASK16
    x3 = (x3 + z[2]) & _MASK16
    x4 = ((x4 or 0x10000) * (z[3] or 0x10000)) % _MUL_MOD & _MASK16
    t1 = ((x1 ^ x3 or 0x10000) * (z[4] or 0x10000)) % _MUL_MOD & _MASK16
    t2 = ((((x2 ^ x4) + t1) & _MASK16 or 0x10000) * (z[5] or 0x10000)) % _MUL_MOD & _MASK16
    t1 = (t1 + t2) & _MASK16
    return x1 ^ t2, x3 ^ t2, x2 ^ t1, x4 ^ t1


def _cipher(x1: int, x2: int, x3: int, x4: int, keys: list[int]) -> Block64:
    for i in range(0, 6 * ROUNDS, 6):
        x1, x2, x3, x4 = round_function(x1, x2, x3, x4, keys[i : i + 6])
    # the last round must not swap, so the output transformation swaps back
    return Block64(
        mul(x1, keys[48]),
        (x3 + keys[49]) & _MASK16,
        (x2 + keys[50]) & _MASK16,
        mul(x4, keys[51]),
    )


def encrypt_block(block: Block64, subkeys: SubKeys) -> Block64:
    if subkeys.direction != ENCRYPT:
        raise ValueError("encrypt_block needs encryption subkeys")
    return _cipher(*block, subkeys.keys)


def decrypt_block(block: Block64, subkeys: SubKeys) -> Block64:
    if subkeys.direction != DECRYPT:
        raise ValueError("decrypt_block needs decryption subkeys")
    return _cipher(*block, subkeys.keys)


def encrypt_bytes(block: bytes, subkeys: SubKeys) -> bytes:
    """Encrypt one 8-byte block."""
    return encrypt_block(Block64.from_bytes(block), subkeys).to_bytes()


def decrypt_bytes(block: bytes, subkeys: SubKeys) -> bytes:
    """Decrypt one 8-byte block."""
    return decrypt_block(Block64.from_bytes(block), subkeys).to_bytes()
