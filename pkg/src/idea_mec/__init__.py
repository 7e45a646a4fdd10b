"""IDEA block cipher with genetic-algorithm session keys, a citizen card
registry and a framed government/consumer exchange."""

from .idea import (
    Block64,
    SubKeys,
    decrypt_block,
    encrypt_block,
    expand_key,
    invert_key,
    mul,
    mul_inv,
)
from .keygen import LcgParams, generate_session_key

__all__ = [
    "Block64",
    "LcgParams",
    "SubKeys",
    "decrypt_block",
    "encrypt_block",
    "expand_key",
    "generate_session_key",
    "invert_key",
    "mul",
    "mul_inv",
]
