"""Reference implementation of round-reduced DES on BitBlock values.

This is the executable ground truth the logic-program encodings are checked
against.  Every routine works bit-for-bit like the standard description:
initial permutation, a configurable number of Feistel rounds with the swap
omitted after the last one, and the final permutation.
"""

from __future__ import annotations

from .bits import BitBlock, standard_tables

FULL_ROUNDS = 16


def _check_rounds(rounds: int) -> None:
    if not 1 <= rounds <= FULL_ROUNDS:
        raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}, got {rounds}")


def key_schedule(key: BitBlock, rounds: int = FULL_ROUNDS) -> list:
    """Round keys K1..Kr as 48-bit blocks.

    The key's 8 parity bits are discarded by the first selection table, so
    keys differing only in parity produce the same schedule.
    """
    _check_rounds(rounds)
    if key.width != 64:
        raise ValueError("key must be 64 bits")
    t = standard_tables()
    c, d = t["pc1"].apply(key).halves()
    out = []
    for r in range(rounds):
        s = t["shifts"][r]
        c, d = c.rotl(s), d.rotl(s)
        out.append(t["pc2"].apply(c.concat(d)))
    return out


def key_schedule_source_bits(rounds: int = FULL_ROUNDS) -> list:
    """For each round, the 48 original key-bit positions (1..64) feeding
    that round key, in round-key bit order.

    Computed by pushing position labels through the same selection and
    rotation steps the schedule applies to key bits.
    """
    _check_rounds(rounds)
    t = standard_tables()
    cd = [t["pc1"].entries[i - 1] for i in range(1, 57)]
    c, d = list(cd[:28]), list(cd[28:])
    out = []
    for r in range(rounds):
        s = t["shifts"][r]
        c = c[s:] + c[:s]
        d = d[s:] + d[:s]
        merged = c + d
        out.append(tuple(merged[e - 1] for e in t["pc2"].entries))
    return out


def feistel_f(r_half: BitBlock, round_key: BitBlock) -> BitBlock:
    """The round function: expand, mix with the key, substitute, permute."""
    if r_half.width != 32 or round_key.width != 48:
        raise ValueError("f expects a 32-bit half and a 48-bit round key")
    t = standard_tables()
    x = t["e"].apply(r_half) ^ round_key
    out4 = []
    for g in range(8):
        chunk = (x.value >> (42 - 6 * g)) & 0x3F
        out4.append(t["sboxes"][g].lookup_int(chunk))
    s_out = 0
    for v in out4:
        s_out = (s_out << 4) | v
    return t["p"].apply(BitBlock(32, s_out))


def _crypt(block: BitBlock, round_keys: list) -> BitBlock:
    t = standard_tables()
    left, right = t["ip"].apply(block).halves()
    for k in round_keys:
        left, right = right, left ^ feistel_f(right, k)
    # Undo the swap the loop applied after the final round.
    return t["fp"].apply(right.concat(left))


def encrypt(plaintext: BitBlock, key: BitBlock, rounds: int = FULL_ROUNDS) -> BitBlock:
    if plaintext.width != 64:
        raise ValueError("plaintext must be 64 bits")
    return _crypt(plaintext, key_schedule(key, rounds))


def decrypt(ciphertext: BitBlock, key: BitBlock, rounds: int = FULL_ROUNDS) -> BitBlock:
    if ciphertext.width != 64:
        raise ValueError("ciphertext must be 64 bits")
    return _crypt(ciphertext, list(reversed(key_schedule(key, rounds))))
