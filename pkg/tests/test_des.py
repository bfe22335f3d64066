"""Reference cipher against published vectors and an independent oracle.

Hex constants were cross-checked against the cryptography package's DES core
and the widely published worked example before being frozen here.
"""

import random

import pytest

from deslp.bits import BitBlock, standard_tables
from deslp.des import (
    decrypt,
    encrypt,
    feistel_f,
    key_schedule,
    key_schedule_source_bits,
)

WORKED_KEY = BitBlock.from_hex("133457799bbcdff1")
WORKED_PT = BitBlock.from_hex("0123456789abcdef")
WORKED_CT = BitBlock.from_hex("85e813540f0ab405")

# All 16 round keys for WORKED_KEY, from the published worked example.
WORKED_ROUND_KEYS = [
    0x1B02EFFC7072, 0x79AED9DBC9E5, 0x55FC8A42CF99, 0x72ADD6DB351D,
    0x7CEC07EB53A8, 0x63A53E507B2F, 0xEC84B7F618BC, 0xF78A3AC13BFB,
    0xE0DBEBEDE781, 0xB1F347BA464F, 0x215FD3DED386, 0x7571F59467E9,
    0x97C5D1FABA41, 0x5F43B7F2E73A, 0xBF918D3D3F0A, 0xCB3D8B0E17F5,
]


def test_worked_example_encrypt():
    assert encrypt(WORKED_PT, WORKED_KEY, 16) == WORKED_CT


def test_worked_example_decrypt():
    assert decrypt(WORKED_CT, WORKED_KEY, 16) == WORKED_PT


def test_published_vectors():
    cases = [
        ("8787878787878787", "0e329232ea6d0d73", "0000000000000000"),
        ("8000000000000000", "0101010101010101", "95f8a5e5dd31d900"),
        ("0000000000000000", "8001010101010101", "95a8d72813daa94d"),
    ]
    for pt, key, ct in cases:
        assert encrypt(BitBlock.from_hex(pt), BitBlock.from_hex(key)).hex() == ct
        assert decrypt(BitBlock.from_hex(ct), BitBlock.from_hex(key)).hex() == pt


def test_decrypt_zero_block_zero_key():
    assert decrypt(BitBlock(64, 0), BitBlock(64, 0), 16).hex() == "8ca64de9c1b123a7"


def test_round_trip_random_all_round_counts():
    rng = random.Random(1)
    for i in range(1000):
        r = 1 + i % 16
        pt = BitBlock(64, rng.getrandbits(64))
        key = BitBlock(64, rng.getrandbits(64))
        assert decrypt(encrypt(pt, key, r), key, r) == pt


def test_parity_bits_do_not_matter():
    pt = BitBlock.from_hex("deadbeef01234567")
    flipped = BitBlock(64, WORKED_KEY.value ^ 0x0101010101010101)
    for r in (1, 3, 16):
        assert encrypt(pt, WORKED_KEY, r) == encrypt(pt, flipped, r)


def test_key_schedule_matches_published_round_keys():
    ks = key_schedule(WORKED_KEY, 16)
    assert [k.value for k in ks] == WORKED_ROUND_KEYS


def test_key_schedule_zero_key_is_all_zero():
    for k in key_schedule(BitBlock(64, 0), 16):
        assert k.value == 0


def test_key_schedule_respects_round_count():
    ks = key_schedule(WORKED_KEY, 3)
    assert len(ks) == 3
    assert [k.value for k in ks] == WORKED_ROUND_KEYS[:3]
    with pytest.raises(ValueError):
        key_schedule(WORKED_KEY, 0)
    with pytest.raises(ValueError):
        key_schedule(WORKED_KEY, 17)


def test_round1_key_bit_1_reads_original_bit_10():
    src = key_schedule_source_bits(1)
    assert src[0][0] == 10
    rng = random.Random(4)
    for _ in range(50):
        key = BitBlock(64, rng.getrandbits(64))
        assert key_schedule(key, 1)[0].bit(1) == key.bit(10)


def test_source_bits_rebuild_round_keys():
    src = key_schedule_source_bits(16)
    rng = random.Random(5)
    for _ in range(25):
        key = BitBlock(64, rng.getrandbits(64))
        ks = key_schedule(key, 16)
        for r in range(16):
            assert BitBlock.from_bits(key.bit(p) for p in src[r]) == ks[r]


def test_source_bits_never_name_parity_positions():
    parity = {8, 16, 24, 32, 40, 48, 56, 64}
    for row in key_schedule_source_bits(16):
        assert parity.isdisjoint(row)


def test_f_zero_inputs_equals_p_of_sbox_zero_column():
    t = standard_tables()
    s_out = 0
    for box in t["sboxes"]:
        s_out = (s_out << 4) | box.rows[0][0]
    want = t["p"].apply(BitBlock(32, s_out))
    assert feistel_f(BitBlock(32, 0), BitBlock(48, 0)) == want
    assert want.hex() == "d8d8dbbc"


def test_f_is_input_sensitive():
    rng = random.Random(6)
    for _ in range(100):
        r = BitBlock(32, rng.getrandbits(32))
        k = BitBlock(48, rng.getrandbits(48))
        base = feistel_f(r, k)
        flip = BitBlock(32, r.value ^ (1 << rng.randrange(32)))
        assert feistel_f(flip, k) != base


def test_one_round_zero_key_composes_documented_steps():
    t = standard_tables()
    rng = random.Random(8)
    for _ in range(20):
        pt = BitBlock(64, rng.getrandbits(64))
        left, right = t["ip"].apply(pt).halves()
        # Swap omitted after the last round, so the new right half leads.
        want = t["fp"].apply((left ^ feistel_f(right, BitBlock(48, 0))).concat(right))
        assert encrypt(pt, BitBlock(64, 0), 1) == want


def test_width_checks():
    with pytest.raises(ValueError):
        encrypt(BitBlock(32, 0), WORKED_KEY)
    with pytest.raises(ValueError):
        feistel_f(BitBlock(32, 0), BitBlock(32, 0))
    with pytest.raises(ValueError):
        key_schedule(BitBlock(48, 0), 16)
