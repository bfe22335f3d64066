"""Ground logic programs computing round-reduced DES directly.

The cipher is laid out template by template: plaintext permutation,
half-block renumbering, the per-round swap/XOR wiring, the round function
(expansion, key XOR, S-boxes as one rule per true row, permutation P),
a precomputed key schedule, and the final permutation.  Instantiation
modes differ only in which atoms become facts, constraints, or choices:

  encrypt  plaintext and key as facts; the unique stable model carries
           the ciphertext in its cipher atoms.
  decrypt  key as facts, ciphertext as constraints, plaintext chosen.
  attack   known plaintext/ciphertext pairs; the 56 effective key bits
           are chosen, so stable models are exactly the consistent keys.

Half-block bits use two-digit labels: the first digit is the 4-bit group,
the second the position in the group (bit 1 of a half is 11, bit 32 is
84).  Expanded 48-bit strings use the same scheme with 6-bit groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .bits import BitBlock, standard_tables
from .circuit import (
    AndExpr,
    LitExpr,
    OrExpr,
    TableExpr,
    VarTable,
    minimize_cover,
)
from .des import FULL_ROUNDS, key_schedule_source_bits
from .program import Program, Rule, atom_text

BIT_LABELS = tuple(10 * (i // 4 + 1) + i % 4 + 1 for i in range(32))
EBIT_LABELS = tuple(10 * (i // 6 + 1) + i % 6 + 1 for i in range(48))

# Key positions that survive parity stripping; these index the choice
# atoms in attack mode, so the search space is 2^56, never 2^64.
KEY_BITS = tuple(k for k in range(1, 65) if k % 8 != 0)


def bit_label(i: int) -> int:
    """Renumbered label of half-block position i (1..32)."""
    return BIT_LABELS[i - 1]


def ebit_label(i: int) -> int:
    """Renumbered label of expanded-block position i (1..48)."""
    return EBIT_LABELS[i - 1]


def _check_params(rounds: int, pairs: int) -> None:
    if not 1 <= rounds <= FULL_ROUNDS:
        raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}, got {rounds}")
    if pairs < 1:
        raise ValueError(f"need at least one pair, got {pairs}")


class _Emitter:
    def __init__(self, program: Program | None):
        self.program = program if program is not None else Program()
        self.rules: list = []

    def add(self, head, pos=(), neg=()) -> None:
        r = self.program.add_rule(head, pos, neg)
        if r is not None:
            self.rules.append(r)


def build_round_rules(rounds: int, pairs: int, program: Program | None = None) -> list:
    """Wiring between rounds: initial permutation, renumbered split, the
    swap/XOR chain, the no-swap final round, and the output permutation.

    Emits pairs * (352 + 96*(rounds-1)) ground rules.
    """
    _check_params(rounds, pairs)
    em = _Emitter(program)
    ip = standard_tables()["ip"].entries
    ip_inv = standard_tables()["ip"].inverse().entries
    for pp in range(1, pairs + 1):
        for b1 in range(1, 65):
            em.add(
                atom_text("permuted_plaintext", pp, b1),
                [atom_text("p", pp, ip[b1 - 1])],
            )
        for i in range(1, 33):
            lab = bit_label(i)
            em.add(
                atom_text("r", pp, lab, 0),
                [atom_text("permuted_plaintext", pp, 32 + i)],
            )
            em.add(
                atom_text("l", pp, lab, 0),
                [atom_text("permuted_plaintext", pp, i)],
            )
        for n in range(rounds - 1):
            for i in range(1, 33):
                lab = bit_label(i)
                l_prev = atom_text("l", pp, lab, n)
                r_prev = atom_text("r", pp, lab, n)
                f_cur = atom_text("f", pp, lab, n + 1)
                em.add(atom_text("l", pp, lab, n + 1), [r_prev])
                em.add(atom_text("r", pp, lab, n + 1), [l_prev], [f_cur])
                em.add(atom_text("r", pp, lab, n + 1), [f_cur], [l_prev])
        for i in range(1, 33):
            lab = bit_label(i)
            l_prev = atom_text("l", pp, lab, rounds - 1)
            f_last = atom_text("f", pp, lab, rounds)
            em.add(atom_text("r", pp, lab, rounds), [atom_text("r", pp, lab, rounds - 1)])
            em.add(atom_text("l", pp, lab, rounds), [l_prev], [f_last])
            em.add(atom_text("l", pp, lab, rounds), [f_last], [l_prev])
        for i in range(1, 33):
            lab = bit_label(i)
            em.add(
                atom_text("unpermuted_cipher", pp, 32 + i),
                [atom_text("r", pp, lab, rounds)],
            )
            em.add(
                atom_text("unpermuted_cipher", pp, i),
                [atom_text("l", pp, lab, rounds)],
            )
        for bc in range(1, 65):
            em.add(
                atom_text("cipher", pp, bc),
                [atom_text("unpermuted_cipher", pp, ip_inv[bc - 1])],
            )
    return em.rules


@lru_cache(maxsize=None)
def _sbox_cubes(box_index: int, out_bit: int, minimized: bool) -> tuple:
    """Cover of one S-box output bit as cubes over {0,1,2} (2 = don't care),
    input positions MSB first."""
    box = standard_tables()["sboxes"][box_index - 1]
    if not minimized:
        return tuple(
            tuple((x >> (5 - i)) & 1 for i in range(6))
            for x in box.true_inputs(out_bit)
        )
    names = VarTable()
    inputs = tuple(names.var(f"x{i}") for i in range(1, 7))
    shift = 4 - out_bit
    rows = tuple((box.lookup_int(x) >> shift) & 1 for x in range(64))
    cover = minimize_cover(TableExpr(inputs, rows))
    disjuncts = cover.items if isinstance(cover, OrExpr) else (cover,)
    cubes = []
    for d in disjuncts:
        lits = d.items if isinstance(d, AndExpr) else (d,)
        cube = [2] * 6
        for le in lits:
            assert isinstance(le, LitExpr)
            cube[le.lit.var] = 1 if le.lit.sign else 0
        cubes.append(tuple(cube))
    return tuple(cubes)


def build_f_rules(
    rounds: int,
    pairs: int,
    program: Program | None = None,
    minimize_sboxes: bool = False,
) -> list:
    """The round function: expansion, key XOR, S-boxes, permutation P.

    S-boxes default to one rule per true input row; `minimize_sboxes`
    replaces each output's rows with an exact minimum two-level cover.
    """
    _check_params(rounds, pairs)
    em = _Emitter(program)
    tables = standard_tables()
    expansion = tables["e"].entries
    perm = tables["p"].entries
    for pp in range(1, pairs + 1):
        for n in range(1, rounds + 1):
            for j in range(1, 49):
                em.add(
                    atom_text("e", pp, ebit_label(j), n),
                    [atom_text("r", pp, bit_label(expansion[j - 1]), n - 1)],
                )
            for j in range(1, 49):
                lab = ebit_label(j)
                e_atom = atom_text("e", pp, lab, n)
                k_atom = atom_text("k", lab, n)
                a_atom = atom_text("a", pp, lab, n)
                em.add(a_atom, [e_atom], [k_atom])
                em.add(a_atom, [k_atom], [e_atom])
            for g in range(1, 9):
                for o in range(1, 5):
                    head = atom_text("b", pp, 10 * g + o, n)
                    for cube in _sbox_cubes(g, o, minimize_sboxes):
                        pos, neg = [], []
                        for idx, v in enumerate(cube, start=1):
                            if v == 2:
                                continue
                            (pos if v else neg).append(
                                atom_text("a", pp, 10 * g + idx, n)
                            )
                        em.add(head, pos, neg)
            for i in range(1, 33):
                em.add(
                    atom_text("f", pp, bit_label(i), n),
                    [atom_text("b", pp, bit_label(perm[i - 1]), n)],
                )
    return em.rules


def build_keyschedule_facts(rounds: int, program: Program | None = None) -> list:
    """48*rounds rules tying round-key atoms to original key positions,
    with the PC-1/rotation/PC-2 composition done ahead of time."""
    if not 1 <= rounds <= FULL_ROUNDS:
        raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}, got {rounds}")
    em = _Emitter(program)
    per_round = key_schedule_source_bits(rounds)
    for n in range(1, rounds + 1):
        for j in range(1, 49):
            em.add(
                atom_text("k", ebit_label(j), n),
                [atom_text("key", per_round[n - 1][j - 1])],
            )
    return em.rules


MODES = ("encrypt", "decrypt", "attack")


@dataclass(frozen=True)
class DirectInstance:
    """One solvable problem over the direct encoding.

    plaintexts/ciphertexts are 64-bit blocks, one per pair; key is a
    64-bit block whose parity bits are ignored.
    """

    rounds: int
    mode: str
    plaintexts: tuple = ()
    ciphertexts: tuple = ()
    key: BitBlock | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.rounds <= FULL_ROUNDS:
            raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}")
        for blk in (*self.plaintexts, *self.ciphertexts):
            if blk.width != 64:
                raise ValueError("texts must be 64-bit blocks")
        if self.key is not None and self.key.width != 64:
            raise ValueError("key must be a 64-bit block")
        if self.mode == "encrypt":
            if self.key is None or not self.plaintexts:
                raise ValueError("encrypt needs a key and plaintexts")
        elif self.mode == "decrypt":
            if self.key is None or not self.ciphertexts:
                raise ValueError("decrypt needs a key and ciphertexts")
            if self.plaintexts:
                raise ValueError("decrypt derives plaintexts; do not supply them")
        else:
            if self.key is not None:
                raise ValueError("attack recovers the key; do not supply it")
            if not self.plaintexts or len(self.plaintexts) != len(self.ciphertexts):
                raise ValueError("attack needs matching plaintext/ciphertext pairs")

    @property
    def pairs(self) -> int:
        return max(len(self.plaintexts), len(self.ciphertexts))


def _text_facts(program: Program, symbol: str, pair: int, block: BitBlock) -> None:
    for b in range(1, 65):
        if block.bit(b):
            program.add_fact(atom_text(symbol, pair, b))


def _cipher_constraints(program: Program, pair: int, block: BitBlock) -> None:
    for b in range(1, 65):
        atom = atom_text("cipher", pair, b)
        if block.bit(b):
            program.add_rule(None, (), (atom,))
        else:
            program.add_rule(None, (atom,), ())


def _choice_pair(program: Program, name: str, hat: str) -> None:
    program.add_rule(name, (), (hat,))
    program.add_rule(hat, (), (name,))


def instantiate(inst: DirectInstance, minimize_sboxes: bool = False) -> Program:
    """The full ground program for an instance; frozen against edits."""
    program = Program()
    pairs = inst.pairs
    build_round_rules(inst.rounds, pairs, program)
    build_f_rules(inst.rounds, pairs, program, minimize_sboxes)
    build_keyschedule_facts(inst.rounds, program)
    if inst.mode == "encrypt":
        for i, pt in enumerate(inst.plaintexts, start=1):
            _text_facts(program, "p", i, pt)
        for k in range(1, 65):
            if inst.key.bit(k):
                program.add_fact(atom_text("key", k))
    elif inst.mode == "decrypt":
        for k in range(1, 65):
            if inst.key.bit(k):
                program.add_fact(atom_text("key", k))
        for i, ct in enumerate(inst.ciphertexts, start=1):
            _cipher_constraints(program, i, ct)
            for b in range(1, 65):
                _choice_pair(
                    program, atom_text("p", i, b), atom_text("p_hat", i, b)
                )
    else:
        for i, pt in enumerate(inst.plaintexts, start=1):
            _text_facts(program, "p", i, pt)
        for i, ct in enumerate(inst.ciphertexts, start=1):
            _cipher_constraints(program, i, ct)
        for k in KEY_BITS:
            _choice_pair(program, atom_text("key", k), atom_text("key_hat", k))
    return program.freeze()


def key_choice_atoms(program: Program) -> list:
    """Atom ids of the 56 key choice atoms, for search heuristics."""
    return [program.lookup(atom_text("key", k)) for k in KEY_BITS]


def plaintext_choice_atoms(program: Program, pairs: int) -> list:
    return [
        program.lookup(atom_text("p", i, b))
        for i in range(1, pairs + 1)
        for b in range(1, 65)
    ]


def _block_of(true_bits) -> BitBlock:
    present = set(true_bits)
    return BitBlock.from_bits(1 if b in present else 0 for b in range(1, 65))


def block_from_model(program: Program, model, symbol: str, pair: int) -> BitBlock:
    """The 64-bit block spelled by `symbol(pair, b)` atoms in a model."""
    true_bits = []
    for b in range(1, 65):
        name = atom_text(symbol, pair, b)
        if program.has_atom(name) and program.lookup(name) in model:
            true_bits.append(b)
    return _block_of(true_bits)


def key_from_model(program: Program, model) -> BitBlock:
    """The recovered key as a 64-bit block, parity bits left zero."""
    true_bits = []
    for k in KEY_BITS:
        name = atom_text("key", k)
        if program.has_atom(name) and program.lookup(name) in model:
            true_bits.append(k)
    return _block_of(true_bits)


def assumptions_for_key(program: Program, key: BitBlock) -> list:
    """Pin every key choice atom to the given key's bits."""
    return [
        (program.lookup(atom_text("key", k)), bool(key.bit(k))) for k in KEY_BITS
    ]
