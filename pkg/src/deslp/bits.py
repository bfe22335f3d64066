"""Fixed-width bit vectors and the lookup tables that drive the cipher.

Bits are indexed 1..width, most significant first, matching the standard
cipher descriptions.  Permutation tables are stored in the usual "output
bit i reads input bit entries[i]" orientation.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from functools import lru_cache

from .errors import InvalidTableError

ALLOWED_WIDTHS = frozenset({4, 6, 28, 32, 48, 56, 64})


class BitBlock:
    """Immutable bit vector with 1-based, MSB-first bit positions."""

    __slots__ = ("width", "value")

    def __init__(self, width: int, value: int):
        if width not in ALLOWED_WIDTHS:
            raise ValueError(f"unsupported block width {width}")
        if value < 0 or value >> width:
            raise ValueError(f"value {value:#x} does not fit in {width} bits")
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, val):
        raise AttributeError("BitBlock is immutable")

    @classmethod
    def from_bits(cls, bits) -> "BitBlock":
        bits = tuple(bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        value = 0
        for b in bits:
            value = (value << 1) | b
        return cls(len(bits), value)

    @classmethod
    def from_hex(cls, text: str, width: int = 64) -> "BitBlock":
        return cls(width, int(text, 16))

    @classmethod
    def zero(cls, width: int) -> "BitBlock":
        return cls(width, 0)

    def bit(self, i: int) -> int:
        """Bit at position i, 1-based from the most significant end."""
        if not 1 <= i <= self.width:
            raise IndexError(f"bit index {i} out of range 1..{self.width}")
        return (self.value >> (self.width - i)) & 1

    def bits(self) -> tuple:
        w, v = self.width, self.value
        return tuple((v >> (w - i)) & 1 for i in range(1, w + 1))

    def set_positions(self) -> tuple:
        """Positions of all 1-bits, ascending."""
        w, v = self.width, self.value
        return tuple(i for i in range(1, w + 1) if (v >> (w - i)) & 1)

    def halves(self) -> tuple:
        if self.width not in (56, 64):
            raise ValueError(f"cannot split a {self.width}-bit block in half")
        h = self.width // 2
        return BitBlock(h, self.value >> h), BitBlock(h, self.value & ((1 << h) - 1))

    def concat(self, other: "BitBlock") -> "BitBlock":
        return BitBlock(self.width + other.width, (self.value << other.width) | other.value)

    def rotl(self, n: int) -> "BitBlock":
        w, v = self.width, self.value
        n %= w
        mask = (1 << w) - 1
        return BitBlock(w, ((v << n) | (v >> (w - n))) & mask)

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        if not isinstance(other, BitBlock):
            return NotImplemented
        if other.width != self.width:
            raise ValueError("width mismatch in xor")
        return BitBlock(self.width, self.value ^ other.value)

    def __eq__(self, other):
        return (
            isinstance(other, BitBlock)
            and self.width == other.width
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.width, self.value))

    def __int__(self):
        return self.value

    def hex(self) -> str:
        return f"{self.value:0{self.width // 4}x}"

    def __repr__(self):
        return f"BitBlock({self.width}, 0x{self.hex()})"


@dataclass(frozen=True)
class PermTable:
    """Bit selection table: output bit i is a copy of input bit entries[i-1].

    Entries may repeat (expansion) or skip inputs (compression), so a
    PermTable is not necessarily a permutation in the strict sense.
    """

    entries: tuple
    in_width: int

    def __post_init__(self):
        if not self.entries:
            raise InvalidTableError("empty table")
        for e in self.entries:
            if not 1 <= e <= self.in_width:
                raise InvalidTableError(f"entry {e} outside input width {self.in_width}")

    @property
    def out_width(self) -> int:
        return len(self.entries)

    def is_bijection(self) -> bool:
        return self.in_width == self.out_width and len(set(self.entries)) == self.out_width

    def inverse(self) -> "PermTable":
        if not self.is_bijection():
            raise InvalidTableError("only bijective tables can be inverted")
        inv = [0] * self.out_width
        for out_pos, src in enumerate(self.entries, start=1):
            inv[src - 1] = out_pos
        return PermTable(tuple(inv), self.in_width)

    def apply(self, block: BitBlock) -> BitBlock:
        if block.width != self.in_width:
            raise InvalidTableError(
                f"table expects {self.in_width}-bit input, got {block.width}"
            )
        w, v = block.width, block.value
        out = 0
        for e in self.entries:
            out = (out << 1) | ((v >> (w - e)) & 1)
        return BitBlock(len(self.entries), out)


def apply_permutation(block: BitBlock, table: PermTable) -> BitBlock:
    return table.apply(block)


@dataclass(frozen=True)
class SBox:
    """A 6-in/4-out substitution box given as 4 rows of 16 output values.

    Row index comes from input bits (1,6), column index from bits (2..5).
    """

    index: int
    rows: tuple

    def __post_init__(self):
        if not 1 <= self.index <= 8:
            raise InvalidTableError(f"s-box index {self.index} outside 1..8")
        if len(self.rows) != 4 or any(len(r) != 16 for r in self.rows):
            raise InvalidTableError("s-box must be 4 rows of 16 entries")
        for r in self.rows:
            for v in r:
                if not 0 <= v <= 15:
                    raise InvalidTableError(f"s-box value {v} outside 0..15")

    def lookup_int(self, in6: int) -> int:
        row = ((in6 >> 4) & 2) | (in6 & 1)
        col = (in6 >> 1) & 15
        return self.rows[row][col]

    def lookup(self, in6: BitBlock) -> BitBlock:
        if in6.width != 6:
            raise InvalidTableError(f"s-box input must be 6 bits, got {in6.width}")
        return BitBlock(4, self.lookup_int(in6.value))

    def true_inputs(self, out_bit: int) -> tuple:
        """All 6-bit inputs (as ints) whose output has bit out_bit (1..4, MSB first) set."""
        if not 1 <= out_bit <= 4:
            raise ValueError("output bit must be in 1..4")
        shift = 4 - out_bit
        return tuple(x for x in range(64) if (self.lookup_int(x) >> shift) & 1)


def sbox_lookup(box: SBox, in6: BitBlock) -> BitBlock:
    return box.lookup(in6)


def _data_text(name: str) -> str:
    return importlib.resources.files(__package__).joinpath("data", name).read_text()


def _parse_numbers(text: str):
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        out.extend(int(tok) for tok in line.split())
    return out


def load_perm_table(name: str, in_width: int) -> PermTable:
    """Load a permutation table data file: whitespace-separated decimal
    entries, '#' starts a comment."""
    return PermTable(tuple(_parse_numbers(_data_text(name))), in_width)


def load_sbox(name: str, index: int) -> SBox:
    nums = _parse_numbers(_data_text(name))
    if len(nums) != 64:
        raise InvalidTableError(f"s-box file {name} must hold 64 entries, got {len(nums)}")
    rows = tuple(tuple(nums[16 * r : 16 * (r + 1)]) for r in range(4))
    return SBox(index, rows)


def load_shift_schedule(name: str = "shifts.txt") -> tuple:
    return tuple(_parse_numbers(_data_text(name)))


@lru_cache(maxsize=None)
def standard_tables():
    """The standard cipher tables, loaded once from the packaged data files."""
    ip = load_perm_table("ip.txt", 64)
    return {
        "ip": ip,
        "fp": ip.inverse(),
        "e": load_perm_table("e.txt", 32),
        "p": load_perm_table("p.txt", 32),
        "pc1": load_perm_table("pc1.txt", 64),
        "pc2": load_perm_table("pc2.txt", 56),
        "sboxes": tuple(load_sbox(f"s{i}.txt", i) for i in range(1, 9)),
        "shifts": load_shift_schedule(),
    }
