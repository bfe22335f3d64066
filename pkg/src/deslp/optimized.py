"""Preprocessed known-plaintext encoding of round-reduced DES.

The cipher is first laid out as a boolean circuit in which wiring steps
(permutations, expansion, renumbering, round-key selection) are ordinary
atomic equivalences and the computing steps are XOR definitions plus
minimized S-box covers.  Partial evaluation then executes the wiring by
renaming, known plaintext/ciphertext bits are pinned and the whole set is
simplified to saturation, and what survives is translated into a logic
program whose stable models are exactly the consistent keys.

Name families (shared label arithmetic with the direct encoding):
  r(P,b,N)  Feistel chain state        s(P,b,N)  S-box output bit
  m(P,i,N)  one minterm of some cover  x(P,b,N)  expansion bit XOR key bit
  k(b,N)    round-key bit alias        key(K)    original key bit (free)
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bits import BitBlock, standard_tables
from .circuit import (
    AndExpr,
    Definition,
    EquivSet,
    Lit,
    LitExpr,
    OrExpr,
    VarTable,
    XorExpr,
    const_expr,
    lit_expr,
    normalize_definition,
    resolve_bindings,
    resolve_lit,
    simplify_to_saturation,
    substitute_expr,
)
from .des import FULL_ROUNDS, key_schedule_source_bits
from .direct import KEY_BITS, _sbox_cubes, bit_label, ebit_label
from .errors import InconsistentInstanceError
from .program import Program, atom_text
from .translate import VarAtomMap, translate_equivset


def build_equivalences(rounds: int, pairs: int) -> EquivSet:
    """The full cipher circuit as one definition per computed bit.

    Definitions come out in dependency order (every rhs variable is free
    or defined earlier), which downstream evaluation relies on.  Free
    variables are the plaintext bits and the 56 effective key bits.
    """
    if not 1 <= rounds <= FULL_ROUNDS:
        raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}, got {rounds}")
    if pairs < 1:
        raise ValueError(f"need at least one pair, got {pairs}")
    tables = standard_tables()
    ip = tables["ip"].entries
    ip_inv = tables["ip"].inverse().entries
    expansion = tables["e"].entries
    perm = tables["p"].entries
    schedule = key_schedule_source_bits(rounds)

    es = EquivSet(names=VarTable(), defs=[], free_vars=set())
    names = es.names

    def var(sym: str, *args: int) -> int:
        return names.var(atom_text(sym, *args))

    def define(v: int, rhs) -> None:
        es.defs.append(Definition(Lit.pos(v), rhs))

    for k in KEY_BITS:
        es.free_vars.add(var("key", k))
    for pp in range(1, pairs + 1):
        for b in range(1, 65):
            es.free_vars.add(var("p", pp, b))
        for b1 in range(1, 65):
            define(var("permuted_plaintext", pp, b1), lit_expr(var("p", pp, ip[b1 - 1])))
        for i in range(1, 33):
            lab = bit_label(i)
            define(var("r", pp, lab, 0), lit_expr(var("permuted_plaintext", pp, 32 + i)))
            define(var("l", pp, lab, 0), lit_expr(var("permuted_plaintext", pp, i)))
    for n in range(1, rounds + 1):
        for j in range(1, 49):
            define(var("k", ebit_label(j), n), lit_expr(var("key", schedule[n - 1][j - 1])))
        for pp in range(1, pairs + 1):
            for j in range(1, 49):
                lab = ebit_label(j)
                define(
                    var("x", pp, lab, n),
                    XorExpr(
                        lit_expr(var("r", pp, bit_label(expansion[j - 1]), n - 1)),
                        lit_expr(var("k", lab, n)),
                    ),
                )
            minterm = 0
            for g in range(1, 9):
                for o in range(1, 5):
                    disjuncts = []
                    for cube in _sbox_cubes(g, o, True):
                        minterm += 1
                        conj = tuple(
                            lit_expr(var("x", pp, 10 * g + idx, n), bool(v))
                            for idx, v in enumerate(cube, start=1)
                            if v != 2
                        )
                        m = var("m", pp, minterm, n)
                        define(m, conj[0] if len(conj) == 1 else AndExpr(conj))
                        disjuncts.append(lit_expr(m))
                    define(
                        var("s", pp, 10 * g + o, n),
                        disjuncts[0] if len(disjuncts) == 1 else OrExpr(tuple(disjuncts)),
                    )
            for i in range(1, 33):
                define(
                    var("f", pp, bit_label(i), n),
                    lit_expr(var("s", pp, bit_label(perm[i - 1]), n)),
                )
            last = n == rounds
            for i in range(1, 33):
                lab = bit_label(i)
                f_cur = lit_expr(var("f", pp, lab, n))
                l_prev = lit_expr(var("l", pp, lab, n - 1))
                r_prev = lit_expr(var("r", pp, lab, n - 1))
                if last:
                    define(var("r", pp, lab, n), r_prev)
                    define(var("l", pp, lab, n), XorExpr(l_prev, f_cur))
                else:
                    define(var("l", pp, lab, n), r_prev)
                    define(var("r", pp, lab, n), XorExpr(l_prev, f_cur))
    for pp in range(1, pairs + 1):
        for i in range(1, 33):
            lab = bit_label(i)
            define(var("unpermuted_cipher", pp, 32 + i), lit_expr(var("r", pp, lab, rounds)))
            define(var("unpermuted_cipher", pp, i), lit_expr(var("l", pp, lab, rounds)))
        for bc in range(1, 65):
            define(
                var("cipher", pp, bc),
                lit_expr(var("unpermuted_cipher", pp, ip_inv[bc - 1])),
            )
    es.check()
    return es


def partial_evaluate(es: EquivSet) -> EquivSet:
    """Execute the wiring: every definition whose rhs is a bare literal is
    removed and its variable renamed away throughout, recorded as a
    binding.  Leaves XOR, conjunction, and disjunction definitions only."""
    subst: dict = {}
    bindings = list(es.bindings)
    normalized = [normalize_definition(d) for d in es.defs]
    for nd in normalized:
        if nd.lhs.is_const:
            continue
        rhs = nd.rhs
        if not isinstance(rhs, LitExpr) or rhs.lit.is_const:
            continue
        src = resolve_lit(Lit.pos(nd.lhs.var), subst)
        tgt = resolve_lit(rhs.lit, subst)
        if src.is_const:
            continue
        if not src.sign:
            src, tgt = src.negated(), tgt.negated()
        if not tgt.is_const and tgt.var == src.var:
            if tgt.sign:
                continue
            raise InconsistentInstanceError(
                f"wiring equates {es.names.name(src.var)} with its negation"
            )
        subst[src.var] = tgt
        bindings.append((src.var, tgt))
    out_defs = []
    for nd in normalized:
        if not nd.lhs.is_const and nd.lhs.var in subst:
            if isinstance(nd.rhs, LitExpr) and not nd.rhs.lit.is_const:
                continue  # the wiring definition itself
            lhs = resolve_lit(nd.lhs, subst)
        else:
            lhs = nd.lhs
        nd2 = normalize_definition(Definition(lhs, substitute_expr(nd.rhs, subst)))
        if (
            not nd2.lhs.is_const
            and isinstance(nd2.rhs, LitExpr)
            and nd2.rhs.lit == Lit.pos(nd2.lhs.var)
        ):
            continue  # tautology left over from chained renames
        out_defs.append(nd2)
    free = set()
    for v in es.free_vars:
        t = resolve_lit(Lit.pos(v), subst)
        if not t.is_const:
            free.add(t.var)
    return EquivSet(names=es.names, defs=out_defs, free_vars=free, bindings=bindings)


@dataclass(frozen=True)
class OptInstance:
    """Known plaintext/ciphertext pairs for one key search."""

    rounds: int
    plaintexts: tuple
    ciphertexts: tuple

    def __post_init__(self):
        if not 1 <= self.rounds <= FULL_ROUNDS:
            raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}")
        if not self.plaintexts or len(self.plaintexts) != len(self.ciphertexts):
            raise ValueError("need matching plaintext/ciphertext pairs")
        for blk in (*self.plaintexts, *self.ciphertexts):
            if blk.width != 64:
                raise ValueError("texts must be 64-bit blocks")

    @property
    def pairs(self) -> int:
        return len(self.plaintexts)


def _pin(es: EquivSet, values) -> EquivSet:
    """Add constant definitions for named variables (resolving through any
    bindings already applied) and simplify to saturation."""
    names = es.names
    bind_map = dict(es.bindings)
    defs = list(es.defs)
    free = set(es.free_vars)
    for name, bit in values:
        t = resolve_lit(Lit.pos(names.var(name)), bind_map)
        if t.is_const:
            if int(t.value) != int(bit):
                raise InconsistentInstanceError(f"{name} is forced to both values")
            continue
        defs.append(Definition(t, const_expr(int(bit))))
        free.discard(t.var)
    return simplify_to_saturation(
        EquivSet(names=names, defs=defs, free_vars=free, bindings=list(es.bindings))
    )


def propagate_known(es: EquivSet, inst: OptInstance) -> EquivSet:
    """Fix every plaintext and ciphertext bit to its known value and
    simplify to saturation; surviving free variables are key bits."""
    values = []
    for i, pt in enumerate(inst.plaintexts, start=1):
        values.extend((atom_text("p", i, b), pt.bit(b)) for b in range(1, 65))
    for i, ct in enumerate(inst.ciphertexts, start=1):
        values.extend((atom_text("cipher", i, b), ct.bit(b)) for b in range(1, 65))
    return _pin(es, values)


def pin_key_bits(es: EquivSet, key: BitBlock, positions) -> EquivSet:
    """Restrict the key space by fixing the given original key positions
    to the bits of `key`; used for small exhaustive cross-checks."""
    return _pin(es, ((atom_text("key", k), key.bit(k)) for k in positions))


def emit_program(es: EquivSet):
    """Translate the simplified set; returns (program, variable map).

    Choice rules over the surviving free variables (the undetermined key
    bits) come from the translation, so stable models correspond
    one-to-one to the consistent keys."""
    program, vam = translate_equivset(es)
    return program.freeze(), vam


@dataclass
class OptAttack:
    """Everything the search needs for one preprocessed instance."""

    instance: OptInstance
    equivs: EquivSet
    program: Program
    vam: VarAtomMap

    def choice_atom_ids(self) -> list:
        return sorted(self.vam.atom_of(v) for v in self.equivs.free_vars)

    def key_assignment(self, model) -> dict:
        """Total var -> bit map over free and eliminated variables."""
        base = {v: int(self.vam.atom_of(v) in model) for v in self.equivs.free_vars}
        return resolve_bindings(self.equivs.bindings, base, default=0)

    def key_from_model(self, model) -> BitBlock:
        full = self.key_assignment(model)
        names = self.equivs.names
        bits = set()
        for k in KEY_BITS:
            if full.get(names.var(atom_text("key", k)), 0):
                bits.add(k)
        return BitBlock.from_bits(1 if b in bits else 0 for b in range(1, 65))


def build_attack(inst: OptInstance, fixed_key: BitBlock | None = None,
                 fixed_positions=()) -> OptAttack:
    """Full pipeline: circuit, wiring execution, known-bit propagation,
    emission.  `fixed_key`/`fixed_positions` optionally pin part of the
    key, shrinking the search space for exhaustive comparisons."""
    es = build_equivalences(inst.rounds, inst.pairs)
    es = partial_evaluate(es)
    es = propagate_known(es, inst)
    if fixed_positions:
        if fixed_key is None:
            raise ValueError("fixed_positions given without fixed_key")
        es = pin_key_bits(es, fixed_key, fixed_positions)
    program, vam = emit_program(es)
    return OptAttack(instance=inst, equivs=es, program=program, vam=vam)
