"""Boolean equivalence IR, exact two-level minimization, and simplification.

A circuit is kept as a set of definitions `lhs <-> rhs` where lhs is a
signed variable or a constant and rhs is a shallow expression (literals,
and/or/xor, or a small truth table).  Truth tables are minimized with an
exact Quine-McCluskey cover instead of a heuristic PLA minimizer; inputs
here are at most 6 bits wide, so exactness is cheap.

The simplifier substitutes atomic equivalences (variable <-> variable or
constant) and applies local rewrite rules for and/or/xor with repeated,
complementary, or constant operands until nothing changes.  Every rewrite
preserves satisfying assignments projected to the surviving variables;
substituted variables are recorded as bindings so their values can be
reconstructed from a model later.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InconsistentInstanceError, TableNodeError


class VarTable:
    """Interned circuit variables, id <-> display name."""

    def __init__(self):
        self._names: list = []
        self._index: dict = {}

    def var(self, name: str) -> int:
        vid = self._index.get(name)
        if vid is None:
            vid = len(self._names)
            self._names.append(name)
            self._index[name] = vid
        return vid

    def name(self, vid: int) -> str:
        return self._names[vid]

    def has(self, name: str) -> bool:
        return name in self._index

    def __len__(self):
        return len(self._names)


@dataclass(frozen=True)
class Lit:
    """Signed variable or boolean constant.

    Constants carry var=None; sign doubles as the constant's value.
    """

    var: int | None
    sign: bool

    @staticmethod
    def pos(v: int) -> "Lit":
        return Lit(v, True)

    @staticmethod
    def neg(v: int) -> "Lit":
        return Lit(v, False)

    @staticmethod
    def const(value) -> "Lit":
        return TRUE if value else FALSE

    @property
    def is_const(self) -> bool:
        return self.var is None

    @property
    def value(self) -> int:
        if self.var is not None:
            raise ValueError("not a constant literal")
        return int(self.sign)

    def negated(self) -> "Lit":
        return Lit(self.var, not self.sign)

    def with_sign(self, keep: bool) -> "Lit":
        return self if keep else self.negated()


TRUE = Lit(None, True)
FALSE = Lit(None, False)


@dataclass(frozen=True)
class LitExpr:
    lit: Lit


@dataclass(frozen=True)
class AndExpr:
    items: tuple

    def __post_init__(self):
        if not self.items:
            raise ValueError("and needs at least one operand")


@dataclass(frozen=True)
class OrExpr:
    items: tuple

    def __post_init__(self):
        if not self.items:
            raise ValueError("or needs at least one operand")


@dataclass(frozen=True)
class XorExpr:
    a: object
    b: object


@dataclass(frozen=True)
class TableExpr:
    """Truth table over `inputs`; row index reads inputs MSB-first, so row 0
    is the all-zero input and the last row is all-ones."""

    inputs: tuple
    rows: tuple

    def __post_init__(self):
        n = len(self.inputs)
        if n > 8:
            raise TableNodeError(f"table arity {n} exceeds 8 inputs")
        if len(self.rows) != 1 << n:
            raise TableNodeError("table must list one row per input combination")
        if any(r not in (0, 1) for r in self.rows):
            raise TableNodeError("table rows must be 0/1")
        if len(set(self.inputs)) != n:
            raise TableNodeError("table inputs must be distinct variables")


def lit_expr(v: int, sign: bool = True) -> LitExpr:
    return LitExpr(Lit(v, sign))


def const_expr(value) -> LitExpr:
    return LitExpr(Lit.const(value))


def xor_chain(items) -> object:
    """Right-fold a sequence of expressions into binary xor nodes."""
    items = list(items)
    if not items:
        return const_expr(0)
    out = items[-1]
    for e in reversed(items[:-1]):
        out = XorExpr(e, out)
    return out


def expr_vars(e) -> set:
    if isinstance(e, LitExpr):
        return set() if e.lit.is_const else {e.lit.var}
    if isinstance(e, (AndExpr, OrExpr)):
        out = set()
        for i in e.items:
            out |= expr_vars(i)
        return out
    if isinstance(e, XorExpr):
        return expr_vars(e.a) | expr_vars(e.b)
    if isinstance(e, TableExpr):
        return set(e.inputs)
    raise TypeError(f"not a boolean expression: {e!r}")


def expr_size(e) -> int:
    if isinstance(e, LitExpr):
        return 1
    if isinstance(e, (AndExpr, OrExpr)):
        return 1 + sum(expr_size(i) for i in e.items)
    if isinstance(e, XorExpr):
        return 1 + expr_size(e.a) + expr_size(e.b)
    if isinstance(e, TableExpr):
        return 1 + len(e.inputs)
    raise TypeError(f"not a boolean expression: {e!r}")


def eval_expr(e, assignment) -> int:
    """Evaluate under a total assignment var -> {0,1}."""

    def lit_val(lit: Lit) -> int:
        if lit.is_const:
            return lit.value
        try:
            v = assignment[lit.var]
        except KeyError:
            raise ValueError(f"unassigned variable {lit.var}") from None
        return v if lit.sign else 1 - v

    if isinstance(e, LitExpr):
        return lit_val(e.lit)
    if isinstance(e, AndExpr):
        return int(all(eval_expr(i, assignment) for i in e.items))
    if isinstance(e, OrExpr):
        return int(any(eval_expr(i, assignment) for i in e.items))
    if isinstance(e, XorExpr):
        return eval_expr(e.a, assignment) ^ eval_expr(e.b, assignment)
    if isinstance(e, TableExpr):
        idx = 0
        for v in e.inputs:
            idx = (idx << 1) | lit_val(Lit.pos(v))
        return e.rows[idx]
    raise TypeError(f"not a boolean expression: {e!r}")


def negate_expr(e):
    if isinstance(e, LitExpr):
        return LitExpr(e.lit.negated())
    if isinstance(e, AndExpr):
        return OrExpr(tuple(negate_expr(i) for i in e.items))
    if isinstance(e, OrExpr):
        return AndExpr(tuple(negate_expr(i) for i in e.items))
    if isinstance(e, XorExpr):
        return XorExpr(e.a, negate_expr(e.b))
    if isinstance(e, TableExpr):
        return TableExpr(e.inputs, tuple(1 - r for r in e.rows))
    raise TypeError(f"not a boolean expression: {e!r}")


# -- truth tables to two-level covers -------------------------------------


def _cube_expr(cube, inputs):
    """A cube over {0,1,2} (2 = don't care) as a conjunction of literals."""
    lits = [
        LitExpr(Lit(inputs[i], cube[i] == 1))
        for i in range(len(cube))
        if cube[i] != 2
    ]
    if not lits:
        return const_expr(1)
    return AndExpr(tuple(lits))


def _cover_expr(cubes, inputs):
    if not cubes:
        return const_expr(0)
    terms = [_cube_expr(c, inputs) for c in cubes]
    if len(terms) == 1:
        return terms[0]
    return OrExpr(tuple(terms))


def table_to_dnf(t: TableExpr):
    """One conjunct per true row, in row order."""
    n = len(t.inputs)
    cubes = [
        tuple((m >> (n - 1 - i)) & 1 for i in range(n))
        for m in range(1 << n)
        if t.rows[m]
    ]
    return _cover_expr(cubes, t.inputs)


def _prime_implicants(n: int, minterms):
    """All prime implicants of the on-set, as cubes over {0,1,2}."""
    current = {tuple((m >> (n - 1 - i)) & 1 for i in range(n)) for m in minterms}
    primes = set()
    while current:
        merged = set()
        used = set()
        cs = sorted(current)
        by_key = {}
        for c in cs:
            key = tuple(2 if x == 2 else None for x in c), sum(x == 1 for x in c)
            by_key.setdefault(key[0], {}).setdefault(key[1], []).append(c)
        for shape, groups in by_key.items():
            for ones in sorted(groups):
                for a in groups[ones]:
                    for b in groups.get(ones + 1, ()):
                        diff = [i for i in range(n) if a[i] != b[i]]
                        if len(diff) == 1:
                            i = diff[0]
                            m = list(a)
                            m[i] = 2
                            merged.add(tuple(m))
                            used.add(a)
                            used.add(b)
        primes |= current - used
        current = merged
    return sorted(primes)


def _cube_covers(cube, minterm_bits) -> bool:
    return all(c == 2 or c == b for c, b in zip(cube, minterm_bits))


def minimize_cover(t: TableExpr):
    """Exact minimum two-level or-of-ands cover of a truth table.

    No cover with fewer product terms exists.  Ties are broken
    deterministically: primes are considered in lexicographic cube order
    (0 < 1 < don't-care) and the first minimum-size cover found wins.
    """
    n = len(t.inputs)
    minterms = [m for m in range(1 << n) if t.rows[m]]
    if not minterms:
        return const_expr(0)
    if len(minterms) == 1 << n:
        return const_expr(1)
    primes = _prime_implicants(n, minterms)
    bits = {m: tuple((m >> (n - 1 - i)) & 1 for i in range(n)) for m in minterms}
    covers = {m: [c for c in primes if _cube_covers(c, bits[m])] for m in minterms}

    covered_by = {c: frozenset(m for m in minterms if _cube_covers(c, bits[m])) for c in primes}

    # Essential primes are forced; branch and bound on what they leave.
    chosen = []
    uncovered = set(minterms)
    while True:
        ess = {cs[0] for m, cs in covers.items() if m in uncovered and len(cs) == 1}
        if not ess:
            break
        for c in sorted(ess):
            chosen.append(c)
            uncovered -= covered_by[c]

    if uncovered:
        chosen.extend(_exact_cover(frozenset(uncovered), covers, covered_by))
    return _cover_expr(sorted(chosen), t.inputs)


def _cover_lower_bound(uncov, covers) -> int:
    """Minterms with pairwise-disjoint candidate primes each need their own
    cube, giving a cheap admissible bound."""
    used = set()
    count = 0
    for m in sorted(uncov):
        cs = covers[m]
        if used.isdisjoint(cs):
            count += 1
            used.update(cs)
    return count


def _exact_cover(uncovered, covers, covered_by):
    """Minimum-cardinality prime cover of the uncovered minterms.

    Deterministic: the greedy seed, the fail-first minterm choice, and the
    lexicographic prime order are all fixed, and the incumbent is replaced
    only on strict improvement.
    """
    best = []
    left = set(uncovered)
    while left:
        c = max(sorted(covered_by), key=lambda c: len(covered_by[c] & left))
        best.append(c)
        left -= covered_by[c]

    def bb(uncov, picked):
        nonlocal best
        if not uncov:
            if len(picked) < len(best):
                best = list(picked)
            return
        if len(picked) + _cover_lower_bound(uncov, covers) >= len(best):
            return
        m = min(uncov, key=lambda x: (len(covers[x]), x))
        for c in covers[m]:
            if c not in picked:
                bb(uncov - covered_by[c], picked + [c])

    bb(frozenset(uncovered), [])
    return best


# -- equivalence sets ------------------------------------------------------


@dataclass(frozen=True)
class Definition:
    """`lhs <-> rhs` where lhs is a signed variable or a constant."""

    lhs: Lit
    rhs: object


@dataclass
class EquivSet:
    """A conjunction of definitions over named variables.

    free_vars are unconstrained inputs; every other variable mentioned
    anywhere must appear on some lhs.  bindings records substitutions
    applied by the simplifier, in application order, so eliminated
    variables can be recomputed from a model of the survivors.
    """

    names: VarTable
    defs: list = field(default_factory=list)
    free_vars: set = field(default_factory=set)
    bindings: list = field(default_factory=list)

    def check(self) -> None:
        defined = set()
        mentioned = set()
        for d in self.defs:
            if not d.lhs.is_const:
                defined.add(d.lhs.var)
                mentioned.add(d.lhs.var)
            mentioned |= expr_vars(d.rhs)
        loose = mentioned - defined - set(self.free_vars)
        if loose:
            sample = sorted(loose)[:5]
            shown = ", ".join(self.names.name(v) for v in sample)
            raise ValueError(f"variables neither free nor defined: {shown}")

    def defined_vars(self) -> set:
        return {d.lhs.var for d in self.defs if not d.lhs.is_const}

    def all_vars(self) -> set:
        out = set(self.free_vars)
        for d in self.defs:
            if not d.lhs.is_const:
                out.add(d.lhs.var)
            out |= expr_vars(d.rhs)
        return out

    def format(self) -> str:
        """Debug dump, one `lhs <-> rhs` per line."""

        def lit_text(l: Lit) -> str:
            if l.is_const:
                return str(l.value)
            n = self.names.name(l.var)
            return n if l.sign else f"not {n}"

        def expr_text(e) -> str:
            if isinstance(e, LitExpr):
                return lit_text(e.lit)
            if isinstance(e, AndExpr):
                return " & ".join(expr_text(i) for i in e.items)
            if isinstance(e, OrExpr):
                return " | ".join(expr_text(i) for i in e.items)
            if isinstance(e, XorExpr):
                return f"({expr_text(e.a)}) ^ ({expr_text(e.b)})"
            if isinstance(e, TableExpr):
                ins = ",".join(self.names.name(v) for v in e.inputs)
                return f"table[{ins}]{''.join(str(r) for r in e.rows)}"
            raise TypeError(str(e))

        return "\n".join(f"{lit_text(d.lhs)} <-> {expr_text(d.rhs)}" for d in self.defs)


def resolve_lit(lit: Lit, subst: dict) -> Lit:
    """Follow a substitution chain var -> Lit down to a fixed point."""
    while not lit.is_const and lit.var in subst:
        t = subst[lit.var]
        lit = t if lit.sign else t.negated()
    return lit


def substitute_expr(e, subst: dict):
    if isinstance(e, LitExpr):
        return LitExpr(resolve_lit(e.lit, subst))
    if isinstance(e, AndExpr):
        return AndExpr(tuple(substitute_expr(i, subst) for i in e.items))
    if isinstance(e, OrExpr):
        return OrExpr(tuple(substitute_expr(i, subst) for i in e.items))
    if isinstance(e, XorExpr):
        return XorExpr(substitute_expr(e.a, subst), substitute_expr(e.b, subst))
    if isinstance(e, TableExpr):
        return _substitute_table(e, subst)
    raise TypeError(f"not a boolean expression: {e!r}")


def _substitute_table(t: TableExpr, subst: dict):
    """Rename, flip, or cofactor table inputs under a substitution."""
    lits = [resolve_lit(Lit.pos(v), subst) for v in t.inputs]
    if all(not l.is_const and l.sign and l.var == v for l, v in zip(lits, t.inputs)):
        return t
    n = len(t.inputs)
    # Two surviving inputs may have collapsed to the same variable; keep the
    # first occurrence and constrain rows accordingly.
    new_inputs = []
    for l in lits:
        if not l.is_const and l.var not in new_inputs:
            new_inputs.append(l.var)
    rows = []
    for m in range(1 << len(new_inputs)):
        val = {v: (m >> (len(new_inputs) - 1 - j)) & 1 for j, v in enumerate(new_inputs)}
        idx = 0
        for i in range(n):
            l = lits[i]
            if l.is_const:
                bit = l.value
            else:
                bit = val[l.var] if l.sign else 1 - val[l.var]
            idx = (idx << 1) | bit
        rows.append(t.rows[idx])
    if not new_inputs:
        return const_expr(rows[0])
    return TableExpr(tuple(new_inputs), tuple(rows))


def normalize_definition(d: Definition) -> Definition:
    """Normal form: lhs is a positive variable or a constant."""
    lhs = d.lhs
    if lhs.is_const or lhs.sign:
        return d
    return Definition(Lit.pos(lhs.var), negate_expr(d.rhs))


def _as_lit(e) -> Lit | None:
    if isinstance(e, LitExpr):
        return e.lit
    return None


def _simplify_rhs(e):
    """Local constant folding and duplicate/complement elimination."""
    if isinstance(e, LitExpr):
        return e
    if isinstance(e, (AndExpr, OrExpr)):
        is_and = isinstance(e, AndExpr)
        absorb = 0 if is_and else 1  # constant that decides the result
        items = []
        seen = set()
        for raw in e.items:
            i = _simplify_rhs(raw)
            l = _as_lit(i)
            if l is None:
                items.append(i)
                continue
            if l.is_const:
                if l.value == absorb:
                    return const_expr(absorb)
                continue  # neutral constant
            key = (l.var, l.sign)
            if (l.var, not l.sign) in seen:
                return const_expr(absorb)  # X with not X
            if key in seen:
                continue  # X with X
            seen.add(key)
            items.append(i)
        if not items:
            return const_expr(1 - absorb)
        if len(items) == 1:
            return items[0]
        return AndExpr(tuple(items)) if is_and else OrExpr(tuple(items))
    if isinstance(e, XorExpr):
        a = _simplify_rhs(e.a)
        b = _simplify_rhs(e.b)
        la, lb = _as_lit(a), _as_lit(b)
        if la is not None and la.is_const:
            return b if la.value == 0 else _simplify_rhs(negate_expr(b))
        if lb is not None and lb.is_const:
            return a if lb.value == 0 else _simplify_rhs(negate_expr(a))
        if la is not None and lb is not None and la.var == lb.var:
            return const_expr(0 if la.sign == lb.sign else 1)
        return XorExpr(a, b)
    if isinstance(e, TableExpr):
        if len(set(e.rows)) == 1:
            return const_expr(e.rows[0])
        return e
    raise TypeError(f"not a boolean expression: {e!r}")


def simplify_to_saturation(es: EquivSet) -> EquivSet:
    """Apply atomic-equivalence substitution and the local rewrite rules
    until nothing changes.

    Raises InconsistentInstanceError when the definitions force both values
    on some variable (the instance has no model).
    """
    defs = [normalize_definition(d) for d in es.defs]
    subst: dict = {}
    bindings = list(es.bindings)

    def bind(var_lit: Lit, target: Lit) -> None:
        # The left literal is the defined one and is the one replaced,
        # unless it has already collapsed to a constant.
        a = resolve_lit(var_lit, subst)
        b = resolve_lit(target, subst)
        if a.is_const and b.is_const:
            if a.value != b.value:
                raise InconsistentInstanceError("contradictory constants")
            return
        if a.is_const:
            a, b = b, a
        if not b.is_const and a.var == b.var:
            if a.sign == b.sign:
                return
            raise InconsistentInstanceError(
                f"variable {es.names.name(a.var)} equated with its negation"
            )
        tgt = b if a.sign else b.negated()
        subst[a.var] = tgt
        bindings.append((a.var, tgt))

    changed = True
    while changed:
        changed = False
        next_defs = []
        for d in defs:
            lhs = resolve_lit(d.lhs, subst)
            rhs = _simplify_rhs(substitute_expr(d.rhs, subst))
            d2 = normalize_definition(Definition(lhs, rhs))
            lhs, rhs = d2.lhs, d2.rhs
            rl = _as_lit(rhs)

            if rl is not None:
                # Atomic equivalence: absorb into the substitution.
                bind(lhs, rl)
                changed = True
                continue

            if not lhs.is_const and isinstance(rhs, (AndExpr, OrExpr)):
                # Rewriting through bindings can make a definition mention
                # its own variable; resolve `a <-> a op R` by cases on `a`
                # so no self-referential definition survives.
                hit = None
                for item in rhs.items:
                    l = _as_lit(item)
                    if l is not None and not l.is_const and l.var == lhs.var:
                        hit = l
                        break
                if hit is not None:
                    others = tuple(
                        i
                        for i in rhs.items
                        if _as_lit(i) is None
                        or _as_lit(i).is_const
                        or _as_lit(i).var != lhs.var
                    )
                    rest = others[0] if len(others) == 1 else type(rhs)(others)
                    if isinstance(rhs, OrExpr):
                        if hit.sign:  # a <-> a | R  ==  R -> a
                            next_defs.append(
                                Definition(
                                    FALSE,
                                    AndExpr((lit_expr(lhs.var, False), rest)),
                                )
                            )
                        else:  # a <-> not a | R  ==  a, R
                            bind(Lit.pos(lhs.var), TRUE)
                            next_defs.append(Definition(TRUE, rest))
                    else:
                        if hit.sign:  # a <-> a & R  ==  a -> R
                            next_defs.append(
                                Definition(
                                    FALSE,
                                    AndExpr((lit_expr(lhs.var), negate_expr(rest))),
                                )
                            )
                        else:  # a <-> not a & R  ==  not a, not R
                            bind(Lit.pos(lhs.var), FALSE)
                            next_defs.append(Definition(FALSE, rest))
                    changed = True
                    continue

            if lhs.is_const:
                want = lhs.value
                if isinstance(rhs, AndExpr) and want == 1:
                    for item in rhs.items:
                        l = _as_lit(item)
                        if l is not None:
                            bind(l, TRUE)
                        else:
                            next_defs.append(Definition(TRUE, item))
                    changed = True
                    continue
                if isinstance(rhs, OrExpr) and want == 0:
                    for item in rhs.items:
                        l = _as_lit(item)
                        if l is not None:
                            bind(l, FALSE)
                        else:
                            next_defs.append(Definition(FALSE, item))
                    changed = True
                    continue
                if isinstance(rhs, XorExpr):
                    # c <-> A xor B pins A to B (or its negation).
                    la, lb = _as_lit(rhs.a), _as_lit(rhs.b)
                    if la is not None and lb is not None:
                        bind(la, lb.with_sign(want == 0))
                        changed = True
                        continue
                    if la is not None:
                        next_defs.append(Definition(la.with_sign(want == 0), rhs.b))
                        changed = True
                        continue
                    if lb is not None:
                        next_defs.append(Definition(lb.with_sign(want == 0), rhs.a))
                        changed = True
                        continue
                next_defs.append(Definition(lhs, rhs))
                continue

            if isinstance(rhs, XorExpr):
                la, lb = _as_lit(rhs.a), _as_lit(rhs.b)
                # A <-> A xor B pins B; A <-> not A xor B pins B the other way.
                if la is not None and la.var == lhs.var:
                    other = rhs.b
                    lo = _as_lit(other)
                    tgt = Lit.const(1) if la.sign != lhs.sign else Lit.const(0)
                    if lo is not None:
                        bind(lo, tgt)
                    else:
                        next_defs.append(Definition(tgt, other))
                    changed = True
                    continue
                if lb is not None and lb.var == lhs.var:
                    other = rhs.a
                    lo = _as_lit(other)
                    tgt = Lit.const(1) if lb.sign != lhs.sign else Lit.const(0)
                    if lo is not None:
                        bind(lo, tgt)
                    else:
                        next_defs.append(Definition(tgt, other))
                    changed = True
                    continue

            next_defs.append(Definition(lhs, rhs))
        defs = next_defs

    out_free = set()
    for v in es.free_vars:
        r = resolve_lit(Lit.pos(v), subst)
        if not r.is_const:
            # A free variable (or whatever it was renamed to) stays free
            # even when it picked up definitions: those act as constraints
            # on the choice, they do not determine it.
            out_free.add(r.var)
    return EquivSet(names=es.names, defs=defs, free_vars=out_free, bindings=bindings)


def evaluate_definitions(es: EquivSet, base: dict) -> dict:
    """Forward-evaluate a definition set whose defs are in dependency
    order, extending `base` (values for the free variables) to a total
    assignment.  A constant-lhs definition acts as a consistency check."""
    env = dict(base)
    for d in es.defs:
        val = eval_expr(d.rhs, env)
        if d.lhs.is_const:
            if int(d.lhs.value) != val:
                raise InconsistentInstanceError("constant definition violated")
            continue
        want = val if d.lhs.sign else 1 - val
        prev = env.get(d.lhs.var)
        if prev is not None and prev != want:
            raise InconsistentInstanceError(
                f"conflicting definitions for {es.names.name(d.lhs.var)}"
            )
        env[d.lhs.var] = want
    return env


def definitions_hold(es: EquivSet, assignment: dict) -> bool:
    """True iff every definition is satisfied by a total assignment."""
    for d in es.defs:
        val = eval_expr(d.rhs, assignment)
        if d.lhs.is_const:
            if int(d.lhs.value) != val:
                return False
        else:
            lhs = assignment[d.lhs.var] if d.lhs.sign else 1 - assignment[d.lhs.var]
            if lhs != val:
                return False
    return True


def resolve_bindings(bindings, model: dict, default: int = 0) -> dict:
    """Extend a model over surviving variables with values for every bound
    variable, by evaluating bindings most recent first.

    A binding target missing from the model is a variable that ended up
    genuinely unconstrained; it takes `default` so the result stays total
    and consistent.
    """
    out = dict(model)
    for var, tgt in reversed(bindings):
        if tgt.is_const:
            out[var] = tgt.value
        else:
            v = out.get(tgt.var)
            if v is None:
                v = default
                out[tgt.var] = v
            out[var] = v if tgt.sign else 1 - v
    return out
