"""Boolean expressions to logic programs, and tight programs to CNF.

The expression translation follows the everything-false-by-default style:
each definition contributes only the rules stating when its atom is true
(one rule per conjunction, one per disjunct, two per xor).  Free variables
get a choice pair `a <- not a_hat / a_hat <- not a`.  Extra definitions of
an already-defined atom go through a fresh duplicate atom tied back with
`a <- a_i` and `:- a, not a_i`.

The CNF side is a Clark completion for tight programs, with one auxiliary
variable per multi-literal body.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import (
    AndExpr,
    EquivSet,
    Lit,
    LitExpr,
    OrExpr,
    TableExpr,
    XorExpr,
    expr_vars,
    normalize_definition,
)
from .errors import InconsistentInstanceError, TableNodeError, TightnessError
from .program import Program, Rule


def _hat_name(name: str) -> str:
    if "(" in name:
        sym, rest = name.split("(", 1)
        return f"{sym}_hat({rest}"
    return f"{name}_hat"


class VarAtomMap:
    """Bidirectional circuit-variable <-> program-atom map.

    Atoms take the variable's display name; complements of free variables
    take the name with a `_hat` suffix on the symbol.
    """

    def __init__(self, program: Program, names):
        self.program = program
        self.names = names
        self._var_atom: dict = {}
        self._atom_var: dict = {}
        self._hat: dict = {}
        self._p_counter = 1

    def atom_of(self, var: int) -> int:
        aid = self._var_atom.get(var)
        if aid is None:
            aid = self.program.atom_named(self.names.name(var))
            self._var_atom[var] = aid
            self._atom_var[aid] = var
        return aid

    def hat_of(self, var: int) -> int:
        aid = self._hat.get(var)
        if aid is None:
            aid = self.program.atom_named(_hat_name(self.names.name(var)))
            self._hat[var] = aid
        return aid

    def var_of(self, atom_id: int):
        return self._atom_var.get(atom_id)

    def fresh_p(self) -> int:
        """Fresh subexpression atom p1, p2, ... in discovery order."""
        while True:
            name = f"p{self._p_counter}"
            self._p_counter += 1
            if not self.program.has_atom(name):
                return self.program.atom_named(name)


def _is_literal_and(e) -> bool:
    return isinstance(e, AndExpr) and all(
        isinstance(i, LitExpr) and not i.lit.is_const for i in e.items
    )


def expr_rules(target: int, e, vam: VarAtomMap, fresh=None) -> list:
    """Rules stating when `target` is true, per the expression's shape.

    Negated operands become `not` literals directly; non-literal operands
    get fresh subexpression atoms (named by `fresh`, default p1, p2, ...)
    translated recursively.  Disjuncts that are conjunctions of literals
    are inlined into a single rule, the way a truth-table row is.
    """
    if fresh is None:
        fresh = vam.fresh_p
    if isinstance(e, TableExpr):
        raise TableNodeError("convert table nodes to covers before translation")
    out = []
    p = vam.program

    def operand(sub) -> tuple:
        """(atom id, sign) for a body literal, recursing on non-literals."""
        if isinstance(sub, LitExpr):
            if sub.lit.is_const:
                raise ValueError("constant operand; simplify the expression first")
            return vam.atom_of(sub.lit.var), sub.lit.sign
        q = fresh()
        out.extend(expr_rules(q, sub, vam, fresh))
        return q, True

    def add(head, body_lits):
        pos = [a for a, sign in body_lits if sign]
        neg = [a for a, sign in body_lits if not sign]
        if set(pos) & set(neg):
            return  # contradictory body, the rule could never fire
        r = p.add_rule_ids(head, pos, neg)
        if r is not None:
            out.append(r)

    if isinstance(e, LitExpr):
        if e.lit.is_const:
            if e.lit.value:
                add(target, [])
            return out
        add(target, [(vam.atom_of(e.lit.var), e.lit.sign)])
        return out
    if isinstance(e, AndExpr):
        add(target, [operand(i) for i in e.items])
        return out
    if isinstance(e, OrExpr):
        for item in e.items:
            if _is_literal_and(item):
                add(target, [(vam.atom_of(i.lit.var), i.lit.sign) for i in item.items])
            else:
                add(target, [operand(item)])
        return out
    if isinstance(e, XorExpr):
        a = operand(e.a)
        b = operand(e.b)
        add(target, [a, (b[0], not b[1])])
        add(target, [(a[0], not a[1]), b])
        return out
    raise TypeError(f"not a boolean expression: {e!r}")


def choice_rules(free_vars, vam: VarAtomMap) -> list:
    """The pair `a <- not a_hat` / `a_hat <- not a` per free variable."""
    out = []
    p = vam.program
    for v in sorted(free_vars):
        a = vam.atom_of(v)
        hat = vam.hat_of(v)
        for r in (p.add_rule_ids(a, (), (hat,)), p.add_rule_ids(hat, (), (a,))):
            if r is not None:
                out.append(r)
    return out


def force(atom: int, truth: bool, program: Program) -> Rule:
    """`:- not a` pins the atom true; `:- a` pins it false."""
    if truth:
        return program.add_rule_ids(None, (), (atom,))
    return program.add_rule_ids(None, (atom,), ())


def translate_formula(e, vam: VarAtomMap) -> int:
    """Translate a standalone formula; returns its top atom (p1)."""
    top = vam.fresh_p()
    expr_rules(top, e, vam)
    return top


def translate_equivset(es: EquivSet):
    """A program whose stable models correspond one-to-one to the models
    of the equivalence set.

    Returns (program, map).  A variable defined once is translated
    directly; with several definitions each goes through a `__dup<i>` atom
    tied to the variable by `a <- dup` and `:- a, not dup`, which makes the
    definitions agree in every model.  Constant-lhs definitions become
    forcing constraints.
    """
    es.check()
    program = Program()
    vam = VarAtomMap(program, es.names)
    normalized = [normalize_definition(d) for d in es.defs]
    # An atom defined once takes its definition's rules directly.  With two
    # or more definitions every one must go through its own auxiliary atom:
    # leaving the first direct would let a later definition support the atom
    # while the first is false, breaking the model correspondence.
    def_count: dict = {}
    for d in normalized:
        if not d.lhs.is_const:
            def_count[d.lhs.var] = def_count.get(d.lhs.var, 0) + 1
    seen: dict = {}
    supported: set = set()
    for d in normalized:
        if d.lhs.is_const:
            want = bool(d.lhs.value)
            rhs = d.rhs
            if isinstance(rhs, LitExpr):
                if rhs.lit.is_const:
                    if bool(rhs.lit.value) != want:
                        raise InconsistentInstanceError(
                            "definition pins a constant to its complement"
                        )
                    continue
                force(vam.atom_of(rhs.lit.var), want == rhs.lit.sign, program)
                continue
            goal = vam.fresh_p()
            expr_rules(goal, rhs, vam)
            force(goal, want, program)
            continue
        v = d.lhs.var
        a = vam.atom_of(v)
        name = es.names.name(v)
        count = seen.get(v, 0) + 1
        seen[v] = count
        if v in es.free_vars or v in expr_vars(d.rhs):
            # A free variable is supported by its choice pair alone, and a
            # self-referential definition cannot support its variable at
            # all; either way the definition acts as a two-sided
            # constraint.  A head rule here would close a positive loop
            # through the circuit, which all hangs off the free variables.
            dup = program.atom_named(f"{name}__dup{count}")
            expr_rules(dup, d.rhs, vam, fresh=_sub_namer(program, f"{name}__dup{count}"))
            program.add_rule_ids(None, (a,), (dup,))
            program.add_rule_ids(None, (dup,), (a,))
        elif def_count[v] == 1:
            expr_rules(a, d.rhs, vam, fresh=_sub_namer(program, name))
            supported.add(v)
        else:
            dup = program.atom_named(f"{name}__dup{count}")
            expr_rules(dup, d.rhs, vam, fresh=_sub_namer(program, f"{name}__dup{count}"))
            program.add_rule_ids(a, (dup,), ())
            program.add_rule_ids(None, (a,), (dup,))
            supported.add(v)
    # Constraint-routed variables with no defining rule and no choice pair
    # would be stuck false; they are underdetermined, so they choose.
    loose = set(def_count) - supported - set(es.free_vars)
    choice_rules(set(es.free_vars) | loose, vam)
    return program, vam


def _sub_namer(program: Program, base: str):
    counter = [0]

    def fresh() -> int:
        counter[0] += 1
        return program.atom_named(f"{base}__sub{counter[0]}")

    return fresh


# -- Clark completion ------------------------------------------------------


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple

    def __post_init__(self):
        for cl in self.clauses:
            seen = set()
            for lit in cl:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range")
                if -lit in seen:
                    raise ValueError("clause contains a literal and its negation")
                seen.add(lit)


def completion(p: Program):
    """Clark completion of a tight program as CNF.

    Returns (formula, atom_var) where atom_var maps each program atom id
    to its 1-based CNF variable.  Models of the CNF restricted to program
    atoms are exactly the stable models.
    """
    from .solver import check_tight

    tight, cycle = check_tight(p)
    if not tight:
        names = ", ".join(p.atom_name(a) for a in cycle[:6])
        raise TightnessError(
            f"completion requires a tight program; positive cycle through: {names}",
            cycle=cycle,
        )
    atom_var = {aid: aid + 1 for aid in range(p.num_atoms)}
    next_var = p.num_atoms + 1
    clauses = []

    def emit(lits) -> None:
        # Tautologies (x or a not-x disjunct alongside x) are vacuous.
        dedup = tuple(dict.fromkeys(lits))
        if any(-l in dedup for l in dedup):
            return
        clauses.append(dedup)

    def body_literals(r: Rule) -> list:
        return [atom_var[a] for a in r.pos] + [-atom_var[a] for a in r.neg]

    bodies: dict = {aid: [] for aid in range(p.num_atoms)}
    for r in p.rules:
        if r.head is None:
            emit(tuple(-l for l in body_literals(r)))
        else:
            bodies[r.head].append(body_literals(r))

    for aid in range(p.num_atoms):
        a = atom_var[aid]
        defs = bodies[aid]
        if not defs:
            emit((-a,))
            continue
        if any(not b for b in defs):
            emit((a,))  # a fact makes the completion disjunction true
            continue
        disjuncts = []
        for b in defs:
            if len(b) == 1:
                d = b[0]
            else:
                d = next_var
                next_var += 1
                for l in b:
                    emit((-d, l))
                emit(tuple([d] + [-l for l in b]))
            disjuncts.append(d)
            emit((-d, a))
        emit(tuple([-a] + disjuncts))

    return CnfFormula(next_var - 1, tuple(clauses)), atom_var


def emit_dimacs(f: CnfFormula, atom_names: dict | None = None) -> str:
    """Standard DIMACS text; `atom_names` adds `c map <var> <atom>` lines."""
    lines = []
    if atom_names:
        for var in sorted(atom_names):
            lines.append(f"c map {var} {atom_names[var]}")
    lines.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    for cl in f.clauses:
        lines.append(" ".join(str(l) for l in cl) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    num_vars = 0
    clauses = []
    current: list = []
    seen_header = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header: {line!r}")
            num_vars = int(parts[2])
            seen_header = True
            continue
        if not seen_header:
            raise ValueError("clause before DIMACS header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        raise ValueError("unterminated clause")
    return CnfFormula(num_vars, tuple(clauses))


def cnf_models(f: CnfFormula, cap: int = 1 << 20) -> list:
    """All models by plain DPLL with unit propagation, for small formulas.

    Models are returned as sets of true variable indices; raises
    RuntimeError past `cap` models.  This is test plumbing, not a solver.
    """
    models = []

    def dpll(assign: dict, clauses):
        # Unit propagation.
        while True:
            unit = None
            next_clauses = []
            for cl in clauses:
                live = []
                satisfied = False
                for l in cl:
                    v = assign.get(abs(l))
                    if v is None:
                        live.append(l)
                    elif (l > 0) == v:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not live:
                    return
                if len(live) == 1:
                    unit = live[0]
                next_clauses.append(live)
            clauses = next_clauses
            if unit is None:
                break
            assign = dict(assign)
            assign[abs(unit)] = unit > 0
        free = [v for v in range(1, f.num_vars + 1) if v not in assign]
        if not clauses:
            # Every remaining variable is unconstrained.
            import itertools

            for values in itertools.product((False, True), repeat=len(free)):
                full = dict(assign)
                full.update(zip(free, values))
                models.append({v for v, val in full.items() if val})
                if len(models) > cap:
                    raise RuntimeError("model cap exceeded")
            return
        var = abs(clauses[0][0])
        for val in (False, True):
            a2 = dict(assign)
            a2[var] = val
            dpll(a2, clauses)

    dpll({}, [list(cl) for cl in f.clauses])
    return models
