"""Ground normal logic programs and the stable model semantics.

A program is a set of rules `head <- pos, not neg` over interned ground
atoms.  A rule with no head is an integrity constraint: it cannot introduce
stable models, only eliminate those whose atoms satisfy its body.  This
module gives the textbook definitions (reduct, least model, stability
check) plus a brute-force enumerator used as the oracle for the solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import NotDefiniteError, TooManyAtomsError


def atom_text(symbol: str, *args: int) -> str:
    """Canonical text of a ground atom: `symbol` or `symbol(a1,...,ak)`."""
    if not args:
        return symbol
    return f"{symbol}({','.join(str(a) for a in args)})"


@dataclass(frozen=True)
class Rule:
    """`head <- pos, not neg`, all atom ids; head None = integrity constraint.

    An atom in both pos and neg would make the rule inapplicable under any
    interpretation; that is always an encoder bug, so it is rejected.
    """

    head: int | None
    pos: tuple
    neg: tuple

    def __post_init__(self):
        if set(self.pos) & set(self.neg):
            raise ValueError("rule has an atom in both pos and neg body")

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    def key(self):
        return (self.head, tuple(sorted(set(self.pos))), tuple(sorted(set(self.neg))))


def _dedup(ids) -> tuple:
    seen = set()
    out = []
    for i in ids:
        if i not in seen:
            seen.add(i)
            out.append(i)
    return tuple(out)


class Program:
    """A ground program: an atom intern table plus a duplicate-free rule list.

    Rules keep insertion order.  After freeze() the program rejects further
    mutation, so frozen programs can be shared freely.
    """

    def __init__(self):
        self._names: list = []
        self._index: dict = {}
        self.rules: list = []
        self._rule_keys: set = set()
        self._frozen = False

    # -- atoms ---------------------------------------------------------

    def atom(self, symbol: str, *args: int) -> int:
        """Intern an atom and return its id."""
        return self.atom_named(atom_text(symbol, *args))

    def atom_named(self, name: str) -> int:
        aid = self._index.get(name)
        if aid is None:
            if self._frozen:
                raise RuntimeError("program is frozen")
            aid = len(self._names)
            self._names.append(name)
            self._index[name] = aid
        return aid

    def atom_name(self, aid: int) -> str:
        return self._names[aid]

    def has_atom(self, name: str) -> bool:
        return name in self._index

    def lookup(self, name: str) -> int:
        return self._index[name]

    @property
    def num_atoms(self) -> int:
        return len(self._names)

    def fresh_name(self, base: str) -> str:
        if base not in self._index:
            return base
        i = 0
        while f"{base}{i}" in self._index:
            i += 1
        return f"{base}{i}"

    def ids(self, names) -> frozenset:
        return frozenset(self._index[n] for n in names)

    def names(self, ids) -> frozenset:
        return frozenset(self._names[i] for i in ids)

    # -- rules ---------------------------------------------------------

    def add_rule_ids(self, head: int | None, pos=(), neg=()) -> Rule | None:
        """Add a rule over atom ids; duplicates are silently dropped."""
        if self._frozen:
            raise RuntimeError("program is frozen")
        rule = Rule(head, _dedup(pos), _dedup(neg))
        k = rule.key()
        if k in self._rule_keys:
            return None
        self._rule_keys.add(k)
        self.rules.append(rule)
        return rule

    def add_rule(self, head: str | None, pos=(), neg=()) -> Rule | None:
        """Add a rule over atom names; duplicates are silently dropped."""
        hid = None if head is None else self.atom_named(head)
        return self.add_rule_ids(
            hid,
            [self.atom_named(n) for n in pos],
            [self.atom_named(n) for n in neg],
        )

    def add_fact(self, head: str) -> Rule | None:
        return self.add_rule(head, (), ())

    def add_constraint(self, pos=(), neg=()) -> Rule | None:
        return self.add_rule(None, pos, neg)

    def freeze(self) -> "Program":
        self._frozen = True
        return self

    def copy(self) -> "Program":
        out = Program()
        out._names = list(self._names)
        out._index = dict(self._index)
        out.rules = list(self.rules)
        out._rule_keys = set(self._rule_keys)
        return out

    def __len__(self):
        return len(self.rules)


# -- semantics -----------------------------------------------------------


def reduct(p: Program, s) -> Program:
    """The reduct of p with respect to atom-id set s.

    Rules whose negative body intersects s are deleted; surviving rules
    keep only their positive body.  Integrity constraints are treated the
    same way, so surviving constraints stay in the result as headless
    positive rules.
    """
    s = frozenset(s)
    out = Program()
    out._names = list(p._names)
    out._index = dict(p._index)
    for r in p.rules:
        if s.isdisjoint(r.neg):
            out.add_rule_ids(r.head, r.pos, ())
    return out


def least_model(p: Program) -> frozenset:
    """Least model of a definite program by forward chaining.

    Every rule must have a head and an empty negative body.
    """
    watch: dict = {}
    missing = []
    queue = []
    for idx, r in enumerate(p.rules):
        if r.neg or r.head is None:
            raise NotDefiniteError("least_model requires definite rules")
        missing.append(len(r.pos))
        if not r.pos:
            queue.append(r.head)
        for a in r.pos:
            watch.setdefault(a, []).append(idx)
    true = set()
    while queue:
        a = queue.pop()
        if a in true:
            continue
        true.add(a)
        for idx in watch.get(a, ()):
            missing[idx] -= 1
            if missing[idx] == 0:
                h = p.rules[idx].head
                if h not in true:
                    queue.append(h)
    return frozenset(true)


def is_stable_model(p: Program, s) -> bool:
    """True iff s is the least model of the reduct and every integrity
    constraint has an unsatisfied body under s."""
    s = frozenset(s)
    defs = Program()
    defs._names = list(p._names)
    defs._index = dict(p._index)
    for r in p.rules:
        if r.head is None:
            body_holds = set(r.pos) <= s and s.isdisjoint(r.neg)
            if body_holds:
                return False
        elif s.isdisjoint(r.neg):
            defs.add_rule_ids(r.head, r.pos, ())
    return least_model(defs) == s


def enumerate_stable_models_bruteforce(p: Program, max_atoms: int = 22) -> list:
    """All stable models by testing every candidate atom set.

    Candidates are visited in ascending bitmask order (atom id i is bit i),
    which fixes a canonical output order.
    """
    n = p.num_atoms
    if n > max_atoms:
        raise TooManyAtomsError(f"{n} atoms exceeds brute-force cap {max_atoms}")
    out = []
    for mask in range(1 << n):
        s = frozenset(i for i in range(n) if (mask >> i) & 1)
        if is_stable_model(p, s):
            out.append(s)
    return out


def desugar_constraints(p: Program) -> Program:
    """Rewrite integrity constraints as ordinary rules.

    Two fresh atoms f and f' are introduced with the odd loop
    `f' <- not f', f`, and every constraint `<- body` becomes `f <- body`.
    Stable models projected to the original atoms are unchanged.  A program
    without constraints is returned as-is.
    """
    if not any(r.is_constraint for r in p.rules):
        return p
    out = Program()
    out._names = list(p._names)
    out._index = dict(p._index)
    f = out.atom_named(out.fresh_name("f"))
    f2 = out.atom_named(out.fresh_name("f'"))
    out.add_rule_ids(f2, (f,), (f2,))
    for r in p.rules:
        out.add_rule_ids(f if r.head is None else r.head, r.pos, r.neg)
    return out


# -- text format ----------------------------------------------------------

_ATOM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*(\(-?\d+(,-?\d+)*\))?$")


def _check_atom_name(name: str) -> str:
    if not _ATOM_RE.match(name):
        raise ValueError(f"malformed atom {name!r}")
    return name


def format_program(p: Program) -> str:
    """Render a program in the one-rule-per-line text format."""
    lines = []
    for r in p.rules:
        body = [p.atom_name(a) for a in r.pos] + [f"not {p.atom_name(a)}" for a in r.neg]
        if r.head is None:
            lines.append(f":- {', '.join(body)}.")
        elif body:
            lines.append(f"{p.atom_name(r.head)} :- {', '.join(body)}.")
        else:
            lines.append(f"{p.atom_name(r.head)}.")
    return "\n".join(lines) + ("\n" if lines else "")


def _split_body(text: str):
    """Split a rule body on commas that are not inside parentheses."""
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last:
        parts.append(last)
    return parts


def parse_program(text: str) -> Program:
    """Parse the text format: `head :- a, not b.` per line, `%` comments."""
    p = Program()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if not line.endswith("."):
            raise ValueError(f"line {lineno}: rule must end with '.'")
        line = line[:-1].strip()
        if ":-" in line:
            head_text, body_text = line.split(":-", 1)
            head_text = head_text.strip()
            head = None if not head_text else _check_atom_name(head_text)
            pos, neg = [], []
            for part in _split_body(body_text.strip()):
                if part.startswith("not "):
                    neg.append(_check_atom_name(part[4:].strip()))
                else:
                    pos.append(_check_atom_name(part))
            p.add_rule(head, pos, neg)
        else:
            p.add_fact(_check_atom_name(line))
    return p
