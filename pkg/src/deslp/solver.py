"""Stable-model search for tight ground normal programs.

On tight programs stable models coincide with supported models, so the
solver never needs unfounded-set reasoning: it keeps per-rule counters of
unsatisfied and falsified body literals and propagates five ways —
satisfied bodies fire their head, heads with no live body become false, a
true head with a single live body forces that body, a satisfied
constraint body is a conflict, and a rule that must not fire (false head,
or no head) with all but one body literal satisfied falsifies the
remaining literal.  Conflicts are analyzed to a first
unique-implication-point clause used for backjumping (no clause database
is kept beyond the backjump reasons); a flag downgrades to chronological
backtracking.

Decisions use a two-sided lookahead: every candidate atom is probed in
both polarities, failed literals are asserted outright, and the atom with
the lexicographically largest (min, max) propagation count is chosen, ties
to the lowest atom id, trying the side that propagated more first.  Probes
are not counted as branches.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import ResourceLimitError, TightnessError
from .program import Program, is_stable_model

UNDEF, TRUE, FALSE = 0, 1, 2


def check_tight(p: Program):
    """(True, []) if the positive dependency graph is acyclic, else
    (False, cycle) with the cycle as a list of atom ids."""
    succs: list = [[] for _ in range(p.num_atoms)]
    for r in p.rules:
        if r.head is not None and r.pos:
            succs[r.head].extend(r.pos)
    color = [0] * p.num_atoms  # 0 unvisited, 1 on stack, 2 done
    for root in range(p.num_atoms):
        if color[root]:
            continue
        stack = [(root, iter(succs[root]))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    cycle = path[path.index(nxt):]
                    return False, cycle
                if color[nxt] == 0:
                    color[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, iter(succs[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                path.pop()
                stack.pop()
    return True, []


@dataclass
class SearchStats:
    branches: int = 0
    conflicts: int = 0
    propagations: int = 0
    lookahead_probes: int = 0
    wall_time_s: float = 0.0

    def merged_with(self, other: "SearchStats") -> "SearchStats":
        return SearchStats(
            self.branches + other.branches,
            self.conflicts + other.conflicts,
            self.propagations + other.propagations,
            self.lookahead_probes + other.lookahead_probes,
            self.wall_time_s + other.wall_time_s,
        )


@dataclass
class SolveResult:
    model: frozenset | None
    stats: SearchStats

    @property
    def satisfiable(self) -> bool:
        return self.model is not None


class _Conflict(Exception):
    """Internal: carries the conflicting antecedent literals."""

    def __init__(self, lits):
        super().__init__("conflict")
        self.lits = lits


class _Engine:
    def __init__(self, p: Program, trace=None):
        n = p.num_atoms
        self.p = p
        self.n = n
        self.trace = trace
        self.heads = []
        self.pos = []
        self.neg = []
        self.pos_watch = [[] for _ in range(n)]
        self.neg_watch = [[] for _ in range(n)]
        self.rules_by_head = [[] for _ in range(n)]
        for rid, r in enumerate(p.rules):
            self.heads.append(r.head)
            self.pos.append(r.pos)
            self.neg.append(r.neg)
            for a in r.pos:
                self.pos_watch[a].append(rid)
            for a in r.neg:
                self.neg_watch[a].append(rid)
            if r.head is not None:
                self.rules_by_head[r.head].append(rid)
        m = len(self.heads)
        self.fals = [0] * m
        self.unsat = [len(self.pos[i]) + len(self.neg[i]) for i in range(m)]
        self.killer = [None] * m
        self.live = [len(self.rules_by_head[a]) for a in range(n)]
        self.val = [UNDEF] * n
        self.level = [0] * n
        self.reason = [None] * n
        self.trail: list = []
        self.trail_lim: list = []
        self.qhead = 0
        self.stats = SearchStats()

    # -- assignment bookkeeping -----------------------------------------

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def enqueue(self, a: int, v: int, reason) -> None:
        cur = self.val[a]
        if cur == v:
            return
        if cur != UNDEF:
            raise _Conflict(self._antecedents_of(reason) + [(a, cur)])
        self.val[a] = v
        self.level[a] = self.decision_level
        self.reason[a] = reason
        self.trail.append(a)

    def _antecedents_of(self, reason) -> list:
        tag = reason[0]
        if tag in ("decide", "assume"):
            return []
        if tag == "rule":  # head fired: body literals hold
            rid = reason[1]
            return [(x, TRUE) for x in self.pos[rid]] + [
                (x, FALSE) for x in self.neg[rid]
            ]
        if tag == "unsupported":  # every body died; cite each killer
            h = reason[1]
            return [self.killer[rid] for rid in self.rules_by_head[h]]
        if tag == "support":  # head true and rid is its last live body
            rid = reason[1]
            h = self.heads[rid]
            out = [(h, TRUE)]
            out.extend(
                self.killer[r2] for r2 in self.rules_by_head[h] if r2 != rid
            )
            return out
        if tag == "contra":  # rule must not fire; the rest of the body holds
            rid, forced = reason[1], reason[2]
            h = self.heads[rid]
            out = [] if h is None else [(h, FALSE)]
            out.extend((x, TRUE) for x in self.pos[rid] if x != forced)
            out.extend((x, FALSE) for x in self.neg[rid] if x != forced)
            return out
        if tag == "backjump":
            return reason[1]
        raise AssertionError(f"unknown reason {reason!r}")

    # -- propagation -----------------------------------------------------

    def propagate(self) -> None:
        # Counter updates for one trail atom are applied in full before any
        # consequence may raise, so cancel_to can reverse them uniformly.
        while self.qhead < len(self.trail):
            a = self.trail[self.qhead]
            self.qhead += 1
            self.stats.propagations += 1
            v = self.val[a]
            if v == TRUE:
                sat_rids = self.pos_watch[a]
                dead_rids = self.neg_watch[a]
                kill_val = TRUE
            else:
                sat_rids = self.neg_watch[a]
                dead_rids = self.pos_watch[a]
                kill_val = FALSE
            fired = []
            contra = []
            dead_heads = []
            for rid in sat_rids:
                self.unsat[rid] -= 1
                if self.unsat[rid] == 0:
                    fired.append(rid)
                elif self.unsat[rid] == 1:
                    contra.append(rid)
            for rid in dead_rids:
                self.fals[rid] += 1
                if self.fals[rid] == 1:
                    self.killer[rid] = (a, kill_val)
                    h = self.heads[rid]
                    if h is not None:
                        self.live[h] -= 1
                        dead_heads.append(h)
            for h in dead_heads:
                self._head_lost_body(h)
            for rid in fired:
                self._body_satisfied(rid)
            for rid in contra:
                self._try_contra(rid)
            if v == TRUE and self.live[a] == 1 and self.rules_by_head[a]:
                self._force_last_body(a)
            elif v == FALSE:
                for rid in self.rules_by_head[a]:
                    self._try_contra(rid)

    def _body_satisfied(self, rid: int) -> None:
        h = self.heads[rid]
        if h is None:
            raise _Conflict(
                [(x, TRUE) for x in self.pos[rid]]
                + [(x, FALSE) for x in self.neg[rid]]
            )
        self.enqueue(h, TRUE, ("rule", rid))

    def _head_lost_body(self, h: int) -> None:
        if self.live[h] == 0:
            if self.val[h] == TRUE:
                raise _Conflict(
                    [(h, TRUE)]
                    + [self.killer[r2] for r2 in self.rules_by_head[h]]
                )
            self.enqueue(h, FALSE, ("unsupported", h))
        elif self.live[h] == 1 and self.val[h] == TRUE:
            self._force_last_body(h)

    def _try_contra(self, rid: int) -> None:
        """Rule that must not fire (false head, or none) with one body
        literal still open: falsify that literal.  Validates against the
        current values, so it is safe to call on stale counter hints."""
        h = self.heads[rid]
        if h is not None and self.val[h] != FALSE:
            return
        if self.fals[rid] or self.unsat[rid] != 1:
            return
        target = None
        target_v = FALSE
        for x in self.pos[rid]:
            v = self.val[x]
            if v == FALSE:
                return
            if v == UNDEF:
                if target is not None:
                    return
                target, target_v = x, FALSE
        for x in self.neg[rid]:
            v = self.val[x]
            if v == TRUE:
                return
            if v == UNDEF:
                if target is not None:
                    return
                target, target_v = x, TRUE
        if target is None:
            return  # body already satisfied; the clash surfaces via counters
        self.enqueue(target, target_v, ("contra", rid, target))

    def _force_last_body(self, h: int) -> None:
        for rid in self.rules_by_head[h]:
            if self.fals[rid] == 0:
                for x in self.pos[rid]:
                    if self.val[x] == UNDEF:
                        self.enqueue(x, TRUE, ("support", rid))
                for x in self.neg[rid]:
                    if self.val[x] == UNDEF:
                        self.enqueue(x, FALSE, ("support", rid))
                return
        raise AssertionError("no live body despite live count")

    def init_propagate(self) -> None:
        """Level-0 start: facts fire, ruleless atoms go false, and
        single-literal constraints pin their atom."""
        for a in range(self.n):
            if not self.rules_by_head[a]:
                self.enqueue(a, FALSE, ("unsupported", a))
        for rid in range(len(self.heads)):
            if self.unsat[rid] == 0:
                self._body_satisfied(rid)
            elif self.heads[rid] is None:
                self._try_contra(rid)
        self.propagate()

    # -- backtracking ------------------------------------------------------

    def new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def cancel_to(self, lvl: int) -> None:
        # Entries at or past qhead were enqueued but never counter-processed
        # (a conflict cut propagation short), so only their values revert.
        if self.decision_level <= lvl:
            return
        cut = self.trail_lim[lvl]
        for i in range(len(self.trail) - 1, cut - 1, -1):
            a = self.trail[i]
            v = self.val[a]
            if i < self.qhead:
                if v == TRUE:
                    sat_rids = self.pos_watch[a]
                    dead_rids = self.neg_watch[a]
                else:
                    sat_rids = self.neg_watch[a]
                    dead_rids = self.pos_watch[a]
                for rid in sat_rids:
                    self.unsat[rid] += 1
                for rid in dead_rids:
                    self.fals[rid] -= 1
                    if self.fals[rid] == 0:
                        h = self.heads[rid]
                        if h is not None:
                            self.live[h] += 1
            self.val[a] = UNDEF
            self.reason[a] = None
        del self.trail[cut:]
        del self.trail_lim[lvl:]
        self.qhead = cut

    # -- conflict analysis ---------------------------------------------

    def analyze_first_uip(self, conflict_lits):
        """(backjump level, asserting literal, clause rest).

        The asserting literal is the first UIP with its conflicting value;
        the caller asserts its flip with the rest as the backjump reason.
        """
        cur = self.decision_level
        seen = set()
        counter = 0
        rest = []
        lits = conflict_lits
        idx = len(self.trail) - 1
        uip = None
        while True:
            for (a, v) in lits:
                if a in seen or self.level[a] == 0:
                    continue
                seen.add(a)
                if self.level[a] == cur:
                    counter += 1
                else:
                    rest.append((a, v))
            while self.trail[idx] not in seen:
                idx -= 1
            a = self.trail[idx]
            seen.discard(a)
            counter -= 1
            if counter == 0:
                uip = (a, self.val[a])
                break
            lits = self._antecedents_of(self.reason[a])
            idx -= 1
        back = max((self.level[a] for a, _ in rest), default=0)
        return back, uip, rest

    def analyze_decision_clause(self):
        """Chronological mode: negate the current decisions."""
        decs = [self.trail[i] for i in self.trail_lim]
        lits = [(a, self.val[a]) for a in decs]
        uip = lits[-1]
        rest = lits[:-1]
        back = self.decision_level - 1
        return back, uip, rest

    def decision_literals(self) -> list:
        return [(self.trail[i], self.val[self.trail[i]]) for i in self.trail_lim]


def _flip(v: int) -> int:
    return FALSE if v == TRUE else TRUE


def solve(
    p: Program,
    assumptions=(),
    decision_atoms=None,
    *,
    heuristic: str = "lookahead",
    backjump: bool = True,
    branch_cap: int | None = None,
    time_cap_s: float | None = None,
    verify: bool = False,
    trace=None,
) -> SolveResult:
    """One stable model extending the assumptions, or unsat.

    assumptions: iterable of (atom_id, truth) pinned before search.
    decision_atoms: candidate atoms for branching (default: all atoms);
    pass the choice atoms of an encoding to keep lookahead focused.
    heuristic: "lookahead" or "first" (lowest-id unassigned, positive).
    backjump: first-UIP backjumping when True, chronological otherwise.
    Raises TightnessError on non-tight input, ResourceLimitError past caps.
    """
    tight, cycle = check_tight(p)
    if not tight:
        names = ", ".join(p.atom_name(a) for a in cycle[:6])
        raise TightnessError(
            f"program has a positive cycle through: {names}", cycle=cycle
        )
    t0 = time.perf_counter()
    eng = _Engine(p, trace=trace)
    stats = eng.stats
    if decision_atoms is None:
        candidates = list(range(p.num_atoms))
    else:
        candidates = sorted(set(decision_atoms))

    def out(model) -> SolveResult:
        stats.wall_time_s = time.perf_counter() - t0
        if model is not None and verify and not is_stable_model(p, model):
            raise AssertionError("solver returned a non-stable model")
        return SolveResult(model, stats)

    def check_caps() -> None:
        if branch_cap is not None and stats.branches > branch_cap:
            stats.wall_time_s = time.perf_counter() - t0
            raise ResourceLimitError(f"branch cap {branch_cap} exceeded", stats=stats)
        if time_cap_s is not None and time.perf_counter() - t0 > time_cap_s:
            stats.wall_time_s = time.perf_counter() - t0
            raise ResourceLimitError(f"time cap {time_cap_s}s exceeded", stats=stats)

    try:
        for a, truth in assumptions:
            eng.enqueue(a, TRUE if truth else FALSE, ("assume",))
        eng.init_propagate()
    except _Conflict:
        stats.conflicts += 1
        return out(None)

    def handle_conflict(c: _Conflict) -> bool:
        """Analyze, backjump, assert; False when the search space is done."""
        while True:
            stats.conflicts += 1
            if trace:
                trace(f"conflict at level {eng.decision_level}")
            if eng.decision_level == 0:
                return False
            if backjump:
                back, uip, rest = eng.analyze_first_uip(c.lits)
            else:
                back, uip, rest = eng.analyze_decision_clause()
            eng.cancel_to(back)
            try:
                eng.enqueue(uip[0], _flip(uip[1]), ("backjump", rest))
                eng.propagate()
                return True
            except _Conflict as c2:
                c = c2

    def probe(a: int, v: int, tested_t=None, tested_f=None):
        """Propagations gained by assuming a=v, or None on conflict.

        On a conflict-free probe the atoms it assigned are recorded in
        tested_t/tested_f: a literal implied by a safe probe cannot itself
        be a failed literal under the same prefix, so the caller skips it.
        """
        stats.lookahead_probes += 1
        if stats.lookahead_probes % 256 == 0:
            check_caps()  # a single pass can outlive the whole time cap
        base = len(eng.trail)
        eng.new_level()
        ok = True
        try:
            eng.enqueue(a, v, ("decide",))
            eng.propagate()
        except _Conflict:
            ok = False
        gain = len(eng.trail) - base
        if ok and tested_t is not None:
            val = eng.val
            for b in eng.trail[base:]:
                (tested_t if val[b] == TRUE else tested_f)[b] = 1
        eng.cancel_to(eng.decision_level - 1)
        return gain if ok else None

    def pick_lookahead():
        """Best (atom, value) to branch on; None=model, False=conflict path."""
        while True:
            unassigned = [a for a in candidates if eng.val[a] == UNDEF]
            if not unassigned:
                return None
            tested_t = bytearray(p.num_atoms)
            tested_f = bytearray(p.num_atoms)
            best = None
            fallback = None
            restart = False
            for a in unassigned:
                if eng.val[a] != UNDEF:
                    continue  # assigned by an earlier failed literal
                if tested_t[a] and tested_f[a]:
                    if fallback is None:
                        fallback = a
                    continue
                gt = gf = None
                if not tested_t[a]:
                    gt = probe(a, TRUE, tested_t, tested_f)
                    if gt is None:
                        # a=TRUE fails under the current prefix: force FALSE.
                        try:
                            eng.enqueue(
                                a, FALSE, ("backjump", eng.decision_literals())
                            )
                            eng.propagate()
                        except _Conflict as c:
                            if not handle_conflict(c):
                                return False
                        restart = True
                        break
                if not tested_f[a]:
                    gf = probe(a, FALSE, tested_t, tested_f)
                    if gf is None:
                        try:
                            eng.enqueue(
                                a, TRUE, ("backjump", eng.decision_literals())
                            )
                            eng.propagate()
                        except _Conflict as c:
                            if not handle_conflict(c):
                                return False
                        restart = True
                        break
                if gt is not None and gf is not None:
                    score = (min(gt, gf), max(gt, gf), -a)
                    value = TRUE if gt >= gf else FALSE
                    if best is None or score > best[0]:
                        best = (score, a, value)
                elif fallback is None:
                    # One polarity vouched for by an earlier probe; no full
                    # score, so only branch here when nothing scored.
                    fallback = a
            if restart:
                continue
            if best is not None:
                return best[1], best[2]
            if fallback is not None:
                return fallback, TRUE
            return None

    while True:
        check_caps()
        if len(eng.trail) == p.num_atoms:
            return out(frozenset(a for a in range(p.num_atoms) if eng.val[a] == TRUE))
        if heuristic == "lookahead":
            picked = pick_lookahead()
            if picked is False:
                return out(None)
            if picked is None:
                if len(eng.trail) == p.num_atoms:
                    continue
                # Candidates exhausted but other atoms remain: fall through
                # to lowest-id branching on the rest.
                rest = [a for a in range(p.num_atoms) if eng.val[a] == UNDEF]
                picked = (rest[0], TRUE)
        else:
            rest = [a for a in candidates if eng.val[a] == UNDEF] or [
                a for a in range(p.num_atoms) if eng.val[a] == UNDEF
            ]
            picked = (rest[0], TRUE)
        a, v = picked
        stats.branches += 1
        if trace:
            trace(f"decide {p.atom_name(a)}={'T' if v == TRUE else 'F'}")
        eng.new_level()
        try:
            eng.enqueue(a, v, ("decide",))
            eng.propagate()
        except _Conflict as c:
            if not handle_conflict(c):
                return out(None)


def enumerate_models(
    p: Program,
    limit: int | None = None,
    assumptions=(),
    decision_atoms=None,
    project_to=None,
    **solve_kw,
) -> tuple:
    """Up to `limit` stable models via a blocking-constraint loop.

    Each found model is excluded by a constraint over `project_to` (default:
    every atom), so with a projection the models are distinct there.
    Returns (models, merged stats).
    """
    work = p.copy()
    models = []
    total = SearchStats()
    proj = sorted(project_to) if project_to is not None else list(range(p.num_atoms))
    while limit is None or len(models) < limit:
        res = solve(work, assumptions, decision_atoms, **solve_kw)
        total = total.merged_with(res.stats)
        if res.model is None:
            break
        models.append(frozenset(a for a in res.model if a < p.num_atoms))
        pos = [a for a in proj if a in res.model]
        neg = [a for a in proj if a not in res.model]
        work = work.copy()
        work.add_rule_ids(None, pos, neg)
    return models, total
