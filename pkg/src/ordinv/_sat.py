"""Small propositional engine: Tseitin encoding plus a DPLL search.

Variables are positive integers; literals are nonzero integers with sign.
Circuits are nested tuples: ("lit", l), ("const", b), ("not", c),
("and", [..]), ("or", [..]).  The solver takes an explicit decision order so
callers can steer the search (unary/1-type atoms first, pair tables later).
"""

from __future__ import annotations

from collections import deque


def mk_not(c):
    kind = c[0]
    if kind == "const":
        return ("const", not c[1])
    if kind == "lit":
        return ("lit", -c[1])
    if kind == "not":
        return c[1]
    return ("not", c)


def mk_and(parts):
    flat = []
    for p in parts:
        if p[0] == "const":
            if not p[1]:
                return ("const", False)
            continue
        if p[0] == "and":
            flat.extend(p[1])
        else:
            flat.append(p)
    if not flat:
        return ("const", True)
    if len(flat) == 1:
        return flat[0]
    return ("and", flat)


def mk_or(parts):
    flat = []
    for p in parts:
        if p[0] == "const":
            if p[1]:
                return ("const", True)
            continue
        if p[0] == "or":
            flat.extend(p[1])
        else:
            flat.append(p)
    if not flat:
        return ("const", False)
    if len(flat) == 1:
        return flat[0]
    return ("or", flat)


class CnfBuilder:
    def __init__(self) -> None:
        self.num_vars = 0
        self.clauses: list[list[int]] = []

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits) -> None:
        self.clauses.append(list(lits))

    def tseitin(self, circuit) -> int | bool:
        """Encode a circuit, returning a defining literal (or a constant)."""
        kind = circuit[0]
        if kind == "const":
            return circuit[1]
        if kind == "lit":
            return circuit[1]
        if kind == "not":
            sub = self.tseitin(circuit[1])
            if isinstance(sub, bool):
                return not sub
            return -sub
        parts = []
        for sub in circuit[1]:
            lit = self.tseitin(sub)
            if isinstance(lit, bool):
                if kind == "and" and not lit:
                    return False
                if kind == "or" and lit:
                    return True
                continue
            parts.append(lit)
        if not parts:
            return kind == "and"
        if len(parts) == 1:
            return parts[0]
        v = self.new_var()
        if kind == "and":
            for lit in parts:
                self.add_clause([-v, lit])
            self.add_clause([v] + [-lit for lit in parts])
        else:
            for lit in parts:
                self.add_clause([v, -lit])
            self.add_clause([-v] + list(parts))
        return v

    def assert_circuit(self, circuit) -> bool:
        """Assert a circuit as true; returns False if it is constant-false."""
        root = self.tseitin(circuit)
        if isinstance(root, bool):
            return root
        self.add_clause([root])
        return True


def solve_cnf(num_vars: int, clauses, decision_order=None) -> list[bool] | None:
    """DPLL with unit propagation; returns an assignment list (1-based) or None."""
    cls: list[list[int]] = []
    for c in clauses:
        lits = sorted(set(c))
        if not lits:
            return None
        if any(-l in set(lits) for l in lits):
            continue
        cls.append(lits)

    occ: list[list[int]] = [[] for _ in range(2 * num_vars + 1)]
    for ci, c in enumerate(cls):
        for l in c:
            occ[l + num_vars].append(ci)

    assign: list[bool | None] = [None] * (num_vars + 1)
    sat_count = [0] * len(cls)
    free_count = [len(c) for c in cls]
    trail: list[int] = []

    def assign_lit(lit: int):
        assign[abs(lit)] = lit > 0
        trail.append(lit)
        for ci in occ[lit + num_vars]:
            sat_count[ci] += 1
        conflict = False
        units = []
        for ci in occ[-lit + num_vars]:
            free_count[ci] -= 1
            if sat_count[ci] == 0:
                if free_count[ci] == 0:
                    conflict = True
                elif free_count[ci] == 1:
                    units.append(ci)
        return units, conflict

    def undo_to(mark: int) -> None:
        while len(trail) > mark:
            lit = trail.pop()
            assign[abs(lit)] = None
            for ci in occ[lit + num_vars]:
                sat_count[ci] -= 1
            for ci in occ[-lit + num_vars]:
                free_count[ci] += 1

    def propagate(lits) -> bool:
        queue = deque(lits)
        while queue:
            lit = queue.popleft()
            current = assign[abs(lit)]
            if current is not None:
                if current != (lit > 0):
                    return False
                continue
            units, conflict = assign_lit(lit)
            if conflict:
                return False
            for ci in units:
                for l in cls[ci]:
                    if assign[abs(l)] is None:
                        queue.append(l)
                        break
        return True

    if not propagate([c[0] for c in cls if len(c) == 1]):
        return None

    order = list(decision_order or [])
    seen = set(order)
    order.extend(v for v in range(1, num_vars + 1) if v not in seen)

    pending: list[tuple[int, list[int], int, int]] = []
    idx = 0
    while True:
        while idx < len(order) and assign[order[idx]] is not None:
            idx += 1
        if idx == len(order):
            return [assign[v] is True for v in range(1, num_vars + 1)]
        var = order[idx]
        pending.append((var, [var], len(trail), idx))
        ok = propagate([-var])
        while not ok:
            while pending and not pending[-1][1]:
                _, _, mark, _ = pending.pop()
                undo_to(mark)
            if not pending:
                return None
            var, phases, mark, idx = pending[-1]
            undo_to(mark)
            ok = propagate([phases.pop()])
