"""Small DPLL solver over ground boolean variables.

Used for witness-relation search, colour enumeration, and completion
search. Deterministic: fixed branching order (variable index ascending,
False before True), explicit step budgets.
"""

from __future__ import annotations

from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import BudgetExceeded


class DpllSolver:
    """CNF solver; variables are 1..num_vars, literals signed ints."""

    def __init__(self, num_vars: int, clauses: Sequence[Sequence[int]], stage: str = "solve"):
        self.num_vars = num_vars
        self.stage = stage
        self.unsat = False
        cleaned: List[Tuple[int, ...]] = []
        for clause in clauses:
            seen = set()
            taut = False
            for lit in clause:
                if -lit in seen:
                    taut = True
                    break
                seen.add(lit)
            if taut:
                continue
            if not seen:
                self.unsat = True
            cleaned.append(tuple(sorted(seen, key=abs)))
        self.clauses = cleaned
        self.occurs: List[List[int]] = [[] for _ in range(num_vars + 1)]
        for ci, clause in enumerate(self.clauses):
            for lit in clause:
                self.occurs[abs(lit)].append(ci)

    # The solver state is rebuilt per call; instances are reusable.

    def _run(
        self,
        budget: Optional[int],
        assumptions: Dict[int, bool],
        find_all: bool,
    ) -> Iterator[List[Optional[bool]]]:
        if self.unsat:
            return
        nclauses = len(self.clauses)
        value: List[Optional[bool]] = [None] * (self.num_vars + 1)
        n_sat = [0] * nclauses
        n_unassigned = [len(c) for c in self.clauses]
        sat_total = 0
        trail: List[int] = []
        steps = 0

        def check_budget() -> None:
            if budget is not None and steps > budget:
                raise BudgetExceeded(self.stage, budget)

        def assign(var: int, val: bool) -> Optional[List[int]]:
            """Returns newly unit clause indices, or None on conflict.

            All occurrence counters are updated even on conflict so that
            unassign_to can reverse the full scan symmetrically.
            """
            nonlocal sat_total
            value[var] = val
            trail.append(var)
            units: List[int] = []
            conflict = False
            for ci in self.occurs[var]:
                lit_true = None
                for lit in self.clauses[ci]:
                    if abs(lit) == var:
                        lit_true = (lit > 0) == val
                        break
                if lit_true:
                    n_sat[ci] += 1
                    if n_sat[ci] == 1:
                        sat_total += 1
                else:
                    n_unassigned[ci] -= 1
                    if n_sat[ci] == 0:
                        if n_unassigned[ci] == 0:
                            conflict = True
                        elif n_unassigned[ci] == 1:
                            units.append(ci)
            return None if conflict else units

        def unassign_to(mark: int) -> None:
            nonlocal sat_total
            while len(trail) > mark:
                var = trail.pop()
                val = value[var]
                for ci in self.occurs[var]:
                    lit_true = None
                    for lit in self.clauses[ci]:
                        if abs(lit) == var:
                            lit_true = (lit > 0) == val
                            break
                    if lit_true:
                        n_sat[ci] -= 1
                        if n_sat[ci] == 0:
                            sat_total -= 1
                    else:
                        n_unassigned[ci] += 1
                value[var] = None

        def propagate(units: List[int]) -> bool:
            nonlocal steps
            queue = list(units)
            while queue:
                ci = queue.pop()
                if n_sat[ci] > 0 or n_unassigned[ci] != 1:
                    continue
                lit = next(l for l in self.clauses[ci] if value[abs(l)] is None)
                steps += 1
                check_budget()
                more = assign(abs(lit), lit > 0)
                if more is None:
                    return False
                queue.extend(more)
            return True

        def search(next_var: int) -> Iterator[List[Optional[bool]]]:
            nonlocal steps
            while next_var <= self.num_vars and value[next_var] is not None:
                next_var += 1
            if sat_total == nclauses:
                if not find_all:
                    yield list(value)
                    return
                free = [v for v in range(next_var, self.num_vars + 1) if value[v] is None]
                for combo in product((False, True), repeat=len(free)):
                    model = list(value)
                    for v, val in zip(free, combo):
                        model[v] = val
                    yield model
                return
            if next_var > self.num_vars:
                return
            for val in (False, True):
                steps += 1
                check_budget()
                mark = len(trail)
                units = assign(next_var, val)
                if units is not None and propagate(units):
                    yield from search(next_var + 1)
                unassign_to(mark)

        mark0 = len(trail)
        ok = True
        initial_units = [ci for ci in range(nclauses) if len(self.clauses[ci]) == 1]
        for var, val in assumptions.items():
            if value[var] is not None:
                if value[var] != val:
                    ok = False
                    break
                continue
            units = assign(var, val)
            if units is None:
                ok = False
                break
            initial_units.extend(units)
        if ok and propagate(initial_units):
            yield from search(1)
        unassign_to(mark0)

    def solve(self, budget: Optional[int] = None, assumptions: Optional[Dict[int, bool]] = None) -> Optional[List[bool]]:
        """First model as a 1-based truth list, or None if unsatisfiable.

        Variables left unconstrained by a satisfying prefix default to False.
        """
        for model in self._run(budget, assumptions or {}, find_all=False):
            return [bool(v) for v in model]
        return None

    def iter_models(self, budget: Optional[int] = None, assumptions: Optional[Dict[int, bool]] = None) -> Iterator[List[bool]]:
        """All models, deterministically ordered, each exactly once."""
        for model in self._run(budget, assumptions or {}, find_all=True):
            yield [bool(v) for v in model]
