"""Run-wide tunables with a single defaults object.

Budgets count elementary search steps (solver decisions, enumerated
candidates), not wall-clock time, so runs are reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import BudgetExceeded


@dataclass(frozen=True)
class RunConfig:
    budget: int = 5_000_000
    max_clause_vars: int | None = None
    max_clauses: int = 200_000
    subsume: bool = True
    piece_atom_cap: int = 3
    colour_atom_cap: int = 2
    jobs: int = 1

    def with_budget(self, budget: int) -> "RunConfig":
        return replace(self, budget=budget)


class Budget:
    """Step counter that raises once a run exceeds its configured limit."""

    def __init__(self, limit: int, stage: str):
        self.limit = limit
        self.stage = stage
        self.used = 0

    def tick(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise BudgetExceeded(self.stage, self.limit)

    def remaining(self) -> int:
        return max(self.limit - self.used, 0)


def default_config() -> RunConfig:
    """Defaults, honouring the SNPKIT_BUDGET environment override."""
    cfg = RunConfig()
    env = os.environ.get("SNPKIT_BUDGET")
    if env is not None:
        try:
            cfg = cfg.with_budget(int(env))
        except ValueError:
            pass
    return cfg
