"""Size budgets for exponential constructions.

Defaults can be overridden with the ``RIPS_HOMOTOPY_BUDGET`` environment
variable, either a bare integer (max simplices) or comma separated
``key=value`` pairs, e.g. ``simplices=200000,chains=50000``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import BudgetExceeded, ValidationError

ENV_VAR = "RIPS_HOMOTOPY_BUDGET"


@dataclass(frozen=True)
class Budget:
    max_simplices: int = 10**6
    max_chains: int = 10**5
    max_points_bl: int = 8


def current_budget() -> Budget:
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return Budget()
    fields = {}
    try:
        if "=" not in raw:
            fields["max_simplices"] = int(raw)
        else:
            keys = {"simplices": "max_simplices", "chains": "max_chains",
                    "points": "max_points_bl"}
            for item in raw.split(","):
                key, value = item.split("=", 1)
                fields[keys[key.strip()]] = int(value)
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"cannot parse {ENV_VAR}={raw!r}") from exc
    if any(v <= 0 for v in fields.values()):
        raise ValidationError(f"{ENV_VAR} values must be positive")
    return Budget(**fields)


def check(count: int, limit: int, what: str) -> None:
    if count > limit:
        raise BudgetExceeded(f"{what}: {count} exceeds budget {limit} "
                             f"(raise it with {ENV_VAR})")
