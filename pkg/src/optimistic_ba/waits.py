"""Wait conditions yielded by a party's protocol program.

A party runs its protocol as a generator; each ``yield`` is a blocking point
from the pseudocode, turned into a guarded continuation that the party
re-checks after every event it handles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class Until:
    cond: Callable[[], bool]
    label: str = ""


@dataclass(frozen=True)
class At:
    """Resume once the global clock reaches ``time``."""

    time: int
