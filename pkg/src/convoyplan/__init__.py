"""Cooperative-transport planning on 4-connected grids.

Multiple agents assemble into rigid convoys to carry multi-cell payloads from
a start configuration to a goal configuration.  The package provides an
optimal two-level search (task expansion + conflict resolution), several
suboptimal variants, scenario generators, an exhaustive oracle with an
independent validator, and a benchmark harness.
"""

from .domain import (
    AgentSpec,
    Constraint,
    Entity,
    GridMap,
    Instance,
    SlotRef,
    TaskSpec,
)

__all__ = [
    "AgentSpec",
    "Constraint",
    "Entity",
    "GridMap",
    "Instance",
    "SlotRef",
    "TaskSpec",
    "solve",
]


def solve(*args, **kwargs):
    """Entry point re-export; see search.solve."""
    from .search import solve as _solve

    return _solve(*args, **kwargs)

__version__ = "0.1.0"
