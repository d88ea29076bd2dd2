"""Community and split containers."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Community:
    """The neighbourhood of a target user at one similarity threshold."""

    target: str
    threshold: float
    members: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_empty(self) -> bool:
        return not self.members


@dataclass(frozen=True)
class Split:
    """Disjoint train/test report id sets for one (protocol, user, repeat)."""

    train_ids: frozenset[str]
    test_ids: frozenset[str]

    def overlap(self) -> list[str]:
        return sorted(self.train_ids & self.test_ids)

    def to_dict(self) -> dict[str, list[str]]:
        return {"train_ids": sorted(self.train_ids), "test_ids": sorted(self.test_ids)}
