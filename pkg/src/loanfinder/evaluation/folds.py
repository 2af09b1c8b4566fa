"""Concept-blocked fold plans shared by every experiment."""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

PLAN_SCHEMA = "loanfinder.fold-plan/1"


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    folds: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.folds) != self.k:
            raise PlanError(f"plan declares k={self.k} but holds {len(self.folds)} folds")
        seen: set[str] = set()
        for fold in self.folds:
            overlap = seen.intersection(fold)
            if overlap:
                raise PlanError(f"concept {sorted(overlap)[0]!r} occurs in two folds")
            seen.update(fold)
        sizes = [len(f) for f in self.folds]
        if max(sizes) - min(sizes) > 1:
            raise PlanError("fold sizes differ by more than one")

    @property
    def concepts(self) -> set[str]:
        return {c for fold in self.folds for c in fold}

    def test_concepts(self, i: int) -> tuple[str, ...]:
        return self.folds[i]

    def train_concepts(self, i: int) -> tuple[str, ...]:
        return tuple(c for j, fold in enumerate(self.folds) if j != i for c in fold)

    def fold_of(self, concept: str) -> int:
        for i, fold in enumerate(self.folds):
            if concept in fold:
                return i
        raise KeyError(concept)

    def _payload(self) -> dict:
        return {"k": self.k, "seed": self.seed, "folds": [list(f) for f in self.folds]}

    def checksum(self) -> str:
        blob = json.dumps(self._payload(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        data = {"schema": PLAN_SCHEMA, **self._payload(), "checksum": self.checksum()}
        Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def plan_folds(concepts: Iterable[str], k: int, seed: int = 42) -> FoldPlan:
    """Shuffle the concepts with a seeded RNG and deal them round-robin into k folds."""
    pool = sorted(set(concepts))
    if k < 2:
        raise PlanError("k must be at least 2")
    if k > len(pool):
        raise PlanError(f"cannot split {len(pool)} concepts into {k} folds")
    random.Random(seed).shuffle(pool)
    folds = [[] for _ in range(k)]
    for i, concept in enumerate(pool):
        folds[i % k].append(concept)
    return FoldPlan(k, seed, tuple(tuple(sorted(f)) for f in folds))


def load_plan(path: str | Path, concepts: Iterable[str] | None = None) -> FoldPlan:
    """Read a persisted plan, refusing anything damaged or mismatched."""
    hint = f"delete {path} to regenerate the fold plan"
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("schema") != PLAN_SCHEMA:
            raise PlanError(f"unexpected schema {data.get('schema')!r}")
        plan = FoldPlan(int(data["k"]), int(data["seed"]), tuple(tuple(f) for f in data["folds"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise PlanError(f"corrupted fold plan {path}: {exc}; {hint}") from exc
    if plan.checksum() != data.get("checksum"):
        raise PlanError(f"corrupted fold plan {path}: checksum mismatch; {hint}")
    if concepts is not None and plan.concepts != set(concepts):
        raise PlanError(f"fold plan {path} does not cover the wordlist's concepts; {hint}")
    return plan
