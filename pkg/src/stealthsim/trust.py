"""Zero-knowledge trust between an evaluating node and an evaluated node.

Trust is computed from the current encounter only: the share of the
evaluator's interests that the evaluated node also holds (gated on the
evaluated node being health-interested) averaged with the evaluated node's
skill similarity to a doctor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyInterestSet
from .taxonomy import SkillTaxonomy, build_default_taxonomy, normalize_label, skill_similarity

HEALTH = "health"
DEFAULT_INTERESTS = ("health", "music", "tourism", "movies", "books")
MAX_INTERESTS = 5


def interest_set(labels: Iterable[str]) -> frozenset:
    return frozenset(normalize_label(x) for x in labels)


@dataclass(frozen=True)
class TrustScore:
    interest_trust: float
    skill_trust: float
    total: float


def _as_set(interests, role) -> frozenset:
    s = interests if isinstance(interests, frozenset) else interest_set(interests)
    if not s:
        raise EmptyInterestSet(f"{role} interest set is empty")
    return s


def interest_trust(evaluator, evaluated) -> float:
    ix = _as_set(evaluator, "evaluator")
    iy = _as_set(evaluated, "evaluated")
    if HEALTH not in iy:
        return 0.0
    return len(ix & iy) / len(ix)


def skill_trust(tax: SkillTaxonomy | None, evaluated_skill: str) -> float:
    return skill_similarity(tax or build_default_taxonomy(), evaluated_skill)


def total_trust(evaluator, evaluated, evaluated_skill: str, tax: SkillTaxonomy | None = None) -> TrustScore:
    # The evaluator's own health interest is checked by the caller (ReceiveAnswer).
    t_i = interest_trust(evaluator, evaluated)
    t_s = skill_trust(tax, evaluated_skill)
    if HEALTH not in _as_set(evaluated, "evaluated"):
        return TrustScore(0.0, t_s, 0.0)
    return TrustScore(t_i, t_s, (t_i + t_s) / 2.0)
