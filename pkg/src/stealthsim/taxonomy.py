"""Healthcare skill taxonomy and competence similarity against the doctor reference.

The taxonomy is a rooted tree of competence labels. Similarity follows the
Wu-Palmer style ratio ``2 * N3 / (N1 + N2)`` where depths are edge counts
from the root::

    N1 = depth(doctor)
    N2 = depth(skill)
    N3 = depth(deepest common ancestor of skill and doctor)

``other`` is clamped to 0 regardless of where it sits in the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import TaxonomyError, UnknownSkill

REFERENCE_SKILL = "doctor"
NULL_SKILL = "other"


def normalize_label(label: str) -> str:
    """Lowercase, trim, and map spaces/hyphens to underscores ("Police Officer" -> "police_officer")."""
    out = str(label).strip().lower().replace("-", "_").replace(" ", "_")
    while "__" in out:
        out = out.replace("__", "_")
    return out


@dataclass(frozen=True)
class SkillTaxonomy:
    root: str
    parent: Mapping[str, str]
    nodes: frozenset = field(init=False)
    _depth: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parent = {normalize_label(k): normalize_label(v) for k, v in self.parent.items()}
        root = normalize_label(self.root)
        if root in parent:
            raise TaxonomyError(f"root {root!r} must not have a parent")
        nodes = frozenset(parent) | {root}
        for child, par in parent.items():
            if par not in nodes:
                raise TaxonomyError(f"parent {par!r} of {child!r} is not declared")
        depth = {root: 0}
        for label in parent:
            chain = []
            cur = label
            while cur not in depth:
                if cur in chain:
                    raise TaxonomyError(f"cycle through {cur!r}")
                chain.append(cur)
                cur = parent[cur]
            base = depth[cur]
            for i, lab in enumerate(reversed(chain), start=1):
                depth[lab] = base + i
        if REFERENCE_SKILL not in nodes:
            raise TaxonomyError(f"taxonomy must contain the reference skill {REFERENCE_SKILL!r}")
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_depth", depth)

    def __contains__(self, label) -> bool:
        return normalize_label(label) in self.nodes

    def resolve(self, label: str) -> str:
        """Return the normalized label, raising UnknownSkill if absent."""
        lab = normalize_label(label)
        if lab not in self.nodes:
            raise UnknownSkill(label)
        return lab

    def depth(self, label: str) -> int:
        return self._depth[self.resolve(label)]

    def ancestors(self, label: str) -> list[str]:
        """Path from ``label`` up to the root, both inclusive."""
        cur = self.resolve(label)
        path = [cur]
        while cur != self.root:
            cur = self.parent[cur]
            path.append(cur)
        return path

    def lowest_common_ancestor(self, a: str, b: str) -> str:
        seen = set(self.ancestors(a))
        for lab in self.ancestors(b):
            if lab in seen:
                return lab
        return self.root  # unreachable for a connected tree

    def children(self, label: str) -> list[str]:
        lab = self.resolve(label)
        return sorted(c for c, p in self.parent.items() if p == lab)

    def labels(self) -> list[str]:
        """All labels in a stable order (depth, then name); used for wire skill indices."""
        return sorted(self.nodes, key=lambda x: (self._depth[x], x))

    def leaves(self) -> list[str]:
        parents = set(self.parent.values())
        return [lab for lab in self.labels() if lab not in parents]

    def is_under(self, label: str, ancestor: str) -> bool:
        return self.resolve(ancestor) in self.ancestors(label)


def parse_taxonomy(lines: Iterable[str]) -> SkillTaxonomy:
    """Parse ``child<TAB>parent`` lines; the root is the one line whose parent is ``-``."""
    parent: dict[str, str] = {}
    root = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise TaxonomyError(f"line {lineno}: expected 'child<TAB>parent', got {line!r}")
        child, par = normalize_label(parts[0]), parts[1].strip()
        if not child:
            raise TaxonomyError(f"line {lineno}: empty label")
        if child in parent or child == root:
            raise TaxonomyError(f"line {lineno}: duplicate label {child!r}")
        if par == "-":
            if root is not None:
                raise TaxonomyError(f"line {lineno}: second root {child!r}")
            root = child
        else:
            parent[child] = normalize_label(par)
    if root is None:
        raise TaxonomyError("no root declared (expected a 'label<TAB>-' line)")
    return SkillTaxonomy(root=root, parent=parent)


def load_taxonomy(path) -> SkillTaxonomy:
    with open(path, encoding="utf-8") as fh:
        return parse_taxonomy(fh)


@lru_cache(maxsize=1)
def build_default_taxonomy() -> SkillTaxonomy:
    text = resources.files("stealthsim").joinpath("data/default_taxonomy.tsv").read_text("utf-8")
    return parse_taxonomy(text.splitlines())


def depth_to_root(tax: SkillTaxonomy, skill: str) -> int:
    return tax.depth(skill)


def skill_similarity(tax: SkillTaxonomy, skill: str) -> float:
    """Similarity of ``skill`` to the doctor reference, in [0, 1]."""
    lab = tax.resolve(skill)
    if lab == NULL_SKILL:
        return 0.0
    if lab == REFERENCE_SKILL:
        return 1.0
    n1 = tax.depth(REFERENCE_SKILL)
    n2 = tax.depth(lab)
    n3 = tax.depth(tax.lowest_common_ancestor(lab, REFERENCE_SKILL))
    return 2.0 * n3 / (n1 + n2)


def similarity_table(tax: SkillTaxonomy | None = None) -> list[tuple[str, float]]:
    tax = tax or build_default_taxonomy()
    return [(lab, skill_similarity(tax, lab)) for lab in tax.labels() if lab != tax.root]


def write_taxonomy(tax: SkillTaxonomy, path) -> None:
    lines = [f"{tax.root}\t-"]
    lines += [f"{lab}\t{tax.parent[lab]}" for lab in tax.labels() if lab != tax.root]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
