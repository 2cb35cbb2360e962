"""Shared machinery for the two morphism backends.

Objects and morphisms are immutable values.  Each backend registers
itself under a site tag ("finsetinj", "itree") and everything downstream
(atoms, presheaf checks, audits, the CLI) dispatches through the
functions here instead of touching payloads directly.

Composition is diagrammatic throughout the package: compose(f, g) means
"f then g", so f.cod must equal g.dom.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable


class SiteError(ValueError):
    """Raised when a payload or a pair of payloads violates a site invariant."""


@dataclass(frozen=True, order=True)
class RankValue:
    """Lexicographically ordered tuple of naturals measuring well-foundedness."""

    components: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.components):
            raise SiteError("rank components must be naturals: %r" % (self.components,))


@dataclass(frozen=True)
class Span:
    """Two morphisms out of a common object: left: X -> A, right: X -> B."""

    left: Any
    right: Any

    def __post_init__(self):
        if self.left.dom != self.right.dom:
            raise SiteError("span legs must share their domain")

    @property
    def apex(self):
        return self.left.dom


@dataclass(frozen=True)
class Cospan:
    """Two morphisms into a common object: left: A -> Z, right: B -> Z."""

    left: Any
    right: Any

    def __post_init__(self):
        if self.left.cod != self.right.cod:
            raise SiteError("cospan legs must share their codomain")

    @property
    def target(self):
        return self.left.cod


@dataclass(frozen=True)
class PullbackSquare:
    """A cospan (left, right) together with its limit.

    apex is the pullback object, to_left: apex -> dom(left) and
    to_right: apex -> dom(right) are the projections.  The square
    commutes: to_left;left == to_right;right.
    """

    left: Any
    right: Any
    apex: Any
    to_left: Any
    to_right: Any

    def __post_init__(self):
        if compose(self.to_left, self.left) != compose(self.to_right, self.right):
            raise SiteError("pullback square does not commute")


@dataclass(frozen=True)
class Cocone:
    """An object C with legs from_left: A -> C, from_right: B -> C over a span."""

    obj: Any
    from_left: Any
    from_right: Any

    def __post_init__(self):
        if self.from_left.cod != self.obj or self.from_right.cod != self.obj:
            raise SiteError("cocone legs must land in the cocone object")


@dataclass(frozen=True)
class AutGroup:
    """A subgroup of Aut(obj), stored as the full sorted element tuple.

    Equality and hashing ignore the generating set, two values with the
    same closure are the same group.
    """

    obj: Any
    elements: tuple
    generators: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for g in self.elements:
            if g.dom != self.obj or g.cod != self.obj:
                raise SiteError("group element is not an endomorphism of the base")

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, f) -> bool:
        return f in set(self.elements)


# ---------------------------------------------------------------------------
# backend registry

BACKENDS: dict[str, Any] = {}


def register_backend(be) -> None:
    BACKENDS[be.tag] = be


def backend(tag: str):
    try:
        return BACKENDS[tag]
    except KeyError:
        raise SiteError("unknown site tag %r" % tag) from None


def backend_of(x):
    return backend(x.site)


# ---------------------------------------------------------------------------
# generic operations

def compose(f, g):
    """Diagrammatic composite, f then g."""
    if f.cod != g.dom:
        raise SiteError("compose: cod of first factor differs from dom of second")
    return f.then(g)


def identity(obj):
    return backend_of(obj).identity(obj)


def hom_set(a, b) -> list:
    """All morphisms a -> b in canonical order."""
    if a.site != b.site:
        raise SiteError("hom_set: objects live in different sites")
    return backend_of(a).hom_set(a, b)


def rank(obj) -> RankValue:
    return backend_of(obj).rank(obj)


def pullback(f, g) -> PullbackSquare:
    """Pullback of the cospan (f, g), apex in canonical form."""
    Cospan(f, g)
    return backend_of(f.dom).pullback(f, g)


def amalgamate(span: Span) -> Cocone:
    """A cocone completing the span, deterministic and small."""
    cone = backend_of(span.apex).amalgamate(span)
    if compose(span.left, cone.from_left) != compose(span.right, cone.from_right):
        raise SiteError("amalgamation produced a non-commuting cocone")
    return cone


def is_identity(f) -> bool:
    return f.dom == f.cod and f == identity(f.dom)


def is_iso(f) -> bool:
    """True when f has a two-sided inverse."""
    return inverse(f) is not None


def inverse(f):
    """The inverse morphism when f is invertible, else None."""
    if f.dom == f.cod and is_identity(f):
        return f
    for g in hom_set(f.cod, f.dom):
        if compose(f, g) == identity(f.dom) and compose(g, f) == identity(f.cod):
            return g
    return None


def sort_key(f):
    return f.sort_key()


def aut_group(obj) -> AutGroup:
    """The full automorphism group of obj."""
    els = tuple(sorted((g for g in hom_set(obj, obj) if is_iso(g)), key=sort_key))
    return AutGroup(obj, els, els)


def subgroup_generated(obj, generators: Iterable) -> AutGroup:
    """Closure of the generators inside Aut(obj).

    Generators must be endomorphisms of obj; in both shipped sites every
    endomorphism is invertible and has finite order, so closing under
    composition alone yields a group.
    """
    gens = tuple(generators)
    for g in gens:
        if g.dom != obj or g.cod != obj:
            raise SiteError("generator is not an endomorphism of the base object")
    ident = identity(obj)
    elements = {ident}
    frontier = [ident]
    while frontier:
        fresh = []
        for a in frontier:
            for g in gens:
                b = compose(a, g)
                if b not in elements:
                    elements.add(b)
                    fresh.append(b)
        frontier = fresh
    return AutGroup(obj, tuple(sorted(elements, key=sort_key)), gens)


def group_name(group: AutGroup) -> str:
    """Short display name: triv, Sym{n} or Aut when full, else order{k}."""
    if group.order == 1:
        return "triv"
    full = aut_group(group.obj)
    if group.order == full.order:
        return "Sym%d" % group.obj.size if group.obj.site == "finsetinj" else "Aut"
    return "order%d" % group.order


def objects_up_to(tag: str, bound: int, labels: tuple[str, ...] = ()) -> list:
    """Bounded object enumeration for audits, in canonical order."""
    return backend(tag).objects_up_to(bound, labels)


def pullback_is_universal(square: PullbackSquare, test_objects: Iterable) -> bool:
    """Check the limit property of the square against a family of test objects.

    For every cone (p, q) from a test object there must be exactly one
    mediating morphism into the apex.
    """
    for w in test_objects:
        homs_a = hom_set(w, square.left.dom)
        homs_b = hom_set(w, square.right.dom)
        mediators = hom_set(w, square.apex)
        for p in homs_a:
            pf = compose(p, square.left)
            for q in homs_b:
                if pf != compose(q, square.right):
                    continue
                hits = [m for m in mediators
                        if compose(m, square.to_left) == p
                        and compose(m, square.to_right) == q]
                if len(hits) != 1:
                    return False
    return True


# ---------------------------------------------------------------------------
# serialization helpers

def encode_object(obj) -> dict:
    return backend_of(obj).encode_object(obj)


def decode_object(data: dict, site: str | None = None):
    tag = data.get("site", site)
    if site is not None and tag != site:
        raise SiteError("field 'site': payload says %r, expected %r" % (tag, site))
    if tag is None:
        tag = "finsetinj" if "size" in data else "itree" if "nodes" in data else None
    if tag is None:
        raise SiteError("object payload carries no recognizable site tag")
    return backend(tag).decode_object(data)


def encode_morphism(f) -> dict:
    return backend_of(f.dom).encode_morphism(f)


def decode_morphism(data: dict, site: str | None = None):
    tag = data.get("site", site)
    if site is not None and tag != site:
        raise SiteError("field 'site': payload says %r, expected %r" % (tag, site))
    if tag is None:
        if "map" in data:
            tag = "finsetinj"
        elif "explicit_images" in data:
            tag = "itree"
    if tag is None:
        raise SiteError("morphism payload carries no recognizable site tag")
    return backend(tag).decode_morphism(data)


def object_key(obj) -> str:
    """Deterministic string key for an object, used in fragment tables."""
    return backend_of(obj).object_key(obj)


def morphism_key(f) -> str:
    """Deterministic string key for a morphism, used in fragment tables."""
    return backend_of(f.dom).morphism_key(f)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))
