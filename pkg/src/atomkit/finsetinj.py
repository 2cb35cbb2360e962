"""Finite sets with injective maps.

Objects are sizes n (elements 0..n-1), morphisms are injections stored
as value tuples.  hom_set(m, n) enumerates the n!/(n-m)! injections in
lexicographic payload order, which is the canonical order everywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import ClassVar

from .core import (Cocone, PullbackSquare, RankValue, SiteError, Span,
                   register_backend)


@dataclass(frozen=True)
class FinSet:
    size: int
    site: ClassVar[str] = "finsetinj"

    def __post_init__(self):
        if self.size < 0:
            raise SiteError("object size must be a natural number")


@dataclass(frozen=True)
class Injection:
    dom: FinSet
    cod: FinSet
    map: tuple[int, ...]

    site: ClassVar[str] = "finsetinj"

    def __post_init__(self):
        if len(self.map) != self.dom.size:
            raise SiteError("map length %d does not match domain size %d"
                            % (len(self.map), self.dom.size))
        if any(not 0 <= v < self.cod.size for v in self.map):
            raise SiteError("map value out of codomain range")
        if len(set(self.map)) != len(self.map):
            raise SiteError("map is not injective")

    def __call__(self, i: int) -> int:
        return self.map[i]

    def then(self, other: "Injection") -> "Injection":
        return Injection(self.dom, other.cod, tuple(other.map[v] for v in self.map))

    def sort_key(self):
        return (self.dom.size, self.cod.size, self.map)


def make_injection(dom_size: int, cod_size: int, values) -> Injection:
    return Injection(FinSet(dom_size), FinSet(cod_size), tuple(values))


def complement_positions(f: Injection) -> tuple[int, ...]:
    """Codomain positions missed by f, ascending."""
    return tuple(sorted(set(range(f.cod.size)) - set(f.map)))


class FinSetInjBackend:
    tag = "finsetinj"

    def identity(self, obj: FinSet) -> Injection:
        return Injection(obj, obj, tuple(range(obj.size)))

    def hom_set(self, a: FinSet, b: FinSet) -> list[Injection]:
        return [Injection(a, b, p)
                for p in itertools.permutations(range(b.size), a.size)]

    def rank(self, obj: FinSet) -> RankValue:
        return RankValue((obj.size,))

    def pullback(self, f: Injection, g: Injection) -> PullbackSquare:
        # Intersection of the two images, listed ascending in the target.
        common = sorted(set(f.map) & set(g.map))
        apex = FinSet(len(common))
        to_left = Injection(apex, f.dom, tuple(f.map.index(z) for z in common))
        to_right = Injection(apex, g.dom, tuple(g.map.index(z) for z in common))
        return PullbackSquare(f, g, apex, to_left, to_right)

    def amalgamate(self, span: Span) -> Cocone:
        # Pushout: keep A's elements, append the B elements not glued to X.
        f, g = span.left, span.right
        glued = {g.map[i]: f.map[i] for i in range(span.apex.size)}
        obj = FinSet(f.cod.size + g.cod.size - len(glued))
        from_left = Injection(f.cod, obj, tuple(range(f.cod.size)))
        values = []
        nxt = f.cod.size
        for j in range(g.cod.size):
            if j in glued:
                values.append(glued[j])
            else:
                values.append(nxt)
                nxt += 1
        from_right = Injection(g.cod, obj, tuple(values))
        return Cocone(obj, from_left, from_right)

    def objects_up_to(self, bound: int, labels=()) -> list[FinSet]:
        return [FinSet(k) for k in range(bound + 1)]

    # -- serialization ------------------------------------------------------

    def encode_object(self, obj: FinSet) -> dict:
        return {"site": "finsetinj", "size": obj.size}

    def decode_object(self, data: dict) -> FinSet:
        if "size" not in data:
            raise SiteError("finsetinj object payload needs a 'size' field")
        size = data["size"]
        if not isinstance(size, int):
            raise SiteError("'size' must be an integer")
        return FinSet(size)

    def encode_morphism(self, f: Injection) -> dict:
        return {"dom": f.dom.size, "cod": f.cod.size, "map": list(f.map)}

    def decode_morphism(self, data: dict) -> Injection:
        for key in ("dom", "cod", "map"):
            if key not in data:
                raise SiteError("finsetinj morphism payload needs a %r field" % key)
        if not isinstance(data["map"], list):
            raise SiteError("'map' must be a list of integers")
        return make_injection(data["dom"], data["cod"], data["map"])

    def object_key(self, obj: FinSet) -> str:
        return str(obj.size)

    def morphism_key(self, f: Injection) -> str:
        return "%d>%d:%s" % (f.dom.size, f.cod.size,
                             ",".join(str(v) for v in f.map))


register_backend(FinSetInjBackend())
