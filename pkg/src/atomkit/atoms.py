"""Atoms presented as formal quotients of site objects.

An atom is a pair (n, G) with G a subgroup of Aut(n); it stands for the
quotient of the representable at n by the G-action.  A map of atoms
(n, G) -> (m, H) runs against the site direction: it is represented by
a site arrow f: m -> n, two representatives being equal when they agree
up to precomposition with H.  Validity of a representative depends on a
quantifier direction, selectable per map:

    derived: every sigma in G satisfies f;sigma = gamma;f for some
             gamma in H, so H-classes of representatives are G-stable
    paper:   every gamma in H satisfies gamma;f = f;sigma for some
             sigma in G

The two agree on groups that are full symmetric or trivial on both
sides in many small cases but differ in general; "derived" is the
default because it is the one under which identity maps always exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (AutGroup, PullbackSquare, SiteError, backend_of, compose,
                   group_name, hom_set, identity, inverse, is_iso, pullback,
                   sort_key, subgroup_generated)

VARIANTS = ("derived", "paper")


@dataclass(frozen=True)
class FormalAtom:
    base: object
    group: AutGroup

    def __post_init__(self):
        if self.group.obj != self.base:
            raise SiteError("atom group must consist of automorphisms of the base")

    @property
    def site(self) -> str:
        return type(self.base).site

    def describe(self) -> tuple[str, str]:
        backend = backend_of(self.base)
        return (backend.object_key(self.base), group_name(self.group))


def make_atom(base, generators=()) -> FormalAtom:
    return FormalAtom(base, subgroup_generated(base, tuple(generators)))


def rep_is_valid(source: FormalAtom, target: FormalAtom, rep,
                 variant: str = "derived") -> bool:
    """Whether a site arrow target.base -> source.base represents a map."""
    if variant not in VARIANTS:
        raise SiteError("unknown atom map variant %r" % variant)
    gs, hs = source.group.elements, target.group.elements
    if variant == "derived":
        return all(any(compose(rep, s) == compose(h, rep) for h in hs)
                   for s in gs)
    return all(any(compose(h, rep) == compose(rep, s) for s in gs)
               for h in hs)


def _canonical_rep(source: FormalAtom, target: FormalAtom, rep, variant: str):
    """Class minimum; the class is an orbit on the side the variant quotients.

    Under "derived" two representatives agree when they differ by a
    target-group automorphism up front; under "paper" when they differ
    by a source-group automorphism behind.
    """
    if variant == "derived":
        orbit = (compose(h, rep) for h in target.group.elements)
    else:
        orbit = (compose(rep, s) for s in source.group.elements)
    return min(orbit, key=sort_key)


@dataclass(frozen=True)
class AtomMap:
    """A map of atoms; the stored representative is the class minimum."""

    source: FormalAtom
    target: FormalAtom
    rep: object
    variant: str = field(default="derived", compare=False)

    def __post_init__(self):
        if self.rep.dom != self.target.base or self.rep.cod != self.source.base:
            raise SiteError("atom map representative must run target base -> "
                            "source base")
        if not rep_is_valid(self.source, self.target, self.rep, self.variant):
            raise SiteError("arrow does not represent a map of atoms "
                            "(variant %r)" % self.variant)
        object.__setattr__(self, "rep", _canonical_rep(
            self.source, self.target, self.rep, self.variant))


def atom_identity(atom: FormalAtom, variant: str = "derived") -> AtomMap:
    return AtomMap(atom, atom, identity(atom.base), variant)


def atom_hom(source: FormalAtom, target: FormalAtom,
             variant: str = "derived") -> list[AtomMap]:
    """All maps source -> target, one canonical representative each."""
    seen = set()
    out = []
    for f in hom_set(target.base, source.base):
        if not rep_is_valid(source, target, f, variant):
            continue
        rep = _canonical_rep(source, target, f, variant)
        key = sort_key(rep)
        if key in seen:
            continue
        seen.add(key)
        out.append(AtomMap(source, target, rep, variant))
    return sorted(out, key=lambda m: sort_key(m.rep))


def atom_compose(f: AtomMap, g: AtomMap) -> AtomMap:
    """f then g; the representative composes in the opposite order."""
    if f.target != g.source:
        raise SiteError("atom maps do not compose: middle atoms differ")
    if f.variant != g.variant:
        raise SiteError("atom maps do not compose: variants differ")
    return AtomMap(f.source, g.target, compose(g.rep, f.rep), f.variant)


def atom_iso_formal(a: FormalAtom, b: FormalAtom,
                    variant: str = "derived"):
    """An inverse pair of maps between the two formal quotients, or None.

    This is isomorphism in the formal category of quotients; on the tree
    site it is strictly finer than agreement after sheafification, which
    local_iso_check probes instead.
    """
    if a.base.site != b.base.site:
        raise SiteError("atoms live on different sites")
    ia, ib = atom_identity(a, variant), atom_identity(b, variant)
    for f in atom_hom(a, b, variant):
        for g in atom_hom(b, a, variant):
            if atom_compose(f, g) == ia and atom_compose(g, f) == ib:
                return f, g
    return None


def encode_atom(atom: FormalAtom) -> dict:
    from .core import encode_morphism, encode_object
    return {"base": encode_object(atom.base),
            "generators": [encode_morphism(g) for g in atom.group.generators]}


def decode_atom(data: dict, site: str | None = None) -> FormalAtom:
    from .core import decode_morphism, decode_object
    if "base" not in data:
        raise SiteError("atom payload needs a 'base' field")
    base = decode_object(data["base"], site)
    gens = tuple(decode_morphism(row, base.site)
                 for row in data.get("generators", ()))
    for g in gens:
        if g.dom != base or g.cod != base:
            raise SiteError("atom generator is not an endomorphism of the base")
    return make_atom(base, gens)


# ---------------------------------------------------------------------------
# coequalizers of parallel pairs of representables

@dataclass(frozen=True)
class CoeqTrace:
    """The run of the pullback iteration and its resulting atom.

    quotient_rep runs result.base -> alpha.dom and represents the
    quotient map from the atom at the pair's domain onto the result.
    """

    alpha: object
    beta: object
    steps: tuple[PullbackSquare, ...]
    result: FormalAtom
    sigma: object
    quotient_rep: object

    @property
    def terminal_object(self):
        """The domain the iteration stops at; base of the result atom."""
        return self.result.base

    @property
    def terminal_automorphism(self):
        """The mismatch of the final invertible pair, first then
        inverse of second."""
        return self.sigma

    def quotient_map(self, variant: str = "derived") -> AtomMap:
        src = FormalAtom(self.alpha.dom, subgroup_generated(self.alpha.dom, ()))
        return AtomMap(src, self.result, self.quotient_rep, variant)


def coequalize_representables(alpha, beta, max_steps: int = 64) -> CoeqTrace:
    """Coequalize the pair of atom maps represented by alpha and beta.

    The pair is replaced by the legs of its pullback until both arrows
    are invertible; gluing along an invertible pair is a quotient by
    the cyclic group the mismatch generates.  Each replacement strictly
    drops the rank of the domain, so the loop always finishes.
    """
    if alpha.dom != beta.dom or alpha.cod != beta.cod:
        raise SiteError("coequalizer needs a parallel pair")
    p, q = alpha, beta
    steps: list[PullbackSquare] = []
    while not (is_iso(p) and is_iso(q)):
        if len(steps) >= max_steps:
            raise SiteError("coequalizer iteration exceeded %d steps" % max_steps)
        square = pullback(p, q)
        steps.append(square)
        p, q = square.to_left, square.to_right
    qi = inverse(q)
    sigma = compose(p, qi)
    base = p.dom
    result = FormalAtom(base, subgroup_generated(base, (sigma,)))
    rep = identity(base)
    for square in reversed(steps):
        rep = compose(rep, square.to_left)
    return CoeqTrace(alpha, beta, tuple(steps), result, sigma, rep)
