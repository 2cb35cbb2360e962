"""Finitary labeled binary trees and their embeddings.

A tree value stores only the explicit part: internal nodes with exactly
two (unordered) children, leaves, and tail markers.  A tail marker
labeled l denotes an infinite continuation, a node chain in which every
step has one on-branch child and one leaf sibling, giving the tree one
infinite branch labeled l per tail marker.  Denoted nodes are addressed
by tuples:

    (0, node_id)                 an explicit node
    (1, tail_id, depth, side)    a node of the continuation of tail_id,
                                 depth >= 1, side 0 on the branch,
                                 side 1 the hanging leaf sibling

An embedding maps denoted nodes to denoted nodes injectively, preserving
the root, the parent relation and branch labels.  It is stored finitely:
an address per explicit source node plus, per source tail, the target
tail whose branch the continuation follows and the comb depth at which
it enters.  Every infinite computation below (pullbacks, amalgams,
witnesses) bottoms out because the two sides eventually run along pure
continuations, which are either merged into a single tail marker or
split at a bounded depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, ClassVar, NamedTuple

from .core import (Cocone, PullbackSquare, RankValue, SiteError, Span,
                   register_backend)

INTERNAL, LEAF, TAIL = "internal", "leaf", "tail"


@dataclass(frozen=True)
class FinitaryTree:
    """Explicit encoding, node ids 0..n-1 with the root at 0."""

    kinds: tuple[str, ...]
    children: tuple[tuple[int, int] | None, ...]
    labels: tuple[str | None, ...]

    site: ClassVar[str] = "itree"

    def __post_init__(self):
        n = len(self.kinds)
        if n == 0:
            raise SiteError("a tree needs at least a root node")
        if len(self.children) != n or len(self.labels) != n:
            raise SiteError("node table fields have mismatched lengths")
        seen_child = set()
        for i, kind in enumerate(self.kinds):
            if kind == INTERNAL:
                ch = self.children[i]
                if ch is None or len(ch) != 2:
                    raise SiteError("internal node %d must have exactly 2 children" % i)
                for c in ch:
                    if not 0 <= c < n:
                        raise SiteError("child id %r of node %d out of range" % (c, i))
                    if c in seen_child or c == 0:
                        raise SiteError("node %d has more than one parent" % c)
                    seen_child.add(c)
                if self.labels[i] is not None:
                    raise SiteError("internal node %d must not carry a label" % i)
            elif kind in (LEAF, TAIL):
                if self.children[i] is not None:
                    raise SiteError("%s node %d must not have children" % (kind, i))
                has_label = self.labels[i] is not None
                if has_label != (kind == TAIL):
                    raise SiteError("node %d: labels belong to tail nodes only" % i)
            else:
                raise SiteError("unknown node kind %r" % kind)
        # every node reachable from the root, no detached cycles
        todo, reached = [0], {0}
        while todo:
            i = todo.pop()
            for c in self.children[i] or ():
                reached.add(c)
                todo.append(c)
        if len(reached) != n:
            raise SiteError("nodes %s are not reachable from the root"
                            % sorted(set(range(n)) - reached))

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)

    @property
    def tail_ids(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.kinds) if k == TAIL)

    def sort_key(self):
        return _nested_key(canonical_nested(to_nested(self)))


class TreeStats(NamedTuple):
    branch_count: int
    f_count: int
    rank: RankValue


# ---------------------------------------------------------------------------
# nested build helpers

def leaf():
    return ("leaf",)


def tail(label: str):
    return ("tail", label)


def node(a, b):
    return ("node", a, b)


def build(nested) -> FinitaryTree:
    """Materialize a nested form with preorder numbering."""
    kinds, children, labels = [], [], []

    def go(n):
        idx = len(kinds)
        if n[0] == "leaf":
            kinds.append(LEAF), children.append(None), labels.append(None)
        elif n[0] == "tail":
            kinds.append(TAIL), children.append(None), labels.append(n[1])
        else:
            kinds.append(INTERNAL), children.append(None), labels.append(None)
            a = go(n[1])
            b = go(n[2])
            children[idx] = (a, b)
        return idx

    go(nested)
    return FinitaryTree(tuple(kinds), tuple(children), tuple(labels))


def to_nested(tree: FinitaryTree, nid: int = 0):
    kind = tree.kinds[nid]
    if kind == LEAF:
        return ("leaf",)
    if kind == TAIL:
        return ("tail", tree.labels[nid])
    a, b = tree.children[nid]
    return ("node", to_nested(tree, a), to_nested(tree, b))


def _nested_key(n):
    if n[0] == "leaf":
        return (0,)
    if n[0] == "tail":
        return (1, n[1])
    return (2, _nested_key(n[1]), _nested_key(n[2]))


def canonical_nested(n):
    """Collapse redundant comb encodings and sort unordered children."""
    if n[0] != "node":
        return n
    a, b = canonical_nested(n[1]), canonical_nested(n[2])
    if a[0] == "tail" and b[0] == "leaf":
        return a
    if b[0] == "tail" and a[0] == "leaf":
        return b
    if _nested_key(b) < _nested_key(a):
        a, b = b, a
    return ("node", a, b)


def canonical_form(tree: FinitaryTree) -> FinitaryTree:
    """The minimal encoding; equal canonical forms mean isomorphic trees."""
    return build(canonical_nested(to_nested(tree)))


def validate_tree(data: dict) -> FinitaryTree:
    return _validate_tree_mapped(data)[0]


def _validate_tree_mapped(data: dict) -> tuple[FinitaryTree, dict[int, int]]:
    """Parse a node-table payload, renumber preorder, return the id map."""
    if "nodes" not in data or "root" not in data:
        raise SiteError("tree payload needs 'root' and 'nodes' fields")
    table = {}
    for row in data["nodes"]:
        if "id" not in row or "kind" not in row:
            raise SiteError("tree node rows need 'id' and 'kind' fields")
        if row["id"] in table:
            raise SiteError("duplicate node id %r" % row["id"])
        table[row["id"]] = row
    root = data["root"]
    if root not in table:
        raise SiteError("root id %r is not a listed node" % root)

    kinds, children, labels = [], [], []
    idmap: dict[int, int] = {}

    def go(old):
        if old in idmap:
            raise SiteError("node %r has more than one parent" % old)
        row = table[old]
        idx = len(kinds)
        idmap[old] = idx
        kind = row["kind"]
        if kind == "internal":
            ch = row.get("children")
            if not isinstance(ch, list) or len(ch) != 2:
                raise SiteError("internal node %r needs a 2-element 'children' list" % old)
            kinds.append(INTERNAL), children.append(None), labels.append(None)
            for c in ch:
                if c not in table:
                    raise SiteError("child id %r of node %r is not a listed node" % (c, old))
            a, b = go(ch[0]), go(ch[1])
            children[idx] = (a, b)
        elif kind in ("leaf", "tail"):
            if row.get("children"):
                raise SiteError("%s node %r must not have children" % (kind, old))
            label = row.get("label")
            if (label is None) == (kind == "tail"):
                raise SiteError("node %r: 'label' is required exactly on tail nodes" % old)
            if label is not None and not isinstance(label, str):
                raise SiteError("node %r: 'label' must be a string" % old)
            kinds.append(LEAF if kind == "leaf" else TAIL)
            children.append(None)
            labels.append(label)
        else:
            raise SiteError("node %r has unknown kind %r" % (old, kind))
        return idx

    go(root)
    if len(idmap) != len(table):
        raise SiteError("nodes %s are not reachable from the root"
                        % sorted(set(table) - set(idmap)))
    return FinitaryTree(tuple(kinds), tuple(children), tuple(labels)), idmap


# ---------------------------------------------------------------------------
# explicit-part combinatorics

def parent_map(tree: FinitaryTree) -> tuple[int | None, ...]:
    parents: list[int | None] = [None] * tree.n_nodes
    for i, ch in enumerate(tree.children):
        for c in ch or ():
            parents[c] = i
    return tuple(parents)


def on_branch_set(tree: FinitaryTree) -> frozenset[int]:
    """Explicit nodes lying on a branch: a tail marker among descendants or self."""
    on: set[int] = set()

    def go(nid) -> bool:
        kind = tree.kinds[nid]
        if kind == TAIL:
            hit = True
        elif kind == LEAF:
            hit = False
        else:
            a, b = tree.children[nid]
            ha, hb = go(a), go(b)
            hit = ha or hb
        if hit:
            on.add(nid)
        return hit

    go(0)
    return frozenset(on)


def tree_stats(tree: FinitaryTree) -> TreeStats:
    """Branch count, count of nodes under an off-branch parent, and the rank."""
    branches = len(tree.tail_ids)
    on = on_branch_set(tree)
    parents = parent_map(tree)
    f_count = 0
    for i in range(tree.n_nodes):
        p = parents[i]
        if (p is None and i not in on) or (p is not None and p not in on):
            f_count += 1
    return TreeStats(branches, f_count, RankValue((branches, f_count)))


def branch_path(tree: FinitaryTree, tail_id: int) -> tuple[int, ...]:
    """Explicit ids from the root down to the tail marker."""
    parents = parent_map(tree)
    path = [tail_id]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    return tuple(reversed(path))


def branch_node(tree: FinitaryTree, tail_id: int, i: int):
    """The i-th denoted node along the branch of tail_id, 0 = the root."""
    path = branch_path(tree, tail_id)
    if i < len(path):
        return (0, path[i])
    return (1, tail_id, i - len(path) + 1, 0)


def branch_index(tree: FinitaryTree, tail_id: int, addr) -> int | None:
    """Position of addr along the branch of tail_id, None when off it."""
    path = branch_path(tree, tail_id)
    if addr[0] == 0:
        return path.index(addr[1]) if addr[1] in path else None
    _, t, k, side = addr
    if side != 0 or t != tail_id:
        return None
    return len(path) - 1 + k


def denoted_children(tree: FinitaryTree, addr):
    """The unordered child pair of a denoted node, None on denoted leaves."""
    if addr[0] == 0:
        nid = addr[1]
        kind = tree.kinds[nid]
        if kind == INTERNAL:
            a, b = tree.children[nid]
            return ((0, a), (0, b))
        if kind == TAIL:
            return ((1, nid, 1, 0), (1, nid, 1, 1))
        return None
    _, t, k, side = addr
    if side == 1:
        return None
    return ((1, t, k + 1, 0), (1, t, k + 1, 1))


def parent_addr(tree: FinitaryTree, addr):
    if addr[0] == 1:
        _, t, k, _side = addr
        return (0, t) if k == 1 else (1, t, k - 1, 0)
    nid = addr[1]
    if nid == 0:
        return None
    return (0, parent_map(tree)[nid])


def comb_view(tree: FinitaryTree, addr) -> str | None:
    """The branch label when the denoted subtree below addr is a pure
    continuation (one branch, every off-branch child a leaf), else None."""
    if addr[0] == 1:
        return tree.labels[addr[1]] if addr[3] == 0 else None
    nid = addr[1]
    kind = tree.kinds[nid]
    if kind == TAIL:
        return tree.labels[nid]
    if kind == LEAF:
        return None
    a, b = tree.children[nid]
    va = comb_view(tree, (0, a))
    if va is not None and tree.kinds[b] == LEAF:
        return va
    vb = comb_view(tree, (0, b))
    if vb is not None and tree.kinds[a] == LEAF:
        return vb
    return None


def comb_view_tail(tree: FinitaryTree, addr) -> int:
    """The unique tail marker at or below a comb-view address."""
    if addr[0] == 1:
        return addr[1]
    nid = addr[1]
    while tree.kinds[nid] == INTERNAL:
        a, b = tree.children[nid]
        nid = a if comb_view(tree, (0, a)) is not None else b
    return nid


def comb_children(tree: FinitaryTree, addr):
    """Children of a comb-view node ordered (continuation, off leaf)."""
    a, b = denoted_children(tree, addr)
    if comb_view(tree, a) is not None:
        return a, b
    return b, a


def comb_layout(tree: FinitaryTree, nid: int) -> tuple[tuple[int, int, int], ...]:
    """Explicit nodes inside the comb-view region below nid as
    (node id, depth relative to nid, side) triples."""
    out = [(nid, 0, 0)]
    cur, rel = nid, 0
    while tree.kinds[cur] == INTERNAL:
        cont, off = comb_children(tree, (0, cur))
        rel += 1
        out.append((cont[1], rel, 0))
        out.append((off[1], rel, 1))
        cur = cont[1]
    return tuple(out)


def labels_below(tree: FinitaryTree, addr) -> frozenset[str]:
    if addr[0] == 1:
        return frozenset((tree.labels[addr[1]],)) if addr[3] == 0 else frozenset()
    todo, found = [addr[1]], set()
    while todo:
        nid = todo.pop()
        if tree.kinds[nid] == TAIL:
            found.add(tree.labels[nid])
        todo.extend(tree.children[nid] or ())
    return frozenset(found)


def walk_branch(tree: FinitaryTree, tail_id: int, base, k: int, side: int):
    """The node k steps below base along the branch of tail_id (side 0),
    or the leaf sibling hanging off that step (side 1)."""
    i0 = branch_index(tree, tail_id, base)
    if i0 is None:
        raise SiteError("address %r does not lie on the branch of tail %d"
                        % (base, tail_id))
    here = branch_node(tree, tail_id, i0 + k)
    if side == 0:
        return here
    prev = branch_node(tree, tail_id, i0 + k - 1)
    c1, c2 = denoted_children(tree, prev)
    return c2 if c1 == here else c1


# ---------------------------------------------------------------------------
# embeddings

@dataclass(frozen=True)
class TreeEmbedding:
    dom: FinitaryTree
    cod: FinitaryTree
    explicit_images: tuple  # address per explicit source node
    tail_routes: tuple[tuple[int, int, int], ...]  # (src tail, tgt tail, entry)

    site: ClassVar[str] = "itree"

    def route(self, t: int) -> tuple[int, int]:
        for a, b, e in self.tail_routes:
            if a == t:
                return (b, e)
        raise SiteError("source node %d is not a routed tail" % t)

    def image(self, addr):
        if addr[0] == 0:
            return self.explicit_images[addr[1]]
        _, t, k, side = addr
        s, _entry = self.route(t)
        return walk_branch(self.cod, s, self.explicit_images[t], k, side)

    def then(self, other: "TreeEmbedding") -> "TreeEmbedding":
        if self.cod != other.dom:
            raise SiteError("embedding composition: middle objects differ")
        imgs = tuple(other.image(a) for a in self.explicit_images)
        targets = {t: other.route(s)[0] for t, s, _e in self.tail_routes}
        return make_embedding(self.dom, other.cod, imgs, targets)

    def sort_key(self):
        return (self.explicit_images, self.tail_routes)


def make_embedding(dom: FinitaryTree, cod: FinitaryTree, images,
                   route_targets: dict[int, int]) -> TreeEmbedding:
    """Build an embedding; entry offsets are derived from the images."""
    routes = []
    for t in dom.tail_ids:
        img = images[t]
        routes.append((t, route_targets[t], img[2] if img[0] == 1 else 0))
    return TreeEmbedding(dom, cod, tuple(images), tuple(sorted(routes)))


def identity_embedding(tree: FinitaryTree) -> TreeEmbedding:
    return make_embedding(tree, tree, tuple((0, i) for i in range(tree.n_nodes)),
                          {t: t for t in tree.tail_ids})


def _valid_addr(tree: FinitaryTree, addr) -> bool:
    if not isinstance(addr, tuple):
        return False
    if addr[0] == 0:
        return len(addr) == 2 and 0 <= addr[1] < tree.n_nodes
    if addr[0] == 1:
        return (len(addr) == 4 and addr[1] in tree.tail_ids
                and addr[2] >= 1 and addr[3] in (0, 1))
    return False


def check_embedding(emb: TreeEmbedding) -> None:
    """Full structural validation, raising SiteError on the first defect."""
    X, Y = emb.dom, emb.cod
    if len(emb.explicit_images) != X.n_nodes:
        raise SiteError("embedding image table length differs from node count")
    for a in emb.explicit_images:
        if not _valid_addr(Y, a):
            raise SiteError("invalid target address %r" % (a,))
    if emb.explicit_images[0] != (0, 0):
        raise SiteError("embedding must send the root to the root")
    if len(set(emb.explicit_images)) != X.n_nodes:
        raise SiteError("embedding repeats a target address")
    routed = tuple(sorted(t for t, _s, _e in emb.tail_routes))
    if routed != X.tail_ids:
        raise SiteError("tail routes must cover the source tails exactly")
    for t, s, e in emb.tail_routes:
        if s not in Y.tail_ids:
            raise SiteError("route target %d is not a tail" % s)
        if X.labels[t] != Y.labels[s]:
            raise SiteError("tail %d routed across labels %r -> %r"
                            % (t, X.labels[t], Y.labels[s]))
        img = emb.explicit_images[t]
        if branch_index(Y, s, img) is None:
            raise SiteError("image of tail %d is off the branch of its target" % t)
        if e != (img[2] if img[0] == 1 else 0):
            raise SiteError("entry offset of tail %d disagrees with its image" % t)
    for x in range(X.n_nodes):
        ch = denoted_children(X, (0, x))
        if ch is None:
            continue
        got = {emb.image(ch[0]), emb.image(ch[1])}
        want = denoted_children(Y, emb.explicit_images[x])
        if want is None or got != set(want):
            raise SiteError("children of node %d do not map onto the "
                            "children of its image" % x)


def enumerate_embeddings(X: FinitaryTree, Y: FinitaryTree) -> list[TreeEmbedding]:
    """All embeddings X -> Y in canonical order.

    Depth-first over explicit source nodes: leaves are free, internal
    nodes branch over the two pairings with the target children, and a
    tail picks any equal-labeled target tail whose branch passes through
    the current address (the continuation is then forced).
    """
    out: list[TreeEmbedding] = []
    ytails = Y.tail_ids

    def go(pending, imgs, routes):
        if not pending:
            out.append(TreeEmbedding(X, Y, tuple(imgs), tuple(sorted(routes))))
            return
        (x, ya), rest = pending[0], pending[1:]
        kind = X.kinds[x]
        imgs2 = list(imgs)
        imgs2[x] = ya
        if kind == LEAF:
            go(rest, imgs2, routes)
        elif kind == TAIL:
            for s in ytails:
                if Y.labels[s] != X.labels[x]:
                    continue
                if branch_index(Y, s, ya) is None:
                    continue
                entry = ya[2] if ya[0] == 1 else 0
                go(rest, imgs2, routes + [(x, s, entry)])
        else:
            yc = denoted_children(Y, ya)
            if yc is None:
                return
            c1, c2 = X.children[x]
            go([(c1, yc[0]), (c2, yc[1])] + rest, imgs2, routes)
            go([(c1, yc[1]), (c2, yc[0])] + rest, imgs2, routes)

    go([(0, (0, 0))], [None] * X.n_nodes, [])
    return sorted(out, key=lambda e: e.sort_key())


def preimage_fn(emb: TreeEmbedding) -> Callable:
    """Membership test for the image: target address -> source address or None."""
    X, Y = emb.dom, emb.cod
    rev = {a: (0, i) for i, a in enumerate(emb.explicit_images)}

    def pre(za):
        if za in rev:
            return rev[za]
        for t, s, _e in emb.tail_routes:
            i0 = branch_index(Y, s, emb.explicit_images[t])
            iz = branch_index(Y, s, za)
            if iz is not None and iz > i0:
                return (1, t, iz - i0, 0)
            pa = parent_addr(Y, za)
            if pa is None:
                continue
            ip = branch_index(Y, s, pa)
            if ip is not None and ip >= i0 and branch_node(Y, s, ip + 1) != za:
                return (1, t, ip + 1 - i0, 1)
        return None

    return pre


# ---------------------------------------------------------------------------
# mutable nested scratch nodes for constructions

class _N:
    __slots__ = ("kind", "label", "kids", "meta")

    def __init__(self, kind, label=None, kids=None, meta=None):
        self.kind = kind
        self.label = label
        self.kids = kids if kids is not None else []
        self.meta = meta if meta is not None else {}


def _n_key(n: _N):
    if n.kind == LEAF:
        return (0,)
    if n.kind == TAIL:
        return (1, n.label)
    return (2, _n_key(n.kids[0]), _n_key(n.kids[1]))


def _collapse(n: _N) -> _N:
    n.kids = [_collapse(k) for k in n.kids]
    if n.kind == INTERNAL:
        for t, l in (n.kids, reversed(n.kids)):
            if t.kind == TAIL and l.kind == LEAF:
                meta = dict(t.meta)
                meta.update(n.meta)
                return _N(TAIL, t.label, meta=meta)
    return n


def _sort_kids(n: _N) -> None:
    for k in n.kids:
        _sort_kids(k)
    n.kids.sort(key=_n_key)


def _freeze(root: _N) -> tuple[FinitaryTree, list[_N]]:
    kinds, children, labels, order = [], [], [], []

    def go(n):
        idx = len(kinds)
        order.append(n)
        n.meta["fid"] = idx
        kinds.append(n.kind), children.append(None), labels.append(n.label)
        if n.kind == INTERNAL:
            a = go(n.kids[0])
            b = go(n.kids[1])
            children[idx] = (a, b)
        return idx

    go(root)
    return FinitaryTree(tuple(kinds), tuple(children), tuple(labels)), order


# ---------------------------------------------------------------------------
# pullback

def tree_pullback(f: TreeEmbedding, g: TreeEmbedding) -> PullbackSquare:
    """Intersection of the two images, re-encoded canonically.

    Walks the common target one denoted level at a time.  Once both
    preimage positions sit on pure continuations following the same
    target branch the rest of the intersection is that whole branch (a
    tail marker); continuations on different target branches split at
    the finite depth where those branches diverge.
    """
    X, Y, Z = f.dom, g.dom, f.cod

    def walk(xa, ya, za) -> _N:
        if denoted_children(X, xa) is None or denoted_children(Y, ya) is None:
            return _N(LEAF, meta={"x": xa, "y": ya})
        cx, cy = comb_view(X, xa), comb_view(Y, ya)
        if cx is not None and cy is not None:
            tx, ty = comb_view_tail(X, xa), comb_view_tail(Y, ya)
            if f.route(tx)[0] == g.route(ty)[0]:
                return _N(TAIL, cx, meta={"x": xa, "y": ya, "xt": tx, "yt": ty})
        xc = denoted_children(X, xa)
        yc = denoted_children(Y, ya)
        by_x = {f.image(xc[0]): xc[0], f.image(xc[1]): xc[1]}
        by_y = {g.image(yc[0]): yc[0], g.image(yc[1]): yc[1]}
        kids = [walk(by_x[z], by_y[z], z) for z in denoted_children(Z, za)]
        return _N(INTERNAL, kids=kids, meta={"x": xa, "y": ya})

    root = _collapse(walk((0, 0), (0, 0), (0, 0)))
    _sort_kids(root)
    apex, order = _freeze(root)
    to_left = make_embedding(apex, X, tuple(n.meta["x"] for n in order),
                             {n.meta["fid"]: n.meta["xt"]
                              for n in order if n.kind == TAIL})
    to_right = make_embedding(apex, Y, tuple(n.meta["y"] for n in order),
                              {n.meta["fid"]: n.meta["yt"]
                               for n in order if n.kind == TAIL})
    return PullbackSquare(f, g, apex, to_left, to_right)


# ---------------------------------------------------------------------------
# amalgamation

def tree_amalgamate(span: Span) -> Cocone:
    """A small deterministic cocone over the span.

    The two trees are overlaid: inside the span apex the pairing of
    children is the one forced by the legs, outside it children are
    paired greedily so that equal-labeled continuations merge into one
    tail marker; continuations with clashing labels split at the first
    node where they meet, each keeping its own branch and absorbing the
    other side's hanging leaf.
    """
    f, g = span.left, span.right
    X, A, B = span.apex, f.cod, g.cod
    route_reg: dict[str, dict[int, _N]] = {"a": {}, "b": {}}
    trees = {"a": A, "b": B}

    def swallow(n, side, pos):
        tree = trees[side]
        if pos[0] == 0:
            n.meta[side + "_in"] = comb_layout(tree, pos[1])
        route_reg[side][comb_view_tail(tree, pos)] = n

    def copy_from(side, pos) -> _N:
        tree = trees[side]
        ch = denoted_children(tree, pos)
        if ch is None:
            return _N(LEAF, meta={side: pos})
        cv = comb_view(tree, pos)
        if cv is not None:
            n = _N(TAIL, cv, meta={side: pos})
            swallow(n, side, pos)
            return n
        return _N(INTERNAL, kids=[copy_from(side, ch[0]), copy_from(side, ch[1])],
                  meta={side: pos})

    def merge(x, a, b) -> _N:
        if x is not None and denoted_children(X, x) is None:
            x = None
        if b is None:
            return copy_from("a", a)
        if a is None:
            return copy_from("b", b)
        da, db = denoted_children(A, a), denoted_children(B, b)
        if da is None and db is None:
            return _N(LEAF, meta={"a": a, "b": b})
        if da is None:
            n = copy_from("b", b)
            n.meta["a"] = a
            return n
        if db is None:
            n = copy_from("a", a)
            n.meta["b"] = b
            return n
        ca, cb = comb_view(A, a), comb_view(B, b)
        if x is not None:
            # inside the apex image the legs force the pairing of children;
            # a comb merge is only allowed where the apex itself continues
            # as a comb, so that both routes follow one identified branch
            if comb_view(X, x) is not None and ca is not None \
                    and cb is not None:
                n = _N(TAIL, ca, meta={"a": a, "b": b})
                swallow(n, "a", a)
                swallow(n, "b", b)
                return n
            x1, x2 = denoted_children(X, x)
            kids = [merge(x1, f.image(x1), g.image(x1)),
                    merge(x2, f.image(x2), g.image(x2))]
        elif ca is not None and cb is not None:
            if ca == cb:
                n = _N(TAIL, ca, meta={"a": a, "b": b})
                swallow(n, "a", a)
                swallow(n, "b", b)
                return n
            ac, ao = comb_children(A, a)
            bc, bo = comb_children(B, b)
            return _N(INTERNAL, kids=[merge(None, ac, bo), merge(None, ao, bc)],
                      meta={"a": a, "b": b})
        else:
            (a1, a2), (b1, b2) = da, db
            straight = (len(labels_below(A, a1) & labels_below(B, b1))
                        + len(labels_below(A, a2) & labels_below(B, b2)))
            swapped = (len(labels_below(A, a1) & labels_below(B, b2))
                       + len(labels_below(A, a2) & labels_below(B, b1)))
            if swapped > straight:
                b1, b2 = b2, b1
            kids = [merge(None, a1, b1), merge(None, a2, b2)]
        return _N(INTERNAL, kids=kids, meta={"a": a, "b": b})

    obj, order = _freeze(merge((0, 0), (0, 0), (0, 0)))

    def harvest(side) -> TreeEmbedding:
        tree = trees[side]
        imgs: list = [None] * tree.n_nodes
        for n in order:
            fid = n.meta["fid"]
            pos = n.meta.get(side)
            if pos is not None and pos[0] == 0:
                imgs[pos[1]] = (0, fid)
            for nid, rel, sd in n.meta.get(side + "_in", ()):
                here = (0, fid) if rel == 0 else (1, fid, rel, sd)
                if imgs[nid] is None:
                    imgs[nid] = here
                elif imgs[nid] != here:
                    raise SiteError("conflicting image assignment in amalgam")
        if any(i is None for i in imgs):
            raise SiteError("amalgam failed to place every node")
        targets = {t: route_reg[side][t].meta["fid"] for t in tree.tail_ids}
        return make_embedding(tree, obj, imgs, targets)

    return Cocone(obj, harvest("a"), harvest("b"))


# ---------------------------------------------------------------------------
# subtrees of the denoted tree

class SubtreeView(NamedTuple):
    tree: FinitaryTree
    to_host: Callable  # subtree address -> host address
    from_host: dict    # host explicit id -> subtree address
    tail_map: dict     # host tail id -> subtree tail id


def subtree_at(host: FinitaryTree, addr) -> SubtreeView:
    """Materialize the denoted subtree below addr as an object."""

    def cp(pos) -> _N:
        ch = denoted_children(host, pos)
        if ch is None:
            return _N(LEAF, meta={"p": pos})
        cv = comb_view(host, pos)
        if cv is not None:
            return _N(TAIL, cv, meta={"p": pos})
        return _N(INTERNAL, kids=[cp(ch[0]), cp(ch[1])], meta={"p": pos})

    sub, order = _freeze(cp(addr))
    pos_of = [n.meta["p"] for n in order]

    def to_host(sa):
        if sa[0] == 0:
            return pos_of[sa[1]]
        _, st, k, side = sa
        p = pos_of[st]
        return walk_branch(host, comb_view_tail(host, p), p, k, side)

    from_host: dict[int, tuple] = {}
    tail_map: dict[int, int] = {}
    for sid, n in enumerate(order):
        p = n.meta["p"]
        if n.kind == TAIL:
            tail_map[comb_view_tail(host, p)] = sid
            if p[0] == 0:
                for nid, rel, sd in comb_layout(host, p[1]):
                    from_host[nid] = (0, sid) if rel == 0 else (1, sid, rel, sd)
        elif p[0] == 0:
            from_host[p[1]] = (0, sid)
    return SubtreeView(sub, to_host, from_host, tail_map)


# ---------------------------------------------------------------------------
# regular-mono witness and equalizers

def regular_mono_witness(emb: TreeEmbedding):
    """A parallel pair out of the target whose equalizer is the source.

    Every target node outside the image hangs below some image of a
    source denoted leaf.  At each such leaf image p the subtree below p
    is replaced by a node over two copies of an amalgam containing both
    child subtrees; the two embeddings send the children straight and
    swapped, so they agree exactly on the image of the source.
    """
    X, Y = emb.dom, emb.cod
    pre = preimage_fn(emb)
    shared_reg: dict[int, _N] = {}

    def copy_fin(tree: FinitaryTree):
        nodes: dict[int, _N] = {}
        tails: dict[int, _N] = {}

        def c(nid) -> _N:
            n = _N(tree.kinds[nid], tree.labels[nid])
            nodes[nid] = n
            if tree.kinds[nid] == TAIL:
                tails[nid] = n
            if tree.kinds[nid] == INTERNAL:
                a, b = tree.children[nid]
                n.kids = [c(a), c(b)]
            return n

        return c(0), nodes, tails

    def replacement(p) -> _N:
        view = subtree_at(Y, p)
        if view.tree.n_nodes == 1 and view.tree.kinds[0] == LEAF:
            return _N(LEAF, meta={"y": p})
        ch = denoted_children(Y, p)
        s1, s2 = subtree_at(Y, ch[0]), subtree_at(Y, ch[1])
        point = build(leaf())
        cone = tree_amalgamate(Span(
            make_embedding(point, s1.tree, ((0, 0),), {}),
            make_embedding(point, s2.tree, ((0, 0),), {})))
        copy1, n1, t1 = copy_fin(cone.obj)
        copy2, n2, t2 = copy_fin(cone.obj)
        return _N(INTERNAL, kids=[copy1, copy2],
                  meta={"y": p,
                        "repl": (s1, s2, cone.from_left, cone.from_right,
                                 (n1, t1), (n2, t2))})

    def walk(p) -> _N:
        xp = pre(p)
        if xp is None:
            raise SiteError("walk escaped the embedding image")
        if denoted_children(X, xp) is None:
            return replacement(p)
        cv = comb_view(Y, p)
        # swallow a comb only where the source covers it cofinally, i.e.
        # keeps routing a tail along this branch
        if cv is not None and comb_view(X, xp) is not None:
            n = _N(TAIL, cv, meta={"y": p})
            if p[0] == 0:
                n.meta["y_in"] = comb_layout(Y, p[1])
            shared_reg[comb_view_tail(Y, p)] = n
            return n
        ch = denoted_children(Y, p)
        return _N(INTERNAL, kids=[walk(ch[0]), walk(ch[1])], meta={"y": p})

    doubled, order = _freeze(walk((0, 0)))
    imgs1: list = [None] * Y.n_nodes
    imgs2: list = [None] * Y.n_nodes
    routes1: dict[int, int] = {}
    routes2: dict[int, int] = {}
    for t, n in shared_reg.items():
        routes1[t] = routes2[t] = n.meta["fid"]

    def translate(ca, nodes, tails):
        if ca[0] == 0:
            return (0, nodes[ca[1]].meta["fid"])
        _, ct, k, sd = ca
        return (1, tails[ct].meta["fid"], k, sd)

    def place(view, into_c, copy_maps, imgs, routes):
        nodes, tails = copy_maps
        for yid, sa in view.from_host.items():
            imgs[yid] = translate(into_c.image(sa), nodes, tails)
        for ytail, stail in view.tail_map.items():
            routes[ytail] = tails[into_c.route(stail)[0]].meta["fid"]

    for n in order:
        fid = n.meta["fid"]
        y = n.meta.get("y")
        if "repl" in n.meta:
            s1, s2, c1, c2, maps1, maps2 = n.meta["repl"]
            if y[0] == 0:
                imgs1[y[1]] = imgs2[y[1]] = (0, fid)
            place(s1, c1, maps1, imgs1, routes1)
            place(s2, c2, maps2, imgs1, routes1)
            place(s1, c1, maps2, imgs2, routes2)
            place(s2, c2, maps1, imgs2, routes2)
        else:
            if y is not None and y[0] == 0:
                imgs1[y[1]] = imgs2[y[1]] = (0, fid)
            for nid, rel, sd in n.meta.get("y_in", ()):
                here = (0, fid) if rel == 0 else (1, fid, rel, sd)
                imgs1[nid] = imgs2[nid] = here
    if any(i is None for i in imgs1):
        raise SiteError("doubled tree failed to place every node")
    return (doubled,
            make_embedding(Y, doubled, imgs1, routes1),
            make_embedding(Y, doubled, imgs2, routes2))


def equalizer_of(e1: TreeEmbedding, e2: TreeEmbedding):
    """The subtree of the common domain where two parallel embeddings agree,
    with its inclusion."""
    if e1.dom != e2.dom or e1.cod != e2.cod:
        raise SiteError("equalizer needs a parallel pair")
    Y = e1.dom

    def walk(p) -> _N:
        ch = denoted_children(Y, p)
        if ch is None:
            return _N(LEAF, meta={"y": p})
        cv = comb_view(Y, p)
        if cv is not None:
            t = comb_view_tail(Y, p)
            if e1.route(t)[0] == e2.route(t)[0] and e1.image(p) == e2.image(p):
                return _N(TAIL, cv, meta={"y": p, "yt": t})
        if e1.image(ch[0]) != e2.image(ch[0]):
            return _N(LEAF, meta={"y": p})
        return _N(INTERNAL, kids=[walk(ch[0]), walk(ch[1])], meta={"y": p})

    eq, order = _freeze(walk((0, 0)))
    incl = make_embedding(eq, Y, tuple(n.meta["y"] for n in order),
                          {n.meta["fid"]: n.meta["yt"]
                           for n in order if n.kind == TAIL})
    return eq, incl


def same_subtree(m1: TreeEmbedding, m2: TreeEmbedding) -> bool:
    """Whether two embeddings into the same tree have equal images."""
    square = tree_pullback(m1, m2)
    from .core import is_iso
    return is_iso(square.to_left) and is_iso(square.to_right)


# ---------------------------------------------------------------------------
# zig-zag witness over a pullback of subtrees

def c2prime_witness(square: PullbackSquare, u: TreeEmbedding,
                    v: TreeEmbedding) -> TreeEmbedding:
    """Given subtrees X, Y of Z and a parallel pair u, v out of Z that
    agrees on the pullback of the two inclusions, produce w out of Z
    that restricts to u on X and to v on Y.

    w follows v below the set L of common nodes that are leaves inside
    the X image, and u everywhere else; every node of Y outside X sits
    below some member of L, and u and v agree on L itself.
    """
    ix, iy = square.left, square.right
    X, Y, Z = ix.dom, iy.dom, ix.cod
    if u.dom != Z or v.dom != Z or u.cod != v.cod:
        raise SiteError("the pair must be parallel out of the square's target")
    from .core import compose
    apex_in = compose(square.to_left, ix)
    if compose(apex_in, u) != compose(apex_in, v):
        raise SiteError("the pair does not agree on the intersection")

    pre_x, pre_y = preimage_fn(ix), preimage_fn(iy)

    def in_l(za) -> bool:
        xp = pre_x(za)
        if xp is None or denoted_children(X, xp) is not None:
            return False
        return pre_y(za) is not None

    parents = parent_map(Z)

    def explicit_has_l(z: int) -> bool:
        cur: int | None = z
        while cur is not None:
            if in_l((0, cur)):
                return True
            cur = parents[cur]
        return False

    images = tuple(v.explicit_images[z] if explicit_has_l(z)
                   else u.explicit_images[z] for z in range(Z.n_nodes))
    targets: dict[int, int] = {}
    for t in Z.tail_ids:
        if explicit_has_l(t):
            targets[t] = v.route(t)[0]
            continue
        # an explicit leaf of X mapped onto the continuation switches the
        # route to v from that depth on
        depths = sorted(img[2] for xid, img in enumerate(ix.explicit_images)
                        if X.kinds[xid] == LEAF and img[0] == 1 and img[1] == t)
        switched = any(in_l((1, t, j, 0)) for j in depths)
        targets[t] = v.route(t)[0] if switched else u.route(t)[0]
    w = make_embedding(Z, u.cod, images, targets)
    check_embedding(w)
    return w


# ---------------------------------------------------------------------------
# bounded enumeration and the backend

def enumerate_trees(max_tails: int, max_explicit: int,
                    labels: tuple[str, ...]) -> list[FinitaryTree]:
    """All canonical trees within the bounds, over the given label set."""
    alphabet = tuple(sorted(set(labels)))
    by_size: dict[int, list] = {}

    def gen(size: int) -> list:
        if size in by_size:
            return by_size[size]
        out: dict = {}
        if size == 1:
            out[(0,)] = (("leaf",), 0)
            if max_tails >= 1:
                for lab in alphabet:
                    out[(1, lab)] = (("tail", lab), 1)
        else:
            for na in range(1, size - 1, 2):
                for ka, (a, ta) in gen(na):
                    for kb, (b, tb) in gen(size - 1 - na):
                        if ka > kb or ta + tb > max_tails:
                            continue
                        if {a[0], b[0]} == {"tail", "leaf"}:
                            continue
                        out[(2, ka, kb)] = (("node", a, b), ta + tb)
        by_size[size] = sorted(out.items())
        return by_size[size]

    found = []
    for size in range(1, max_explicit + 1, 2):
        found.extend(build(nested) for _k, (nested, _t) in gen(size))
    return found


class ITreeBackend:
    tag = "itree"

    def identity(self, obj: FinitaryTree) -> TreeEmbedding:
        return identity_embedding(obj)

    def hom_set(self, a: FinitaryTree, b: FinitaryTree) -> list[TreeEmbedding]:
        return enumerate_embeddings(a, b)

    def rank(self, obj: FinitaryTree) -> RankValue:
        return tree_stats(obj).rank

    def pullback(self, f: TreeEmbedding, g: TreeEmbedding) -> PullbackSquare:
        return tree_pullback(f, g)

    def amalgamate(self, span: Span) -> Cocone:
        return tree_amalgamate(span)

    def objects_up_to(self, bound: int, labels=()) -> list[FinitaryTree]:
        return enumerate_trees(bound, 2 * bound + 1, tuple(labels))

    # -- serialization ------------------------------------------------------

    def encode_object(self, obj: FinitaryTree) -> dict:
        nodes = []
        for i, kind in enumerate(obj.kinds):
            row: dict = {"id": i, "kind": kind}
            if kind == INTERNAL:
                row["children"] = list(obj.children[i])
            if kind == TAIL:
                row["label"] = obj.labels[i]
            nodes.append(row)
        return {"site": "itree", "root": 0, "nodes": nodes}

    def decode_object(self, data: dict) -> FinitaryTree:
        return validate_tree(data)

    def encode_morphism(self, f: TreeEmbedding) -> dict:
        def addr(a):
            return ["n", a[1]] if a[0] == 0 else \
                ["t", a[1], a[2], "b" if a[3] == 0 else "l"]

        return {"site": "itree",
                "source": self.encode_object(f.dom),
                "target": self.encode_object(f.cod),
                "explicit_images": {str(i): addr(a)
                                    for i, a in enumerate(f.explicit_images)},
                "tail_routes": {str(t): {"tail": s, "entry": e}
                                for t, s, e in f.tail_routes}}

    def decode_morphism(self, data: dict) -> TreeEmbedding:
        for key in ("source", "target", "explicit_images", "tail_routes"):
            if key not in data:
                raise SiteError("embedding payload needs a %r field" % key)
        src, smap = _validate_tree_mapped(data["source"])
        tgt, tmap = _validate_tree_mapped(data["target"])

        def addr(a):
            if not isinstance(a, list) or not a:
                raise SiteError("malformed address %r" % (a,))
            if a[0] == "n":
                return (0, tmap.get(a[1], -1))
            if a[0] == "t" and len(a) == 4 and a[3] in ("b", "l"):
                return (1, tmap.get(a[1], -1), a[2], 0 if a[3] == "b" else 1)
            raise SiteError("malformed address %r" % (a,))

        images: list = [None] * src.n_nodes
        for key, val in data["explicit_images"].items():
            old = int(key)
            if old not in smap:
                raise SiteError("image listed for unknown source node %r" % old)
            images[smap[old]] = addr(val)
        if any(i is None for i in images):
            raise SiteError("explicit_images must cover every source node")
        targets: dict[int, int] = {}
        for key, val in data["tail_routes"].items():
            old = int(key)
            if old not in smap:
                raise SiteError("route listed for unknown source node %r" % old)
            if "tail" not in val:
                raise SiteError("tail route rows need a 'tail' field")
            targets[smap[old]] = tmap.get(val["tail"], -1)
        emb = make_embedding(src, tgt, tuple(images), targets)
        check_embedding(emb)
        return emb

    def object_key(self, obj: FinitaryTree) -> str:
        def s(n):
            if n[0] == "leaf":
                return "L"
            if n[0] == "tail":
                return "T(%s)" % n[1]
            return "(%s %s)" % (s(n[1]), s(n[2]))

        return s(to_nested(obj))

    def morphism_key(self, f: TreeEmbedding) -> str:
        imgs = ";".join("%d:%s" % (i, ",".join(map(str, a)))
                        for i, a in enumerate(f.explicit_images))
        routes = ";".join("%d>%d" % (t, s) for t, s, _e in f.tail_routes)
        return "%s>%s:%s|%s" % (self.object_key(f.dom), self.object_key(f.cod),
                                imgs, routes)


register_backend(ITreeBackend())
