"""The finitary labeled-tree backend: validation, stats, embeddings,
pullbacks, amalgamation, and the regular-mono and zig-zag witnesses."""

import itertools
import random

import pytest

from atomkit import (
    SiteError,
    Span,
    build,
    compose,
    enumerate_embeddings,
    enumerate_trees,
    identity,
    is_iso,
    leaf,
    node,
    object_key,
    pullback,
    pullback_is_universal,
    rank,
    tail,
    tree_stats,
    validate_tree,
)
from atomkit.itree import (
    c2prime_witness,
    canonical_form,
    equalizer_of,
    regular_mono_witness,
    same_subtree,
    subtree_at,
    tree_amalgamate,
)

from oracles import count_embeddings_by_filter

T1 = build(leaf())
T3 = build(node(leaf(), leaf()))
T5 = build(node(node(leaf(), leaf()), leaf()))
TAIL_I = build(tail("i"))
TAIL_J = build(tail("j"))


def _tree_payload(nodes):
    return {"site": "itree", "root": 0, "nodes": nodes}


def test_validate_tree_accepts_basic_shapes():
    assert validate_tree(_tree_payload([{"id": 0, "kind": "leaf"}])) == T1
    t3 = validate_tree(_tree_payload([
        {"id": 0, "kind": "internal", "children": [1, 2]},
        {"id": 1, "kind": "leaf"},
        {"id": 2, "kind": "leaf"},
    ]))
    assert t3 == T3
    assert tree_stats(t3).branch_count == 0


def test_validate_tree_rejects_non_binary_node():
    with pytest.raises(SiteError):
        validate_tree(_tree_payload([
            {"id": 0, "kind": "internal", "children": [1]},
            {"id": 1, "kind": "leaf"},
        ]))


def test_validate_tree_rejects_unreachable_and_cyclic_nodes():
    with pytest.raises(SiteError):
        validate_tree(_tree_payload([
            {"id": 0, "kind": "leaf"},
            {"id": 1, "kind": "leaf"},
        ]))
    with pytest.raises(SiteError):
        validate_tree(_tree_payload([
            {"id": 0, "kind": "internal", "children": [1, 0]},
            {"id": 1, "kind": "leaf"},
        ]))


def test_validate_tree_rejects_unlabeled_tail():
    with pytest.raises(SiteError):
        validate_tree(_tree_payload([{"id": 0, "kind": "tail"}]))


def test_canonical_form_collapses_redundant_combs():
    padded = build(node(tail("i"), leaf()))
    assert canonical_form(padded) == TAIL_I
    assert object_key(canonical_form(padded)) == object_key(TAIL_I)


def test_tree_stats():
    assert tree_stats(T1) == (0, 1, rank(T1))
    assert tree_stats(T3).f_count == 3
    assert tree_stats(T5).rank.components == (0, 5)
    assert tree_stats(TAIL_I) == (1, 0, rank(TAIL_I))


def test_embeddings_from_single_leaf_are_unique():
    for y in (T1, T3, T5, TAIL_I, build(node(tail("i"), tail("j")))):
        assert len(enumerate_embeddings(T1, y)) == 1


def test_embedding_counts_on_named_pairs():
    assert len(enumerate_embeddings(T3, T3)) == 2
    assert len(enumerate_embeddings(T3, T1)) == 0
    assert len(enumerate_embeddings(T3, T5)) == 2
    assert len(enumerate_embeddings(TAIL_I, TAIL_I)) == 1
    assert len(enumerate_embeddings(TAIL_I, TAIL_J)) == 0


def test_embedding_counts_match_filter_oracle_on_random_pairs():
    pool = enumerate_trees(3, 7, ("i", "j"))
    rng = random.Random(20260815)
    for _ in range(50):
        x, y = rng.choice(pool), rng.choice(pool)
        assert len(enumerate_embeddings(x, y)) == count_embeddings_by_filter(x, y)


def test_embeddings_compose_within_hom_sets():
    pool = enumerate_trees(2, 5, ("i", "j"))
    rng = random.Random(7)
    for _ in range(200):
        x, y, z = rng.choice(pool), rng.choice(pool), rng.choice(pool)
        fs, gs = enumerate_embeddings(x, y), enumerate_embeddings(y, z)
        if not fs or not gs:
            continue
        f, g = rng.choice(fs), rng.choice(gs)
        assert compose(f, g) in enumerate_embeddings(x, z)


def test_pullback_along_identity_and_diagonal():
    f = enumerate_embeddings(T3, T5)[0]
    sq = pullback(f, identity(T5))
    assert sq.apex == T3
    diag = pullback(f, f)
    assert diag.apex == T3
    assert is_iso(diag.to_left) and is_iso(diag.to_right)


def test_pullback_of_leaf_and_t3_inside_t5():
    f = enumerate_embeddings(T1, T5)[0]
    g = enumerate_embeddings(T3, T5)[0]
    sq = pullback(f, g)
    assert sq.apex == T1
    assert pullback_is_universal(sq, [T1, T3, T5])


def test_pullback_universal_property_sampled():
    pool = enumerate_trees(2, 5, ("i", "j"))
    rng = random.Random(11)
    for _ in range(60):
        z = rng.choice(pool)
        legs = [m for x in pool for m in enumerate_embeddings(x, z)]
        if not legs:
            continue
        f, g = rng.choice(legs), rng.choice(legs)
        assert pullback_is_universal(pullback(f, g), pool)


def test_amalgamate_identity_span_returns_the_object():
    cone = tree_amalgamate(Span(identity(T3), identity(T3)))
    assert cone.obj == T3
    assert is_iso(cone.from_left)


def test_amalgamate_splits_on_distinct_labels():
    span = Span(enumerate_embeddings(T1, TAIL_I)[0],
                enumerate_embeddings(T1, TAIL_J)[0])
    cone = tree_amalgamate(span)
    assert object_key(cone.obj) == "(T(i) T(j))"
    assert compose(span.left, cone.from_left) == compose(span.right, cone.from_right)


def test_amalgamate_merges_equal_labels():
    span = Span(enumerate_embeddings(T1, TAIL_I)[0],
                enumerate_embeddings(T1, TAIL_I)[0])
    cone = tree_amalgamate(span)
    assert cone.obj == TAIL_I


def test_amalgamate_commutes_exhaustively_at_small_bound():
    pool = enumerate_trees(1, 3, ("i",))
    for x, a, b in itertools.product(pool, pool, pool):
        for f in enumerate_embeddings(x, a):
            for g in enumerate_embeddings(x, b):
                cone = tree_amalgamate(Span(f, g))
                assert compose(f, cone.from_left) == compose(g, cone.from_right)


def test_regular_mono_witness_identity_case():
    doubled, e1, e2 = regular_mono_witness(identity(T3))
    assert doubled == T3
    assert e1 == e2


def test_regular_mono_witness_leaf_in_t3():
    m = enumerate_embeddings(T1, T3)[0]
    doubled, e1, e2 = regular_mono_witness(m)
    assert doubled == T3
    assert e1 != e2
    eq, incl = equalizer_of(e1, e2)
    assert eq == T1
    assert same_subtree(incl, m)


def test_regular_mono_witness_leaf_in_tail():
    m = enumerate_embeddings(T1, TAIL_I)[0]
    doubled, e1, e2 = regular_mono_witness(m)
    assert object_key(doubled) == "(T(i) T(i))"
    eq, incl = equalizer_of(e1, e2)
    assert eq == T1
    assert same_subtree(incl, m)


def test_regular_mono_equalizers_recover_images_exhaustively():
    pool = enumerate_trees(1, 4, ("i",))
    for x, y in itertools.product(pool, pool):
        for m in enumerate_embeddings(x, y):
            doubled, e1, e2 = regular_mono_witness(m)
            _eq, incl = equalizer_of(e1, e2)
            assert same_subtree(incl, m)


def test_subtree_at_reads_back_the_hanging_tree():
    view = subtree_at(T5, (0, 1))
    assert view.tree == T3


def test_c2prime_witness_on_equal_pair():
    x = enumerate_embeddings(T1, T3)[0]
    sq = pullback(x, x)
    u = enumerate_embeddings(T3, T5)[0]
    w = c2prime_witness(sq, u, u)
    assert w == u


def test_c2prime_witness_coincidence_conditions():
    x = enumerate_embeddings(T1, T3)[0]
    sq = pullback(x, x)
    u, v = enumerate_embeddings(T3, T5)
    w = c2prime_witness(sq, u, v)
    assert w.cod == u.cod
    assert compose(sq.left, u) == compose(sq.left, w)
    assert compose(sq.right, w) == compose(sq.right, v)


def test_proper_subtrees_have_smaller_rank_at_small_bound():
    pool = enumerate_trees(2, 5, ("i", "j"))
    for x, y in itertools.product(pool, pool):
        for m in enumerate_embeddings(y, x):
            if not is_iso(m):
                assert rank(y) < rank(x)


def test_enumerate_trees_bound_two_has_thirteen_objects():
    keys = [object_key(t) for t in enumerate_trees(2, 5, ("i", "j"))]
    assert len(keys) == 13
    assert "L" in keys and "(T(i) T(j))" in keys
    assert len(set(keys)) == 13
