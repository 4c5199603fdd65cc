"""Folded graphs: folding, cores, products, lifts, malnormality."""

from collections import defaultdict

import numpy as np
import pytest

from foldsurf import Alphabet, CyclicWord, cyclic_reduce, sample_reduced_word
from foldsurf.errors import FormatError, TrivialGeneratorError
from foldsurf.stallings import (
    CoreGraph,
    canonical_form,
    chain_graph,
    core,
    cycle_graph,
    disjoint_union,
    fiber_product,
    fold,
    is_folded,
    is_fully_rigid,
    is_isomorphic,
    is_malnormal_family,
    lifts_of_loop,
    rose_of_words,
)

AB = Alphabet(2)


# -- independent oracles ------------------------------------------------


def oracle_fold(graph):
    """Textbook folding: repeatedly identify two equal-letter arcs."""
    edges = [
        (int(u), int(v), int(g))
        for u, v, g in zip(graph.src, graph.dst, graph.label)
    ]
    bp = graph.basepoint
    while True:
        arcs = defaultdict(list)
        for idx, (u, v, g) in enumerate(edges):
            arcs[(u, 2 * g)].append((idx, v))
            arcs[(v, 2 * g + 1)].append((idx, u))
        clash = None
        for key, lst in arcs.items():
            if len(lst) > 1:
                clash = (lst[0], lst[1])
                break
        if clash is None:
            break
        (i1, x), (i2, y) = clash
        del edges[max(i1, i2)]
        if x != y:
            a, b = min(x, y), max(x, y)
            edges = [
                (a if u == b else u, a if v == b else v, g) for u, v, g in edges
            ]
            if bp == b:
                bp = a
    used = sorted({u for u, _, _ in edges} | {v for _, v, _ in edges}
                  | ({bp} if bp is not None else set()))
    remap = {old: new for new, old in enumerate(used)}
    return CoreGraph(
        graph.rank,
        len(used),
        [remap[u] for u, _, _ in edges],
        [remap[v] for _, v, _ in edges],
        [g for _, _, g in edges],
        basepoint=None if bp is None else remap[bp],
    )


def oracle_product(g1, g2):
    """Brute-force fiber product over all vertex pairs."""
    V2 = g2.num_vertices
    src, dst, lab = [], [], []
    for u1, v1, a in zip(g1.src, g1.dst, g1.label):
        for u2, v2, b in zip(g2.src, g2.dst, g2.label):
            if a == b:
                src.append(int(u1) * V2 + int(u2))
                dst.append(int(v1) * V2 + int(v2))
                lab.append(int(a))
    return CoreGraph(g1.rank, g1.num_vertices * V2, src, dst, lab)


def oracle_walk(graph, letters, start):
    """Follow letters through a folded graph by scanning edges."""
    out = {}
    for idx, (u, v, g) in enumerate(zip(graph.src, graph.dst, graph.label)):
        out[(int(u), 2 * int(g))] = int(v)
        out[(int(v), 2 * int(g) + 1)] = int(u)
    cur = start
    for c in letters:
        cur = out.get((cur, int(c)))
        if cur is None:
            return None
    return cur


def oracle_periodic(graph, cword):
    hits = set()
    for v in range(graph.num_vertices):
        cur = v
        for _ in range(graph.num_vertices):
            cur = oracle_walk(graph, cword.letters.tolist(), cur)
            if cur is None:
                break
            if cur == v:
                hits.add(v)
                break
    return hits


def random_cyclic(rank, n, rng):
    while True:
        w = sample_reduced_word(rank, n, rng)
        try:
            return CyclicWord(rank, w.letters)
        except ValueError:
            continue


# -- construction and folding -------------------------------------------


class TestRose:
    def test_single_letter_loop(self):
        g = rose_of_words([AB.word("a")])
        assert g.num_vertices == 1 and g.num_edges == 1
        assert is_folded(g)

    def test_rejects_empty_word(self):
        with pytest.raises(TrivialGeneratorError):
            rose_of_words([AB.word("")])

    def test_subdivision_shape(self):
        g = rose_of_words([AB.word("abA")])
        assert g.num_vertices == 3 and g.num_edges == 3
        assert g.basepoint == 0


class TestFold:
    def test_hand_example(self):
        # <aa, ab> folds to two vertices and three edges, betti 2
        g = fold(rose_of_words([AB.word("aa"), AB.word("ab")]))
        assert is_folded(g)
        assert g.num_vertices == 2 and g.num_edges == 3
        assert g.betti() == 2

    def test_already_folded_untouched_shape(self):
        g0 = cycle_graph(AB.cyclic_word("aab"))
        g1 = fold(g0)
        assert is_isomorphic(g1, g0)

    def test_matches_oracle_on_random_roses(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            k = int(rng.integers(1, 4))
            words = [sample_reduced_word(2, int(rng.integers(1, 9)), rng)
                     for _ in range(k)]
            words = [w for w in words if len(w)]
            if not words:
                continue
            rose = rose_of_words(words)
            fast = fold(rose)
            slow = oracle_fold(rose)
            assert is_folded(fast) and is_folded(slow)
            assert is_isomorphic(fast, slow)

    def test_confluent_under_shuffles(self):
        rng = np.random.default_rng(37)
        words = [sample_reduced_word(2, 12, rng) for _ in range(3)]
        rose = rose_of_words(words)
        forms = {
            canonical_form(fold(rose, rng=np.random.default_rng(s)))
            for s in range(8)
        }
        assert len(forms) == 1

    def test_membership_via_lift(self):
        # aB is not in <aa, ab>, aabA... products of generators are
        g = fold(rose_of_words([AB.word("aa"), AB.word("ab")]))
        bp = g.basepoint
        assert oracle_walk(g, AB.word("aa").letters.tolist(), bp) == bp
        assert oracle_walk(g, AB.word("ab").letters.tolist(), bp) == bp
        w = AB.word("aa") * AB.word("ab").inverse()
        assert oracle_walk(g, w.letters.tolist(), bp) == bp
        assert oracle_walk(g, AB.word("aB").letters.tolist(), bp) != bp


class TestCore:
    def test_strips_hanging_path(self):
        # path 0 -a-> 1 -a-> 2 with a loop at 2
        g = CoreGraph(2, 3, [0, 1, 2], [1, 2, 2], [0, 0, 1])
        z = core(g)
        assert z.num_vertices == 1 and z.num_edges == 1

    def test_keeps_basepoint(self):
        g = CoreGraph(2, 3, [0, 1, 2], [1, 2, 2], [0, 0, 1], basepoint=0)
        y = core(g)
        assert y.num_vertices == 3
        assert y.basepoint == 0

    def test_drop_basepoint_mode(self):
        g = CoreGraph(2, 3, [0, 1, 2], [1, 2, 2], [0, 0, 1], basepoint=0)
        z = core(g, keep_basepoint=False)
        assert z.num_vertices == 1
        assert z.basepoint is None

    def test_unbased_core_of_conjugate_is_cycle(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            w = sample_reduced_word(2, int(rng.integers(1, 20)), rng)
            if len(w) == 0:
                continue
            y = fold(rose_of_words([w]))
            z = core(y, keep_basepoint=False)
            cw, _ = cyclic_reduce(w)
            assert is_isomorphic(z, cycle_graph(cw))

    def test_tree_cores_to_empty(self):
        g = CoreGraph(2, 3, [0, 1], [1, 2], [0, 1])
        z = core(g)
        assert z.num_vertices == 0 and z.num_edges == 0

    def test_return_kept_indices(self):
        g = CoreGraph(2, 3, [0, 1, 2], [1, 2, 2], [0, 0, 1])
        z, kept = core(g, return_kept=True)
        assert kept.tolist() == [2]


# -- fiber products and malnormality ------------------------------------


class TestFiberProduct:
    def test_matches_bruteforce_on_random_cycles(self):
        rng = np.random.default_rng(43)
        for _ in range(15):
            w1 = random_cyclic(2, int(rng.integers(2, 10)), rng)
            w2 = random_cyclic(2, int(rng.integers(2, 10)), rng)
            g1, g2 = cycle_graph(w1), cycle_graph(w2)
            fp = fiber_product(g1, g2)
            assert is_folded(fp)
            assert fp.num_vertices == g1.num_vertices * g2.num_vertices
            assert is_isomorphic(core(fp), core(oracle_product(g1, g2)))

    def test_pairs_decode(self):
        g = cycle_graph(AB.cyclic_word("ab"))
        fp = fiber_product(g, g)
        pairs = fp.pairs_of(np.arange(fp.num_vertices))
        for v, (a, b) in enumerate(pairs.tolist()):
            assert v == a * 2 + b

    def test_disjoint_labels_keep_vertices(self):
        fp = fiber_product(cycle_graph(AB.cyclic_word("a")),
                           cycle_graph(AB.cyclic_word("b")))
        assert fp.num_vertices == 1 and fp.num_edges == 0
        assert core(fp).num_vertices == 0

    def test_diagonal_survives_self_product(self):
        w = AB.cyclic_word("aabAB")
        fp = fiber_product(cycle_graph(w), cycle_graph(w))
        cored, kept = core(fp, return_kept=True)
        pairs = fp.pairs_of(kept)
        assert np.any(pairs[:, 0] == pairs[:, 1])


def family(*words):
    return [cycle_graph(w) for w in words]


class TestMalnormality:
    def test_single_generator(self):
        ok, wit = is_malnormal_family(family(AB.cyclic_word("a")))
        assert ok and wit is None

    def test_proper_power_fails(self):
        ok, wit = is_malnormal_family(family(AB.cyclic_word("aa")))
        assert not ok
        assert wit.i == 0 and wit.j == 0
        got = {tuple(p) for p in wit.pairs.tolist()}
        assert got == {(0, 1), (1, 0)}

    def test_disjoint_letters(self):
        ok, _ = is_malnormal_family(family(AB.cyclic_word("a"), AB.cyclic_word("b")))
        assert ok

    def test_ab_and_aB(self):
        ok, _ = is_malnormal_family(family(AB.cyclic_word("ab"), AB.cyclic_word("aB")))
        assert ok

    def test_repeated_class_fails(self):
        ok, wit = is_malnormal_family(family(AB.cyclic_word("ab"),
                                             AB.cyclic_word("ba")))
        assert not ok
        assert (wit.i, wit.j) == (0, 1)

    def test_inverse_class_fails(self):
        w = AB.cyclic_word("aab")
        ok, wit = is_malnormal_family(family(w, w.inverse()))
        assert not ok

    def test_power_pair_fails(self):
        ok, wit = is_malnormal_family(family(AB.cyclic_word("ab"),
                                             AB.cyclic_word("abab")))
        assert not ok

    def test_rank_two_subgroup_core(self):
        # <aa, ab> is not malnormal: a conjugates aa into it
        z = core(fold(rose_of_words([AB.word("aa"), AB.word("ab")])),
                 keep_basepoint=False)
        ok, wit = is_malnormal_family([z])
        assert not ok

    def test_random_primitive_words_pairwise(self):
        rng = np.random.default_rng(47)
        hits = 0
        for _ in range(20):
            w = random_cyclic(2, 16, rng)
            root, d = w.primitive_root()
            ok, _ = is_malnormal_family(family(w))
            if d == 1:
                hits += ok
            else:
                assert not ok
        # generic length-16 words are primitive and malnormal
        assert hits >= 18


# -- lifts and rigidity ---------------------------------------------------


class TestLifts:
    def test_lifts_match_walk(self):
        rng = np.random.default_rng(53)
        for _ in range(15):
            host = random_cyclic(2, int(rng.integers(2, 12)), rng)
            probe = random_cyclic(2, int(rng.integers(1, 6)), rng)
            g = cycle_graph(host)
            rep = lifts_of_loop(probe, g)
            expect = {
                v for v in range(g.num_vertices)
                if oracle_walk(g, probe.letters.tolist(), v) == v
            }
            assert set(rep.lifts.tolist()) == expect

    def test_periodic_points_match_walk(self):
        rng = np.random.default_rng(59)
        for _ in range(15):
            host = random_cyclic(2, int(rng.integers(2, 12)), rng)
            probe = random_cyclic(2, int(rng.integers(1, 6)), rng)
            g = cycle_graph(host)
            rep = lifts_of_loop(probe, g)
            assert set(rep.periodic_points.tolist()) == oracle_periodic(g, probe)

    def test_power_detected_as_periodic_not_fixed(self):
        # ab around the abab cycle closes after two passes
        g = cycle_graph(AB.cyclic_word("abab"))
        rep = lifts_of_loop(AB.cyclic_word("ab"), g)
        assert rep.count == 0
        assert rep.periodic_points.tolist() == [0, 2]
        assert not rep.fully_rigid

    def test_absent_label_no_lift(self):
        g = cycle_graph(AB.cyclic_word("aa"))
        rep = lifts_of_loop(AB.cyclic_word("b"), g)
        assert rep.count == 0 and rep.periodic_points.size == 0

    def test_two_lifts_on_power_cycle(self):
        g = cycle_graph(AB.cyclic_word("aa"))
        rep = lifts_of_loop(AB.cyclic_word("aa"), g)
        assert rep.count == 2 and not rep.fully_rigid


class TestRigidity:
    def test_primitive_single(self):
        g, _ = chain_graph([AB.cyclic_word("ab")])
        assert is_fully_rigid(AB.cyclic_word("ab"), g)

    def test_commutator_in_own_circle(self):
        w = AB.cyclic_word("abAB")
        assert is_fully_rigid(w, cycle_graph(w))

    def test_proper_power_not_rigid(self):
        g, _ = chain_graph([AB.cyclic_word("abab")])
        assert not is_fully_rigid(AB.cyclic_word("abab"), g)

    def test_duplicate_component_not_rigid(self):
        chain = [AB.cyclic_word("ab"), AB.cyclic_word("ab")]
        g, _ = chain_graph(chain)
        assert not is_fully_rigid(chain[0], g)

    def test_inverse_pair_not_rigid(self):
        # the cycle of the inverse is the same labeled graph, read backward
        chain = [AB.cyclic_word("aab"), AB.cyclic_word("aab").inverse()]
        g, _ = chain_graph(chain)
        assert not is_fully_rigid(chain[0], g)
        assert not is_fully_rigid(chain[1], g)

    def test_asymmetric_single_rigid(self):
        g, _ = chain_graph([AB.cyclic_word("aab")])
        assert is_fully_rigid(AB.cyclic_word("aab"), g)

    def test_ab_aB_rigid(self):
        chain = [AB.cyclic_word("ab"), AB.cyclic_word("aB")]
        g, _ = chain_graph(chain)
        assert all(is_fully_rigid(w, g) for w in chain)


# -- canonical forms, unions, serialization --------------------------------


class TestCanonical:
    def test_cycle_rotations_isomorphic(self):
        a = cycle_graph(AB.cyclic_word("aabab"))
        # same cycle built from a rotation of the word
        b = cycle_graph(CyclicWord(2, AB.cyclic_word("aabab").rotation(2)))
        assert is_isomorphic(a, b)

    def test_vertex_permutation_isomorphic(self):
        g = fold(rose_of_words([AB.word("aa"), AB.word("ab")]))
        perm = np.array([1, 0])
        h = CoreGraph(2, 2, perm[g.src], perm[g.dst], g.label,
                      basepoint=int(perm[g.basepoint]))
        assert is_isomorphic(g, h)

    def test_distinguishes_labels(self):
        assert not is_isomorphic(
            cycle_graph(AB.cyclic_word("ab")), cycle_graph(AB.cyclic_word("aB"))
        )

    def test_based_vs_unbased(self):
        g = cycle_graph(AB.cyclic_word("ab"))
        h = CoreGraph(2, 2, g.src, g.dst, g.label, basepoint=0)
        assert not is_isomorphic(g, h)

    def test_requires_folded(self):
        g = rose_of_words([AB.word("aa"), AB.word("ab")])
        with pytest.raises(ValueError):
            canonical_form(g)


class TestPlumbing:
    def test_disjoint_union_betti_adds(self):
        g = disjoint_union([cycle_graph(AB.cyclic_word("ab")),
                            cycle_graph(AB.cyclic_word("aab"))])
        assert g.num_components() == 2
        assert g.betti() == 2

    def test_chain_graph_offsets(self):
        g, offs = chain_graph([AB.cyclic_word("ab"), AB.cyclic_word("aab")])
        assert offs == [0, 2]
        assert g.num_vertices == 5

    def test_json_round_trip(self):
        g = fold(rose_of_words([AB.word("aab"), AB.word("ba")]))
        d = g.to_json_dict()
        h = CoreGraph.from_json_dict(d)
        assert g == h

    def test_json_rejects_bad_format(self):
        with pytest.raises(FormatError):
            CoreGraph.from_json_dict({"format": "nope"})

    def test_step_table_requires_folded(self):
        g = rose_of_words([AB.word("aa"), AB.word("ab")])
        with pytest.raises(ValueError):
            g.step_table()

    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            CoreGraph(2, 2, [0], [2], [0])
        with pytest.raises(ValueError):
            CoreGraph(2, 2, [0], [1], [5])
        with pytest.raises(ValueError):
            CoreGraph(2, 2, [0], [1], [0], basepoint=7)
