"""Search for folded fatgraphs with prescribed boundary.

A chain of cyclically reduced words bounds a surface exactly when its
letters cancel in pairs; choosing the cancellation is choosing a
fixed-point-free involution pairing each letter occurrence with an
occurrence of its inverse.  The quotient of the chain's circles by a
pairing is a fatgraph whose boundary re-traces the chain, so building
an f-folded surface piece reduces to searching the pairings for one
with a folded quotient that passes the full verification ladder.

Corner bookkeeping: position t is a letter occurrence; the point just
before it carries out-letter x_t.  Pairing t with u identifies point t
with point succ(u) and point succ(t) with point u, so quotient vertices
are the orbits of t -> succ(partner(t)) and the quotient is folded iff
no orbit repeats an out-letter.  The search maintains exactly that
with a rollback union-find over points, one letter bitmask per group.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from ._backend import kernels
from .errors import (
    NotHomologicallyTrivialError,
    SearchExhaustedError,
    TagInfeasibleError,
    TooLargeError,
)
from .fatgraph import Fatgraph, make_surface_piece
from .stallings import chain_graph, lifts_of_loop
from .words import CyclicWord, is_homologically_trivial, is_pseudorandom

__all__ = [
    "Chain",
    "Pairing",
    "BuilderConfig",
    "tag_f_vertices",
    "pairing_to_fatgraph",
    "quotient_vertices",
    "enumerate_pairings",
    "build_f_folded",
    "build_by_enumeration",
    "default_target",
    "mark_branch_positions",
]

ENUMERATION_LIMIT = 14


class Chain:
    """A homologically trivial collection of cyclic words with marks.

    f_positions are (component, position) corners to be forced onto
    2-valent vertices of the built fatgraph; any two marks on the same
    component must be at cyclic distance at least min_spacing.
    """

    __slots__ = ("components", "f_positions", "min_spacing",
                 "_offsets", "_letters")

    def __init__(self, components, f_positions=(), min_spacing=2):
        components = tuple(components)
        if not components:
            raise ValueError("a chain needs at least one component")
        rank = components[0].rank
        for w in components:
            if not isinstance(w, CyclicWord):
                raise TypeError("chain components must be cyclic words")
            if w.rank != rank:
                raise ValueError("chain components must share one alphabet")
        if not is_homologically_trivial(list(components)):
            raise NotHomologicallyTrivialError(
                "chain letters do not cancel in homology"
            )
        min_spacing = int(min_spacing)
        if min_spacing < 2:
            raise ValueError("min_spacing must be at least 2")
        marks = tuple(sorted((int(c), int(p)) for c, p in f_positions))
        if len(set(marks)) != len(marks):
            raise ValueError("duplicate marked position")
        for c, p in marks:
            if not 0 <= c < len(components):
                raise ValueError(f"marked component {c} out of range")
            if not 0 <= p < len(components[c]):
                raise ValueError(f"marked position {p} out of range")
        for c, p in marks:
            for c2, q in marks:
                if c2 != c or q <= p:
                    continue
                L = len(components[c])
                d = min(q - p, L - (q - p))
                if d < min_spacing:
                    raise ValueError(
                        f"marks {p} and {q} on component {c} are at cyclic "
                        f"distance {d} < {min_spacing}"
                    )
        self.components = components
        self.f_positions = marks
        self.min_spacing = min_spacing
        offsets = np.zeros(len(components) + 1, np.int64)
        for i, w in enumerate(components):
            offsets[i + 1] = offsets[i] + len(w)
        offsets.setflags(write=False)
        self._offsets = offsets
        letters = np.concatenate([w.letters for w in components])
        letters.setflags(write=False)
        self._letters = letters

    @property
    def rank(self):
        return self.components[0].rank

    @property
    def total_length(self):
        return int(self._offsets[-1])

    def offsets(self):
        return self._offsets

    def letters(self):
        return self._letters

    def successors(self):
        nxt = np.arange(1, self.total_length + 1, dtype=np.int64)
        for i in range(len(self.components)):
            nxt[self._offsets[i + 1] - 1] = self._offsets[i]
        return nxt

    def predecessors(self):
        prv = np.arange(-1, self.total_length - 1, dtype=np.int64)
        for i in range(len(self.components)):
            prv[self._offsets[i]] = self._offsets[i + 1] - 1
        return prv

    def global_position(self, comp, pos):
        return int(self._offsets[comp]) + int(pos)

    def __eq__(self, other):
        return (
            isinstance(other, Chain)
            and other.components == self.components
            and other.f_positions == self.f_positions
            and other.min_spacing == self.min_spacing
        )

    def __hash__(self):
        return hash((self.components, self.f_positions, self.min_spacing))

    def __repr__(self):
        words = ",".join(str(w) for w in self.components)
        return (
            f"Chain([{words}], marks={len(self.f_positions)}, "
            f"N={self.min_spacing})"
        )


def _as_chain(chain, min_spacing=2):
    if isinstance(chain, Chain):
        return chain
    return Chain(chain, min_spacing=min_spacing)


def _letters_of(chain):
    if isinstance(chain, Chain):
        return chain.letters()
    return np.concatenate([w.letters for w in chain])


class Pairing:
    """An involution matching letter occurrences with inverse occurrences.

    partner[t] is the matched position, or -1 while t is still free;
    a total pairing has none.  Construction validates the involution
    against the chain: fixed-point-free and label-inverse.
    """

    __slots__ = ("partner",)

    def __init__(self, chain, partner):
        letters = _letters_of(chain)
        partner = np.ascontiguousarray(partner, np.int32)
        if partner.shape != (letters.size,):
            raise ValueError("pairing size must match the chain length")
        paired = np.flatnonzero(partner >= 0)
        if paired.size:
            mates = partner[paired]
            if mates.max(initial=-1) >= letters.size:
                raise ValueError("pairing entry out of range")
            if np.any(partner[mates] != paired):
                raise ValueError("pairing is not an involution")
            if np.any(mates == paired):
                raise ValueError("pairing has a fixed point")
            if np.any(letters[mates] != (letters[paired] ^ 1)):
                raise ValueError("paired letters must be mutually inverse")
        partner.setflags(write=False)
        self.partner = partner

    @property
    def is_total(self):
        return not np.any(self.partner < 0)

    def pairs(self):
        out = []
        for t, u in enumerate(self.partner):
            if u > t:
                out.append((t, int(u)))
        return out

    def extends(self, other):
        """Whether every pair of `other` appears in self."""
        fixed = other.partner >= 0
        return bool(np.all(self.partner[fixed] == other.partner[fixed]))

    def __eq__(self, other):
        return isinstance(other, Pairing) and bool(
            np.all(other.partner == self.partner)
        )

    def __hash__(self):
        return hash(("Pairing", self.partner.tobytes()))

    def __repr__(self):
        done = int(np.count_nonzero(self.partner >= 0))
        return f"Pairing({done}/{self.partner.size} positions)"


class BuilderConfig:
    """Search knobs for build_f_folded.

    min_spacing defaults to max(4T, 64), a conservative stand-in for
    the spacing the random regime provides.  The pseudorandomness
    parameters gate nothing: a failing chain only draws a warning,
    since the statistic predicts feasibility rather than implying it.
    require_negative_euler makes the search skip annular and
    disconnected solutions, which a closed-surface gluing cannot use.
    """

    __slots__ = ("restart_budget", "backtrack_limit", "seed", "min_spacing",
                 "pseudorandom", "require_negative_euler")

    def __init__(self, restart_budget=32, backtrack_limit=20000, seed=0,
                 min_spacing=None, pseudorandom=None,
                 require_negative_euler=False):
        restart_budget = int(restart_budget)
        if restart_budget < 1:
            raise ValueError("restart_budget must be positive")
        if backtrack_limit is not None:
            backtrack_limit = int(backtrack_limit)
            if backtrack_limit < 1:
                raise ValueError("backtrack_limit must be positive or None")
        if min_spacing is None:
            min_spacing = max(4 * pseudorandom.T, 64) if pseudorandom else 64
        min_spacing = int(min_spacing)
        if min_spacing < 2:
            raise ValueError("min_spacing must be at least 2")
        self.restart_budget = restart_budget
        self.backtrack_limit = backtrack_limit
        self.seed = seed
        self.min_spacing = min_spacing
        self.pseudorandom = pseudorandom
        self.require_negative_euler = bool(require_negative_euler)

    def __repr__(self):
        return (
            f"BuilderConfig(restarts={self.restart_budget}, "
            f"backtracks={self.backtrack_limit}, seed={self.seed})"
        )


def tag_f_vertices(chain, rng=None):
    """Pre-pair the letters around each mark with a disjoint inverse arc.

    The mark at point v has adjacent letters x = letter(pred v) and
    y = letter(v); the tag pairs them against an occurrence of the arc
    (inverse y, inverse x) at positions (pred s, s), which closes the
    corner orbit {v, s} and so guarantees v lands on a 2-valent vertex
    of any extending pairing's quotient.  Arcs are chosen at random
    among those disjoint from every mark's own arc and every earlier
    tag; greedy order, so feasible instances can still fail for an
    unlucky draw and the builder retries per restart.
    """
    chain = _as_chain(chain)
    rng = np.random.default_rng(rng)
    letters = chain.letters()
    succ = chain.successors()
    pred = chain.predecessors()
    n = letters.size
    partner = np.full(n, -1, np.int32)
    marks = [chain.global_position(c, p) for c, p in chain.f_positions]
    reserved = set()
    for v in marks:
        if int(pred[v]) == v:
            raise TagInfeasibleError(
                "a marked position on a length-1 component cannot be tagged"
            )
        reserved.add(int(pred[v]))
        reserved.add(v)
    for v in marks:
        x = int(letters[pred[v]])
        y = int(letters[v])
        want_prev, want_here = y ^ 1, x ^ 1
        cands = [
            s for s in range(n)
            if letters[s] == want_here
            and letters[pred[s]] == want_prev
            and int(pred[s]) != s
            and s not in reserved
            and int(pred[s]) not in reserved
        ]
        if not cands:
            raise TagInfeasibleError(
                f"no free inverse arc for the mark at point {v}"
            )
        s = int(cands[int(rng.integers(len(cands)))])
        sp = int(pred[s])
        vp = int(pred[v])
        partner[vp], partner[s] = s, vp
        partner[v], partner[sp] = sp, v
        reserved.update((sp, s))
    return Pairing(chain, partner)


def _orbit_lists(N):
    vertex_of = np.full(N.size, -1, np.int64)
    orbits = []
    for t in range(N.size):
        if vertex_of[t] >= 0:
            continue
        orbit = []
        u = t
        while vertex_of[u] < 0:
            vertex_of[u] = len(orbits)
            orbit.append(u)
            u = int(N[u])
        orbits.append(orbit)
    return vertex_of, orbits


def quotient_vertices(chain, pairing):
    """Quotient vertex id for every chain position, under a total pairing."""
    chain = _as_chain(chain)
    partner = pairing.partner
    if np.any(partner < 0):
        raise ValueError("pairing must be total")
    vertex_of, _ = _orbit_lists(chain.successors()[partner])
    return vertex_of


def pairing_to_fatgraph(chain, pairing):
    """Quotient of the chain's circles by a total pairing.

    Vertices are the corner orbits, with the orbit order as the cyclic
    order of half-edges, so the boundary of the result re-traces the
    chain components exactly; edges are the letter pairs, oriented
    along the positive occurrence.
    """
    chain = _as_chain(chain)
    partner = pairing.partner
    if np.any(partner < 0):
        raise ValueError("pairing must be total")
    letters = chain.letters()
    succ = chain.successors()
    vertex_of, orbits = _orbit_lists(succ[partner])
    t_plus = np.flatnonzero(letters % 2 == 0)
    edge_of = np.full(letters.size, -1, np.int64)
    edge_of[t_plus] = np.arange(t_plus.size)
    edge_of[partner[t_plus]] = np.arange(t_plus.size)
    src = vertex_of[t_plus]
    dst = vertex_of[succ[t_plus]]
    label = letters[t_plus] >> 1
    orders = [
        [2 * int(edge_of[t]) + (int(letters[t]) & 1) for t in orbit]
        for orbit in orbits
    ]
    return Fatgraph(chain.rank, len(orbits), src, dst, label, orders)


def enumerate_pairings(chain):
    """Every total pairing of a small chain, for oracle use.

    The count is the product over generators of m! where m is the
    occurrence count, so the chain's total length is capped.
    """
    if isinstance(chain, Chain):
        rank = chain.rank
    else:
        chain = tuple(chain)
        rank = chain[0].rank
    letters = _letters_of(chain)
    n = letters.size
    if n > ENUMERATION_LIMIT:
        raise TooLargeError(
            f"chain length {n} exceeds the enumeration cap {ENUMERATION_LIMIT}"
        )
    groups = []
    for g in range(rank):
        plus = np.flatnonzero(letters == 2 * g)
        minus = np.flatnonzero(letters == 2 * g + 1)
        if plus.size != minus.size:
            return []
        if plus.size:
            groups.append((plus, minus))
    out = []
    for combo in itertools.product(
        *(itertools.permutations(minus.tolist()) for _, minus in groups)
    ):
        partner = np.full(n, -1, np.int32)
        for (plus, _), perm in zip(groups, combo):
            for t, u in zip(plus.tolist(), perm):
                partner[t] = u
                partner[u] = t
        out.append(Pairing(chain, partner))
    return out


def mark_branch_positions(components, z, min_spacing=None):
    """The chain of the given words, marked where their lifts branch.

    Each component must lift to z along exactly one closed walk; the
    corners the walk spends at vertices of valence 3 or more are the
    positions a surface piece has to keep 2-valent, so they become the
    chain's marks.  The declared spacing is the requested one capped by
    the spacing the walks actually achieve; walks whose branch visits
    collide (cyclic distance below 2) cannot form a valid chain and
    fail in the Chain constructor.
    """
    components = tuple(components)
    step = z.step_table()
    branch = z.degrees() >= 3
    marks = []
    worst = None
    for c, w in enumerate(components):
        rep = lifts_of_loop(w, z)
        if len(rep.lifts) != 1:
            raise ValueError(
                f"component {w} lifts {len(rep.lifts)} times; marking "
                "branch corners needs exactly one closed lift"
            )
        v = int(rep.lifts[0])
        here = []
        for j, x in enumerate(w.letters):
            if branch[v]:
                here.append((c, j))
            v = int(step[v, int(x)])
        L = len(w)
        for a in range(len(here)):
            for b in range(a + 1, len(here)):
                d = here[b][1] - here[a][1]
                d = min(d, L - d)
                worst = d if worst is None else min(worst, d)
        marks.extend(here)
    if min_spacing is None:
        min_spacing = 2 if worst is None else worst
    spacing = max(2, min(int(min_spacing), worst if worst is not None else min_spacing))
    return Chain(components, f_positions=marks, min_spacing=spacing)


def default_target(chain):
    """Disjoint circles of the components' primitive roots.

    Roots are deduplicated up to conjugacy and inversion, so every
    component lifts to exactly one closed loop in the result; over a
    union of circles the full verification ladder collapses to
    foldedness of the quotient.
    """
    chain = _as_chain(chain)
    roots = []
    for w in chain.components:
        r, _ = w.primitive_root()
        if r not in roots and r.inverse() not in roots:
            roots.append(r)
    graph, _ = chain_graph(roots)
    return graph


def _verify_candidate(chain, partner, z, config):
    pairing = Pairing(chain, partner)
    y = pairing_to_fatgraph(chain, pairing)
    piece = make_surface_piece(y, z)
    if not piece.passed():
        return None
    if sorted(map(str, piece.boundary)) != sorted(
        str(w) for w in chain.components
    ):
        return None
    if config.require_negative_euler:
        if not y.is_connected() or y.num_vertices >= y.num_edges:
            return None
    return piece


def _search(chain, tags, z, rng, config):
    """One randomized backtracking run over pairings extending the tags.

    The hot loop lives in the kernel backend: a depth-first search with
    corner-foldedness pruning via a rollback union-find, candidates
    pre-shuffled here so both backends consume identical draws, band
    extensions tried first.  A complete pairing is accepted only by the
    independent verification ladder.
    """
    letters = chain.letters()
    succ = chain.successors().astype(np.int32)
    pred = chain.predecessors().astype(np.int32)
    n = letters.size
    partner0 = tags.partner.astype(np.int32)

    free = np.flatnonzero(partner0 < 0).astype(np.int32)
    free_letters = letters[free]
    lists = []
    counts = np.zeros(n, np.int64)
    for t in range(n):
        if partner0[t] >= 0:
            lists.append(np.empty(0, np.int32))
            continue
        us = free[free_letters == letters[t] ^ 1]
        us = us[us != t]
        if us.size == 0:
            return None  # some letter has no partner anywhere
        if config.require_negative_euler:
            # long anti-parallel runs steer into the mirror pairing,
            # which the leaf check rejects; a random order spreads the
            # budget over genuinely different corners instead
            order_keys = rng.permutation(us.size)
        else:
            # candidates in decreasing order of the anti-parallel run
            # the pair would start, random tie-break: long bands first
            runs = np.zeros(us.size, np.int64)
            alive = np.ones(us.size, bool)
            pt = t
            pu = us.copy()
            for _ in range(min(n, 64)):
                pt = int(succ[pt])
                pu = pred[pu]
                alive &= letters[pt] == letters[pu] ^ 1
                if not alive.any():
                    break
                runs[alive] += 1
            order_keys = np.lexsort((rng.random(us.size), -runs))
        lists.append(us[order_keys].astype(np.int32))
        counts[t] = us.size
    cand_off = np.zeros(n + 1, np.int32)
    np.cumsum(counts, out=cand_off[1:])
    cand = (np.concatenate(lists).astype(np.int32) if cand_off[-1]
            else np.empty(0, np.int32))

    budget = config.backtrack_limit if config.backtrack_limit is not None else 2 ** 62
    status, partner, _ = kernels.dfs_pairing(
        letters, succ, pred, partner0, cand_off, cand, free,
        budget, config.require_negative_euler,
    )
    if status != 1:
        return None
    return _verify_candidate(chain, partner.astype(np.int64), z, config)


def build_f_folded(chain, z=None, config=None):
    """Search for a verified surface piece bounding the chain.

    Runs the tagging step, then a randomized depth-first search over
    pairings with corner-foldedness pruning; every completed pairing is
    handed to the independent verification ladder, and only a piece
    passing all of it is returned.  Restarts redraw tags and
    tie-breaks deterministically from the seed, so identical
    configurations reproduce identical pieces.  SearchExhausted means
    the budget ran out, not that no surface exists.
    """
    config = config or BuilderConfig()
    chain = _as_chain(chain, min_spacing=config.min_spacing)
    if z is None:
        z = default_target(chain)
    if config.pseudorandom is not None:
        ok, report = is_pseudorandom(list(chain.components), config.pseudorandom)
        if not ok:
            warnings.warn(
                f"chain fails the ({report.T}, {report.epsilon}) "
                f"pseudorandomness admission test (worst subword "
                f"{report.sigma!r} at ratio {report.ratio:.3f}); "
                "searching anyway",
                stacklevel=2,
            )
    tag_error = None
    for restart in range(config.restart_budget):
        rng = np.random.default_rng(
            np.random.SeedSequence(config.seed, spawn_key=(restart,))
        )
        try:
            tags = tag_f_vertices(chain, rng)
        except TagInfeasibleError as exc:
            tag_error = exc
            continue
        piece = _search(chain, tags, z, rng, config)
        if piece is not None:
            return piece
    if tag_error is not None:
        raise tag_error
    raise SearchExhaustedError(
        f"no verified pairing within {config.restart_budget} restarts; "
        "the search budget is not a nonexistence proof"
    )


def build_by_enumeration(chain, z=None, config=None):
    """Exhaustive small-chain variant of build_f_folded.

    Tries every pairing that extends a valid tagging (every pairing at
    all when nothing is marked), in enumeration order, and returns the
    first piece passing the verification ladder.
    """
    config = config or BuilderConfig()
    chain = _as_chain(chain, min_spacing=config.min_spacing)
    if z is None:
        z = default_target(chain)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
    tags = tag_f_vertices(chain, rng)
    for pairing in enumerate_pairings(chain):
        if not pairing.extends(tags):
            continue
        piece = _verify_candidate(chain, pairing.partner.astype(np.int64), z, config)
        if piece is not None:
            return piece
    raise SearchExhaustedError("no pairing passes verification")
