"""Folded labeled graphs over a free-group alphabet.

A CoreGraph is a finite graph whose edges carry a generator index and
an orientation, so directed arcs read letters: traversing edge e
forward reads generator g as letter 2g, backward as 2g+1.  Folded
graphs (no vertex with two equal-letter arcs out) represent subgroups;
folding, cores, fiber products, lifting, rigidity, and malnormality
are all built on that representation.

Vertex sets are 0..V-1; edge data lives in three parallel arrays
(src, dst, label).  The optional basepoint marks based graphs, whose
cores keep the basepoint even when it dangles.
"""

import numpy as np

from ._backend import kernels
from .errors import TrivialGeneratorError
from .words import MAX_RANK, CyclicWord, Word

__all__ = [
    "CoreGraph",
    "ProductGraph",
    "LiftReport",
    "MalnormalityWitness",
    "rose_of_words",
    "cycle_graph",
    "chain_graph",
    "disjoint_union",
    "fold",
    "is_folded",
    "core",
    "fiber_product",
    "transition_map",
    "lifts_of_loop",
    "is_fully_rigid",
    "is_malnormal_family",
    "canonical_form",
    "is_isomorphic",
]


class CoreGraph:
    """A labeled graph: edge i runs src[i] -> dst[i] reading generator label[i].

    Construction validates index ranges only; foldedness is a property
    (`is_folded`) that most operations require and `fold` establishes.
    """

    __slots__ = ("rank", "num_vertices", "src", "dst", "label", "basepoint", "_step")

    def __init__(self, rank, num_vertices, src, dst, label, basepoint=None):
        rank = int(rank)
        if not 1 <= rank <= MAX_RANK:
            raise ValueError(f"rank must be in 1..{MAX_RANK}")
        V = int(num_vertices)
        if V < 0:
            raise ValueError("num_vertices must be nonnegative")
        src = np.ascontiguousarray(src, np.int32)
        dst = np.ascontiguousarray(dst, np.int32)
        label = np.ascontiguousarray(label, np.int8)
        if not (src.shape == dst.shape == label.shape) or src.ndim != 1:
            raise ValueError("edge arrays must be equal-length vectors")
        if src.size:
            lo = min(src.min(), dst.min())
            hi = max(src.max(), dst.max())
            if lo < 0 or hi >= V:
                raise ValueError("edge endpoint out of range")
            if label.min() < 0 or label.max() >= rank:
                raise ValueError("edge label out of range")
        if basepoint is not None:
            basepoint = int(basepoint)
            if not 0 <= basepoint < V:
                raise ValueError("basepoint out of range")
        for a in (src, dst, label):
            a.setflags(write=False)
        self.rank = rank
        self.num_vertices = V
        self.src = src
        self.dst = dst
        self.label = label
        self.basepoint = basepoint
        self._step = None

    @property
    def num_edges(self):
        return self.src.size

    def degrees(self):
        deg = np.bincount(self.src, minlength=self.num_vertices)
        deg += np.bincount(self.dst, minlength=self.num_vertices)
        return deg

    def step_table(self):
        """Partial transition table, shape (V+1, 2l); row V is the dead state.

        Requires a folded graph: entry [v, c] is the endpoint of the
        unique arc out of v reading letter c, or V if there is none.
        """
        if self._step is None:
            if not is_folded(self):
                raise ValueError("step table requires a folded graph")
            V = self.num_vertices
            step = np.full((V + 1, 2 * self.rank), V, np.int32)
            step[self.src, 2 * self.label] = self.dst
            step[self.dst, 2 * self.label + 1] = self.src
            step.setflags(write=False)
            self._step = step
        return self._step

    def components(self):
        """Component labels per vertex, numbered by least member vertex."""
        parent = list(range(self.num_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in zip(self.src.tolist(), self.dst.tolist()):
            ru, rv = find(u), find(v)
            if ru != rv:
                if ru < rv:
                    parent[rv] = ru
                else:
                    parent[ru] = rv
        roots = np.fromiter((find(v) for v in range(self.num_vertices)), np.int32,
                            self.num_vertices)
        _, labels = np.unique(roots, return_inverse=True)
        return labels.astype(np.int32)

    def num_components(self):
        if self.num_vertices == 0:
            return 0
        return int(self.components().max()) + 1

    def is_connected(self):
        return self.num_components() <= 1

    def betti(self):
        """First Betti number: edges - vertices + components."""
        return self.num_edges - self.num_vertices + self.num_components()

    def to_json_dict(self):
        return {
            "format": "foldsurf-graph/1",
            "rank": self.rank,
            "vertices": list(range(self.num_vertices)),
            "edges": [
                {
                    "id": i,
                    "src": int(u),
                    "dst": int(v),
                    "label": chr(ord("a") + int(g)),
                }
                for i, (u, v, g) in enumerate(zip(self.src, self.dst, self.label))
            ],
            "basepoint": self.basepoint,
        }

    @classmethod
    def from_json_dict(cls, d):
        from .errors import FormatError

        if d.get("format", "foldsurf-graph/1") != "foldsurf-graph/1":
            raise FormatError(f"expected foldsurf-graph/1, got {d.get('format')!r}")
        try:
            verts = d["vertices"]
            if sorted(verts) != list(range(len(verts))):
                raise FormatError("vertex ids must be 0..V-1")
            edges = sorted(d["edges"], key=lambda e: e["id"])
            src = [e["src"] for e in edges]
            dst = [e["dst"] for e in edges]
            lab = [ord(e["label"]) - ord("a") for e in edges]
            rank = d.get("rank", max(lab, default=0) + 1)
            return cls(rank, len(verts), src, dst, lab, d.get("basepoint"))
        except FormatError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed graph record: {exc}") from exc

    def __eq__(self, other):
        """Structural identity; use is_isomorphic for isomorphism."""
        return (
            isinstance(other, CoreGraph)
            and other.rank == self.rank
            and other.num_vertices == self.num_vertices
            and other.basepoint == self.basepoint
            and other.src.size == self.src.size
            and bool(np.all(other.src == self.src))
            and bool(np.all(other.dst == self.dst))
            and bool(np.all(other.label == self.label))
        )

    def __hash__(self):
        return hash(
            (
                "CoreGraph",
                self.rank,
                self.num_vertices,
                self.basepoint,
                self.src.tobytes(),
                self.dst.tobytes(),
                self.label.tobytes(),
            )
        )

    def __repr__(self):
        bp = f", basepoint={self.basepoint}" if self.basepoint is not None else ""
        return (
            f"CoreGraph(rank={self.rank}, V={self.num_vertices}, "
            f"E={self.num_edges}{bp})"
        )


def rose_of_words(words):
    """Wedge of subdivided loops, one per word, joined at basepoint 0.

    The result is usually unfolded; fold it to get the subgroup graph
    of the group the words generate.  Empty words are rejected since
    they name the trivial generator.
    """
    words = list(words)
    if not words:
        raise ValueError("need at least one word")
    rank = words[0].rank
    if any(w.rank != rank for w in words):
        raise ValueError("words must share one rank")
    if any(len(w) == 0 for w in words):
        raise TrivialGeneratorError("empty word cannot generate")
    src, dst, lab = [], [], []
    V = 1
    for w in words:
        n = len(w)
        verts = [0] + list(range(V, V + n - 1)) + [0]
        V += n - 1
        for i, x in enumerate(w.letters.tolist()):
            g, bar = divmod(x, 2)
            a, b = verts[i], verts[i + 1]
            if bar:
                a, b = b, a
            src.append(a)
            dst.append(b)
            lab.append(g)
    return CoreGraph(rank, V, src, dst, lab, basepoint=0)


def cycle_graph(cword):
    """The cycle reading a cyclically reduced word; folded by construction."""
    n = len(cword)
    src, dst, lab = [], [], []
    for i, x in enumerate(cword.letters.tolist()):
        g, bar = divmod(x, 2)
        a, b = i, (i + 1) % n
        if bar:
            a, b = b, a
        src.append(a)
        dst.append(b)
        lab.append(g)
    return CoreGraph(cword.rank, n, src, dst, lab)


def chain_graph(words):
    """Disjoint union of the cycles of a chain.

    Returns (graph, offsets): component i occupies vertices
    offsets[i] .. offsets[i] + len(words[i]) - 1, with vertex
    offsets[i] + t sitting just before letter t of the canonical
    rotation.
    """
    words = list(words)
    if not words:
        raise ValueError("chain must be nonempty")
    graphs = [cycle_graph(w) for w in words]
    offsets = []
    off = 0
    for g in graphs:
        offsets.append(off)
        off += g.num_vertices
    return disjoint_union(graphs), offsets


def disjoint_union(graphs):
    """Disjoint union; any basepoints are dropped."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    rank = graphs[0].rank
    if any(g.rank != rank for g in graphs):
        raise ValueError("graphs must share one rank")
    V = 0
    src, dst, lab = [], [], []
    for g in graphs:
        src.append(g.src + V)
        dst.append(g.dst + V)
        lab.append(g.label)
        V += g.num_vertices
    return CoreGraph(rank, V, np.concatenate(src), np.concatenate(dst),
                     np.concatenate(lab))


def is_folded(graph):
    """True iff no vertex has two arcs out reading the same letter."""
    if graph.num_edges == 0:
        return True
    keys_out = graph.src.astype(np.int64) * (2 * graph.rank) + 2 * graph.label
    keys_in = graph.dst.astype(np.int64) * (2 * graph.rank) + 2 * graph.label + 1
    keys = np.concatenate([keys_out, keys_in])
    return int(np.unique(keys).size) == keys.size


def _find_root(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def fold(graph, rng=None):
    """Fold the graph: identify equal-letter arcs until none remain.

    Folding is confluent, so the result is independent of order up to
    isomorphism; an rng shuffles edge order to let tests exercise that.
    Vertices left isolated by folding are dropped.  Returns a folded
    CoreGraph with the basepoint carried through the identifications.
    """
    V = graph.num_vertices
    src = graph.src.astype(np.int64).copy()
    dst = graph.dst.astype(np.int64).copy()
    lab = graph.label.copy()
    if rng is not None and src.size:
        perm = rng.permutation(src.size)
        src, dst, lab = src[perm], dst[perm], lab[perm]
    parent = np.arange(V, dtype=np.int64)

    while True:
        # arcs grouped by (vertex, letter); all far ends of a group merge
        far = np.concatenate([dst, src])
        key = np.concatenate([src * (2 * graph.rank) + 2 * lab,
                              dst * (2 * graph.rank) + 2 * lab + 1])
        order = np.argsort(key, kind="stable")
        key = key[order]
        far = far[order]
        same = key[1:] == key[:-1]
        if not same.any():
            break
        plist = parent
        merged = False
        for a, b in zip(far[:-1][same].tolist(), far[1:][same].tolist()):
            ra, rb = _find_root(plist, a), _find_root(plist, b)
            if ra != rb:
                if ra < rb:
                    plist[rb] = ra
                else:
                    plist[ra] = rb
                merged = True
        if not merged:
            break
        # path-compress, relabel endpoints, and drop duplicate edges
        for i in range(V):
            _find_root(plist, i)
        src = parent[src]
        dst = parent[dst]
        code = (src * V + dst) * graph.rank + lab
        _, keep = np.unique(code, return_index=True)
        keep.sort()
        src, dst, lab = src[keep], dst[keep], lab[keep]

    used = np.unique(np.concatenate([src, dst]))
    bp = graph.basepoint
    if bp is not None:
        bp = int(_find_root(parent, bp))
        used = np.unique(np.append(used, bp))
    newV = used.size
    remap = np.full(V, -1, np.int64)
    remap[used] = np.arange(newV)
    src = remap[src]
    dst = remap[dst]
    if bp is not None:
        bp = int(remap[bp])
    return CoreGraph(graph.rank, newV, src, dst, lab, basepoint=bp)


def core(graph, keep_basepoint=True, return_kept=False):
    """Strip dangling trees: remove valence <= 1 vertices until none remain.

    With keep_basepoint (and a based graph) the basepoint survives even
    when it dangles, giving the based core; without, everything
    valence <= 1 goes and the result is basepoint-free, giving the
    conjugacy-class core.  With return_kept, also returns the
    surviving old vertex ids.
    """
    V = graph.num_vertices
    alive_e = np.ones(graph.num_edges, bool)
    src = graph.src
    dst = graph.dst
    deg = graph.degrees().astype(np.int64)
    bp = graph.basepoint if keep_basepoint else None
    protected = np.zeros(V, bool)
    if bp is not None:
        protected[bp] = True
    alive_v = np.ones(V, bool)
    while True:
        peel = alive_v & ~protected & (deg <= 1)
        if not peel.any():
            break
        alive_v &= ~peel
        doomed = alive_e & (peel[src] | peel[dst])
        if doomed.any():
            deg -= np.bincount(src[doomed], minlength=V)
            deg -= np.bincount(dst[doomed], minlength=V)
            alive_e &= ~doomed
    keep = np.flatnonzero(alive_v)
    remap = np.full(V, -1, np.int64)
    remap[keep] = np.arange(keep.size)
    out = CoreGraph(
        graph.rank,
        keep.size,
        remap[src[alive_e]],
        remap[dst[alive_e]],
        graph.label[alive_e],
        basepoint=None if bp is None else int(remap[bp]),
    )
    if return_kept:
        return out, keep
    return out


class ProductGraph(CoreGraph):
    """Fiber product carrying its pair structure.

    Vertex a*V2 + b is the pair (a, b); all V1*V2 pairs are retained
    (isolated ones fall to core).  The product of folded graphs is
    folded, and its projections are immersions.
    """

    __slots__ = ("left_vertices", "right_vertices")

    def __init__(self, rank, left_vertices, right_vertices, src, dst, label):
        super().__init__(rank, left_vertices * right_vertices, src, dst, label)
        self.left_vertices = left_vertices
        self.right_vertices = right_vertices

    def pairs_of(self, vertices):
        """Decode product vertex ids to an (m, 2) array of pairs."""
        v = np.asarray(vertices, np.int64)
        return np.stack([v // self.right_vertices, v % self.right_vertices], axis=1)


def fiber_product(g1, g2):
    """Fiber product over the rose: simultaneous equal-letter arcs."""
    if g1.rank != g2.rank:
        raise ValueError("rank mismatch")
    V2 = g2.num_vertices
    psrc, pdst, plab = [], [], []
    for g in range(g1.rank):
        m1 = g1.label == g
        m2 = g2.label == g
        if not (m1.any() and m2.any()):
            continue
        s1 = g1.src[m1].astype(np.int64)
        d1 = g1.dst[m1].astype(np.int64)
        s2 = g2.src[m2].astype(np.int64)
        d2 = g2.dst[m2].astype(np.int64)
        psrc.append((s1[:, None] * V2 + s2[None, :]).ravel())
        pdst.append((d1[:, None] * V2 + d2[None, :]).ravel())
        plab.append(np.full(s1.size * s2.size, g, np.int8))
    if psrc:
        psrc = np.concatenate(psrc)
        pdst = np.concatenate(pdst)
        plab = np.concatenate(plab)
    else:
        psrc = np.empty(0, np.int64)
        pdst = np.empty(0, np.int64)
        plab = np.empty(0, np.int8)
    return ProductGraph(g1.rank, g1.num_vertices, V2, psrc, pdst, plab)


class LiftReport:
    """Closed lifts of one cyclic word to a folded graph.

    lifts are the starting vertices where the loop closes after one
    pass (the fixed points of its transition map); periodic_points
    close after some positive power.  fully_rigid means exactly one
    periodic point, so no stray lift of any power exists.
    """

    __slots__ = ("loop", "lifts", "periodic_points", "fully_rigid")

    def __init__(self, loop, lifts, periodic_points):
        self.loop = loop
        self.lifts = lifts
        self.periodic_points = periodic_points
        self.fully_rigid = int(periodic_points.size) == 1

    @property
    def count(self):
        return int(self.lifts.size)

    def __repr__(self):
        return (
            f"LiftReport(loop={str(self.loop)!r}, lifts={self.count}, "
            f"periodic={int(self.periodic_points.size)}, "
            f"fully_rigid={self.fully_rigid})"
        )


def transition_map(w, z):
    """Endpoints of the unique paths reading w once; z.num_vertices = died."""
    step = z.step_table()
    return kernels.loop_transition(step, w.letters)


def lifts_of_loop(w, z):
    """All closed lifts of a cyclic word, and of its powers, to a folded graph."""
    V = z.num_vertices
    cur = transition_map(w, z)
    fixed = np.flatnonzero(cur == np.arange(V, dtype=cur.dtype)).astype(np.int64)
    # pointer doubling to a power >= V on the map extended by the dead
    # state V (which maps to itself): every surviving orbit lands on a
    # cycle, and the landing set is exactly the periodic set
    ext = np.append(cur.astype(np.int64), V)
    m = 1
    while m < max(V, 1):
        ext = ext[ext]
        m *= 2
    landed = ext[:V]
    periodic = np.unique(landed[landed != V])
    return LiftReport(w, fixed, periodic)


def is_fully_rigid(w, z):
    """Exactly one periodic point of T_w, so w and all its powers lift once."""
    return lifts_of_loop(w, z).fully_rigid


class MalnormalityWitness:
    """A failing pair: component of the fiber product beyond the diagonal."""

    __slots__ = ("i", "j", "pairs")

    def __init__(self, i, j, pairs):
        self.i = i
        self.j = j
        self.pairs = pairs

    def to_json_dict(self):
        return {
            "i": self.i,
            "j": self.j,
            "pairs": [[int(a), int(b)] for a, b in self.pairs],
        }

    def __repr__(self):
        return f"MalnormalityWitness(i={self.i}, j={self.j}, size={len(self.pairs)})"


def is_malnormal_family(zs):
    """Whether folded basepoint-free cores form a malnormal family.

    For i < j the core of the fiber product must be empty; for i = j
    it must be exactly the diagonal copy of z_i.  Returns (ok, witness)
    where the witness, if any, is one offending component decoded to
    vertex pairs (it encodes a conjugator g with nontrivial
    intersection).
    """
    zs = list(zs)
    for z in zs:
        if not is_folded(z):
            raise ValueError("malnormality test requires folded graphs")
    for i in range(len(zs)):
        for j in range(i, len(zs)):
            fp = fiber_product(zs[i], zs[j])
            cored, kept = core(fp, keep_basepoint=False, return_kept=True)
            if cored.num_vertices == 0:
                continue
            pairs = fp.pairs_of(kept)
            if i < j:
                labels = cored.components()
                return False, MalnormalityWitness(i, j, pairs[labels == 0])
            off = pairs[:, 0] != pairs[:, 1]
            if off.any():
                labels = cored.components()
                bad = labels[np.flatnonzero(off)[0]]
                return False, MalnormalityWitness(i, j, pairs[labels == bad])
    return True, None


def canonical_form(graph):
    """Canonical byte serialization; equal iff based-isomorphic.

    Folded graphs only.  Based graphs are traversed from the
    basepoint; unbased ones take the least serialization over all
    starting vertices, componentwise, so the form is label-preserving
    isomorphism invariant.
    """
    if not is_folded(graph):
        raise ValueError("canonical form requires a folded graph")
    step = graph.step_table()
    V = graph.num_vertices
    S = 2 * graph.rank

    def serial_from(start):
        order = np.full(V, -1, np.int64)
        order[start] = 0
        queue = [start]
        nxt = 1
        out = []
        qi = 0
        while qi < len(queue):
            v = queue[qi]
            qi += 1
            for c in range(S):
                w = int(step[v, c])
                if w == V:
                    out.append(-1)
                    continue
                if order[w] < 0:
                    order[w] = nxt
                    nxt += 1
                    queue.append(w)
                out.append(int(order[w]))
        return out, queue

    if V == 0:
        return b"empty:%d" % graph.rank

    labels = graph.components()
    based = graph.basepoint is not None
    flat = []
    skip = -1
    if based:
        skip = int(labels[graph.basepoint])
        flat.extend(serial_from(graph.basepoint)[0])
    rest = []
    for comp_id in range(int(labels.max()) + 1):
        if comp_id == skip:
            continue
        members = np.flatnonzero(labels == comp_id)
        rest.append(min(serial_from(int(v))[0] for v in members))
    rest.sort()
    for cser in rest:
        flat.extend([-2] + cser)
    return _pack(graph.rank, flat, based=based)


def _pack(rank, serial, based):
    head = b"b" if based else b"u"
    return head + np.int64(rank).tobytes() + np.asarray(serial, np.int64).tobytes()


def is_isomorphic(g1, g2):
    """Label-preserving isomorphism (based if both graphs are based)."""
    if g1.rank != g2.rank:
        return False
    if (g1.basepoint is None) != (g2.basepoint is None):
        return False
    return canonical_form(g1) == canonical_form(g2)
