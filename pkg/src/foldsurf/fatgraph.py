"""Fatgraphs, boundary tracing, and closed-surface certificates.

A fatgraph is a labeled graph with a cyclic order on the half-edges at
each vertex.  It fattens canonically to a compact oriented surface with
the graph as spine; the boundary of that surface is traced
combinatorially.  This module lifts boundary words into a basepoint-free
core Z, locates f-vertices, decides the f-folded condition, verifies
boundary incompressibility through fiber products, and glues verified
pieces into a closed-surface certificate.
"""

from __future__ import annotations

import copy

import numpy as np

from .errors import (
    AmbiguousLiftError,
    BoundaryNotReducedError,
    DisconnectedFatgraphError,
    FailedCheckError,
    FormatError,
    NoLiftError,
    RigidityRequiredError,
    UnmatchedBoundaryError,
    WordMismatchError,
)
from .stallings import (
    CoreGraph,
    canonical_form,
    core,
    fiber_product,
    is_folded,
    is_malnormal_family,
    lifts_of_loop,
)
from .words import CyclicWord, least_rotation

__all__ = [
    "FATGRAPH_FORMAT",
    "PIECE_FORMAT",
    "CERTIFICATE_FORMAT",
    "PIECE_CHECKS",
    "Fatgraph",
    "SurfacePiece",
    "ClosedSurfaceCertificate",
    "trace_boundary",
    "euler_and_genus",
    "check_boundary_in_Z",
    "make_surface_piece",
    "locate_f_vertices",
    "is_f_folded",
    "verify_incompressible",
    "glue",
    "verify_piece",
    "verify_certificate",
]

FATGRAPH_FORMAT = "foldsurf-fatgraph/1"
PIECE_FORMAT = "foldsurf-piece/1"
CERTIFICATE_FORMAT = "foldsurf-certificate/1"

# verification ladder recorded on every piece, in dependency order
PIECE_CHECKS = ("folded", "boundary_in_Z", "f_folded", "incompressible")


class Fatgraph(CoreGraph):
    """A labeled graph plus a cyclic order of half-edges at each vertex.

    Edge e contributes half-edge 2e at its source and 2e+1 at its
    target; orders[v] lists the half-edges based at v in cyclic order.
    Thickening each vertex to a disc (with that order) and each edge to
    a band yields the oriented surface S(Y) whose spine is the graph.
    """

    __slots__ = ("orders", "_next")

    def __init__(self, rank, num_vertices, src, dst, label, orders):
        super().__init__(rank, num_vertices, src, dst, label, basepoint=None)
        if self.num_vertices == 0:
            raise ValueError("a fatgraph needs at least one vertex")
        if len(orders) != self.num_vertices:
            raise ValueError("need one cyclic order per vertex")
        D = 2 * self.num_edges
        home = np.full(D, -1, np.int64)
        norm = []
        for v, order in enumerate(orders):
            order = tuple(int(d) for d in order)
            if not order:
                raise ValueError(f"vertex {v} has no half-edges")
            for d in order:
                if not 0 <= d < D:
                    raise ValueError(f"half-edge id {d} out of range")
                if home[d] != -1:
                    raise ValueError(f"half-edge {d} listed twice")
                home[d] = v
            norm.append(order)
        want = np.empty(D, np.int64)
        want[0::2] = self.src
        want[1::2] = self.dst
        if not np.array_equal(home, want):
            raise ValueError("every half-edge must be listed at its endpoint")
        self.orders = tuple(norm)
        self._next = None

    @property
    def num_darts(self):
        return 2 * self.num_edges

    def dart_vertex(self, d):
        e, side = divmod(int(d), 2)
        return int(self.dst[e] if side else self.src[e])

    def dart_letter(self, d):
        """The letter read when leaving along d: 2*label forward, +1 back."""
        d = int(d)
        return 2 * int(self.label[d >> 1]) + (d & 1)

    def valences(self):
        return tuple(len(o) for o in self.orders)

    def _successor(self):
        if self._next is None:
            nxt = np.empty(self.num_darts, np.int64)
            for order in self.orders:
                o = np.asarray(order, np.int64)
                nxt[o] = np.roll(o, -1)
            nxt.setflags(write=False)
            self._next = nxt
        return self._next

    def boundary_orbits(self):
        """Orbits of the boundary map d -> successor(reverse d).

        Arriving at a vertex along the reverse of d, the fattened
        surface's boundary turns through one corner and leaves along
        the cyclic successor of that half-edge.  Each orbit is listed
        starting from its least half-edge; orbits sorted by that.
        """
        nxt = self._successor()
        seen = np.zeros(self.num_darts, bool)
        orbits = []
        for d0 in range(self.num_darts):
            if seen[d0]:
                continue
            orbit = []
            d = d0
            while not seen[d]:
                seen[d] = True
                orbit.append(d)
                d = int(nxt[d ^ 1])
            orbits.append(orbit)
        return orbits

    def as_core_graph(self):
        return CoreGraph(self.rank, self.num_vertices, self.src, self.dst, self.label)

    def to_json_dict(self):
        d = super().to_json_dict()
        d["format"] = FATGRAPH_FORMAT
        del d["basepoint"]
        d["cyclic_orders"] = {str(v): list(o) for v, o in enumerate(self.orders)}
        return d

    @classmethod
    def from_json_dict(cls, d):
        if d.get("format") != FATGRAPH_FORMAT:
            raise FormatError(f"expected {FATGRAPH_FORMAT}, got {d.get('format')!r}")
        plain = {k: v for k, v in d.items() if k != "cyclic_orders"}
        plain["format"] = "foldsurf-graph/1"
        plain.pop("basepoint", None)
        g = CoreGraph.from_json_dict(plain)
        try:
            orders = [d["cyclic_orders"][str(v)] for v in range(g.num_vertices)]
            return cls(g.rank, g.num_vertices, g.src, g.dst, g.label, orders)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed fatgraph record: {exc}") from exc

    def __eq__(self, other):
        return (
            isinstance(other, Fatgraph)
            and CoreGraph.__eq__(self, other)
            and other.orders == self.orders
        )

    def __hash__(self):
        return hash((CoreGraph.__hash__(self), self.orders))

    def __repr__(self):
        return (
            f"Fatgraph(rank={self.rank}, V={self.num_vertices}, "
            f"E={self.num_edges}, boundary={len(self.boundary_orbits())})"
        )


class _BoundaryFrame:
    """One traced boundary circle, aligned to its canonical cyclic word.

    darts is the orbit in tracing order.  The canonical word starts
    `rotation` steps into the orbit, and vertices[j] is the fatgraph
    vertex the boundary sits at just before reading word letter j.
    """

    __slots__ = ("darts", "word", "rotation", "vertices")

    def __init__(self, darts, word, rotation, vertices):
        self.darts = darts
        self.word = word
        self.rotation = rotation
        self.vertices = vertices


def _frames(y):
    frames = []
    for orbit in y.boundary_orbits():
        letters = np.array([y.dart_letter(d) for d in orbit], np.int8)
        backtracks = bool(np.any(letters[1:] == (letters[:-1] ^ 1)))
        wraps = letters.size > 1 and letters[0] == letters[-1] ^ 1
        if backtracks or wraps:
            raise BoundaryNotReducedError(
                "a boundary word backtracks; the fatgraph has a valence-1 "
                "vertex or an unfolded corner"
            )
        r = int(least_rotation(letters))
        word = CyclicWord(y.rank, np.concatenate([letters[r:], letters[:r]]), _checked=True)
        L = len(orbit)
        vertices = tuple(y.dart_vertex(orbit[(r + j) % L]) for j in range(L))
        frames.append(_BoundaryFrame(tuple(orbit), word, r, vertices))
    return frames


def trace_boundary(y):
    """Boundary words of the fattened surface, one per boundary circle."""
    return [f.word for f in _frames(y)]


def euler_and_genus(obj):
    """(Euler characteristic, genus, boundary count) of the fattening.

    Accepts a Fatgraph, a SurfacePiece, or a ClosedSurfaceCertificate;
    a certificate is closed, so its boundary count is 0 and chi sums
    over the pieces.
    """
    if isinstance(obj, ClosedSurfaceCertificate):
        chi = sum(euler_and_genus(p)[0] for p in obj.pieces)
        assert chi % 2 == 0
        return chi, (2 - chi) // 2, 0
    if isinstance(obj, SurfacePiece):
        y = obj.fatgraph
        b = len(obj.boundary)
    else:
        y = obj
        b = len(y.boundary_orbits())
    if not y.is_connected():
        raise DisconnectedFatgraphError("genus needs a connected fatgraph")
    chi = y.num_vertices - y.num_edges
    assert (2 - chi - b) % 2 == 0
    return chi, (2 - chi - b) // 2, b


def check_boundary_in_Z(y, z):
    """Start vertices in z of the unique lifts of y's boundary words.

    Every traced boundary word must lift to a closed loop of z, and
    uniquely so: f-vertex location and the gluing correspondence both
    read data off one chosen lift, which is only well defined when the
    boundary words are rigid in z.
    """
    lifts = []
    for i, w in enumerate(trace_boundary(y)):
        rep = lifts_of_loop(w, z)
        if rep.count == 0:
            raise NoLiftError(f"boundary component {i} ({w}) does not lift")
        if rep.count > 1:
            raise AmbiguousLiftError(
                f"boundary component {i} ({w}) lifts {rep.count} times"
            )
        lifts.append(int(rep.lifts[0]))
    return lifts


class SurfacePiece:
    """A fatgraph with boundary lifted into a target core, plus verdicts.

    checks records the verification ladder: folded, boundary_in_Z,
    f_folded, incompressible.  Later entries are False whenever an
    earlier one failed; boundary_lifts and f_vertices are None when not
    computable.
    """

    __slots__ = ("fatgraph", "boundary", "target_core", "boundary_lifts",
                 "f_vertices", "checks")

    def __init__(self, fatgraph, boundary, target_core, boundary_lifts,
                 f_vertices, checks):
        self.fatgraph = fatgraph
        self.boundary = tuple(boundary)
        self.target_core = target_core
        self.boundary_lifts = None if boundary_lifts is None else tuple(
            int(v) for v in boundary_lifts)
        self.f_vertices = None if f_vertices is None else tuple(
            (int(i), int(j)) for i, j in f_vertices)
        self.checks = {name: bool(checks.get(name, False)) for name in PIECE_CHECKS}

    def passed(self):
        return all(self.checks[name] for name in PIECE_CHECKS)

    def to_json_dict(self):
        return {
            "format": PIECE_FORMAT,
            "fatgraph": self.fatgraph.to_json_dict(),
            "boundary": [str(w) for w in self.boundary],
            "target_core": self.target_core.to_json_dict(),
            "boundary_lifts": None if self.boundary_lifts is None else list(self.boundary_lifts),
            "f_vertices": None if self.f_vertices is None else [list(p) for p in self.f_vertices],
            "checks": dict(self.checks),
        }

    @classmethod
    def from_json_dict(cls, d):
        if d.get("format") != PIECE_FORMAT:
            raise FormatError(f"expected {PIECE_FORMAT}, got {d.get('format')!r}")
        try:
            y = Fatgraph.from_json_dict(d["fatgraph"])
            z = CoreGraph.from_json_dict(d["target_core"])
            boundary = [CyclicWord.parse(y.rank, s) for s in d["boundary"]]
            return cls(y, boundary, z, d.get("boundary_lifts"),
                       d.get("f_vertices"), d.get("checks", {}))
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed piece record: {exc}") from exc

    def __eq__(self, other):
        return (
            isinstance(other, SurfacePiece)
            and other.fatgraph == self.fatgraph
            and other.boundary == self.boundary
            and other.target_core == self.target_core
            and other.boundary_lifts == self.boundary_lifts
            and other.f_vertices == self.f_vertices
            and other.checks == self.checks
        )

    def __repr__(self):
        flags = ",".join(name for name in PIECE_CHECKS if self.checks[name])
        return (
            f"SurfacePiece(V={self.fatgraph.num_vertices}, "
            f"E={self.fatgraph.num_edges}, boundary={len(self.boundary)}, "
            f"passed=[{flags}])"
        )


def _unique_lift_starts(frames, z):
    starts = []
    for i, f in enumerate(frames):
        rep = lifts_of_loop(f.word, z)
        if rep.count != 1:
            raise RigidityRequiredError(
                f"boundary component {i} ({f.word}) has {rep.count} lifts; "
                "f-vertex location needs a unique one"
            )
        starts.append(int(rep.lifts[0]))
    return starts


def _f_positions(y, z):
    frames = _frames(y)
    starts = _unique_lift_starts(frames, z)
    step = z.step_table()
    branch = z.degrees() >= 3
    out = []
    for i, f in enumerate(frames):
        v = starts[i]
        for j, x in enumerate(f.word.letters):
            if branch[v]:
                out.append((i, j))
            v = int(step[v, x])
    return out


def locate_f_vertices(piece):
    """Boundary positions whose unique lift sits at a branch vertex of Z.

    Position (i, j) is the corner of boundary component i just before
    word letter j; it is an f-vertex when the lift is at a vertex of
    the target core of valence >= 3.
    """
    return _f_positions(piece.fatgraph, piece.target_core)


def _is_f_folded(y, z):
    positions = _f_positions(y, z)
    frames = _frames(y)
    used = set()
    for i, j in positions:
        v = frames[i].vertices[j]
        if len(y.orders[v]) != 2 or v in used:
            return False
        used.add(v)
    return True


def is_f_folded(piece):
    """Every f-vertex at a 2-valent fatgraph vertex, all distinct."""
    return _is_f_folded(piece.fatgraph, piece.target_core)


def _component_subgraphs(z):
    """(component id, subgraph, local ids) per connected component."""
    labels = z.components()
    out = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        local = np.full(z.num_vertices, -1, np.int64)
        local[members] = np.arange(members.size)
        keep = labels[z.src] == c
        sub = CoreGraph(z.rank, members.size, local[z.src[keep]],
                        local[z.dst[keep]], z.label[keep])
        out.append((int(c), sub, local))
    return out


def _is_incompressible(y, z):
    if not is_folded(y):
        return False
    frames = _frames(y)
    starts = []
    for i, f in enumerate(frames):
        rep = lifts_of_loop(f.word, z)
        if rep.count == 0:
            raise NoLiftError(f"boundary component {i} ({f.word}) does not lift")
        if rep.count > 1:
            raise AmbiguousLiftError(
                f"boundary component {i} ({f.word}) lifts {rep.count} times"
            )
        starts.append(int(rep.lifts[0]))
    z_labels = z.components()
    for c, sub, local in _component_subgraphs(z):
        which = [i for i, s in enumerate(starts) if z_labels[s] == c]
        if not which:
            continue
        prod = fiber_product(y, sub)
        cored, kept = core(prod, keep_basepoint=False, return_kept=True)
        pos_of = {int(p): idx for idx, p in enumerate(kept)}
        comp_of = cored.components()
        comp_vs = {}
        for idx, lab in enumerate(comp_of):
            comp_vs.setdefault(int(lab), set()).add(int(kept[idx]))
        comp_es = {}
        for e in range(cored.num_edges):
            lab = int(comp_of[cored.src[e]])
            key = (int(kept[cored.src[e]]), int(kept[cored.dst[e]]),
                   int(cored.label[e]))
            comp_es.setdefault(lab, set()).add(key)
        Vz = sub.num_vertices
        zstep = sub.step_table()
        for i in which:
            f = frames[i]
            L = len(f.word)
            zv = int(local[starts[i]])
            first = f.vertices[0] * Vz + zv
            walk_vs = set()
            walk_es = set()
            for j in range(L):
                x = int(f.word.letters[j])
                p = f.vertices[j] * Vz + zv
                zv = int(zstep[zv, x])
                q = f.vertices[(j + 1) % L] * Vz + zv
                walk_vs.add(p)
                walk_es.add((p, q, x >> 1) if x % 2 == 0 else (q, p, x >> 1))
            idx0 = pos_of.get(first)
            if idx0 is None:
                return False
            lab = int(comp_of[idx0])
            vs = comp_vs[lab]
            es = comp_es.get(lab, set())
            if len(es) > len(vs):
                # first Betti number of the component exceeds 1
                return False
            if vs != walk_vs or es != walk_es:
                return False
    return True


def verify_incompressible(piece):
    """Cross-check boundary incompressibility through fiber products.

    For each component of the target core, the core of its fiber
    product with the fatgraph must consist, in every component meeting
    a boundary lift, of exactly that lift and nothing else.  Any loop
    of the surface conjugate into the edge subgroup is then boundary
    parallel; the check is independent of how the piece was found.
    """
    return _is_incompressible(piece.fatgraph, piece.target_core)


def make_surface_piece(y, z):
    """Run the verification ladder and assemble the SurfacePiece.

    Later checks are recorded False (not raised) once an earlier stage
    fails, so callers can inspect partially verified pieces; boundary
    tracing itself must succeed.
    """
    boundary = tuple(f.word for f in _frames(y))
    checks = dict.fromkeys(PIECE_CHECKS, False)
    checks["folded"] = is_folded(y)
    lifts = f_vertices = None
    if checks["folded"]:
        try:
            lifts = tuple(check_boundary_in_Z(y, z))
        except (NoLiftError, AmbiguousLiftError):
            lifts = None
        if lifts is not None:
            checks["boundary_in_Z"] = True
            f_vertices = tuple(_f_positions(y, z))
            checks["f_folded"] = _is_f_folded(y, z)
            checks["incompressible"] = _is_incompressible(y, z)
    return SurfacePiece(y, boundary, z, lifts, f_vertices, checks)


class ClosedSurfaceCertificate:
    """Verified pieces glued along a boundary pairing into a closed surface.

    families lists the groups of piece indices whose target cores were
    checked jointly for malnormality; edge_words, when present, name
    each boundary circle in the edge group, and matched circles must be
    mutually inverse there.  The checklist holds every verification
    outcome together with the parameters that produced the pieces, so a
    certificate file can be re-checked offline.
    """

    __slots__ = ("pieces", "pairing", "families", "reference", "genus",
                 "checklist", "edge_words", "edge_rank")

    def __init__(self, pieces, pairing, families, reference, genus,
                 checklist, edge_words=None, edge_rank=None):
        self.pieces = tuple(pieces)
        self.pairing = tuple(
            ((int(a), int(b)), (int(c), int(d))) for (a, b), (c, d) in pairing
        )
        self.families = tuple(tuple(int(i) for i in f) for f in families)
        self.reference = str(reference)
        self.genus = int(genus)
        self.checklist = checklist
        self.edge_words = None if edge_words is None else tuple(
            tuple(ws) for ws in edge_words)
        self.edge_rank = None if edge_rank is None else int(edge_rank)

    def to_json_dict(self):
        d = {
            "format": CERTIFICATE_FORMAT,
            "reference": self.reference,
            "genus": self.genus,
            "pieces": [p.to_json_dict() for p in self.pieces],
            "pairing": [[list(a), list(b)] for a, b in self.pairing],
            "families": [list(f) for f in self.families],
            "checklist": copy.deepcopy(self.checklist),
        }
        if self.edge_words is not None:
            d["edge_rank"] = self.edge_rank
            d["edge_words"] = [[str(w) for w in ws] for ws in self.edge_words]
        return d

    @classmethod
    def from_json_dict(cls, d):
        if d.get("format") != CERTIFICATE_FORMAT:
            raise FormatError(f"expected {CERTIFICATE_FORMAT}, got {d.get('format')!r}")
        try:
            pieces = [SurfacePiece.from_json_dict(p) for p in d["pieces"]]
            pairing = [((a, b), (c, d_)) for (a, b), (c, d_) in d["pairing"]]
            edge_words = None
            edge_rank = d.get("edge_rank")
            if d.get("edge_words") is not None:
                edge_words = [
                    [CyclicWord.parse(edge_rank, s) for s in ws]
                    for ws in d["edge_words"]
                ]
            return cls(pieces, pairing, d["families"], d["reference"],
                       d["genus"], d["checklist"], edge_words, edge_rank)
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed certificate record: {exc}") from exc

    def __repr__(self):
        return (
            f"ClosedSurfaceCertificate(pieces={len(self.pieces)}, "
            f"genus={self.genus})"
        )


def _normalize_pairing(pieces, pairing):
    slots = {(i, j) for i, p in enumerate(pieces) for j in range(len(p.boundary))}
    taken = set()
    norm = []
    for pair in pairing:
        a, b = ((int(pair[0][0]), int(pair[0][1])),
                (int(pair[1][0]), int(pair[1][1])))
        if a not in slots or b not in slots:
            raise UnmatchedBoundaryError(f"pairing names a missing boundary: {a}, {b}")
        if a == b:
            raise UnmatchedBoundaryError(f"boundary {a} matched with itself")
        if a in taken or b in taken:
            raise UnmatchedBoundaryError("a boundary is matched more than once")
        taken.update((a, b))
        norm.append((min(a, b), max(a, b)))
    left = slots - taken
    if left:
        raise UnmatchedBoundaryError(f"unmatched boundary components: {sorted(left)}")
    return sorted(norm)


def _default_families(pieces):
    seen = set()
    families = []
    for idx, p in enumerate(pieces):
        form = canonical_form(p.target_core)
        if form not in seen:
            seen.add(form)
            families.append([idx])
    return families


def glue(pieces, pairing, *, edge_words=None, edge_rank=None,
         malnormal_families=None, reference="", parameters=None):
    """Glue verified pieces along matched boundary circles.

    pairing matches boundary j of piece i with boundary l of piece k as
    ((i, j), (k, l)); every circle exactly once.  Matched circles must
    read mutually inverse words: the traced words themselves by
    default, or the edge-group names when edge_words (per piece, per
    boundary, over an edge alphabet of rank edge_rank) is given, which
    is what gluing across the two sides of a splitting needs.

    malnormal_families groups piece indices whose target cores must be
    jointly malnormal; the default takes each distinct core alone,
    which suits amalgams, while an HNN gluing must pass both images as
    one family.  The glued surface must have negative Euler
    characteristic, so its genus is at least 2.
    """
    pieces = list(pieces)
    if not pieces:
        raise UnmatchedBoundaryError("nothing to glue")
    norm = _normalize_pairing(pieces, pairing)

    for (i, j), (k, l) in norm:
        if edge_words is not None:
            wa, wb = edge_words[i][j], edge_words[k][l]
        else:
            wa, wb = pieces[i].boundary[j], pieces[k].boundary[l]
        if wa.rank != wb.rank or wa.inverse() != wb:
            raise WordMismatchError(
                f"boundaries {(i, j)} and {(k, l)} read {wa} and {wb}, "
                "which are not mutually inverse"
            )

    for idx, p in enumerate(pieces):
        for name in PIECE_CHECKS:
            if not p.checks.get(name, False):
                raise FailedCheckError(name, f"piece {idx} fails {name}")

    if malnormal_families is None:
        families = _default_families(pieces)
    else:
        families = [list(f) for f in malnormal_families]
    for fam in families:
        ok, witness = is_malnormal_family([pieces[i].target_core for i in fam])
        if not ok:
            raise FailedCheckError(
                "malnormal", f"edge-group family {fam} is not malnormal ({witness!r})"
            )

    chi = sum(euler_and_genus(p)[0] for p in pieces)
    if chi >= 0:
        raise FailedCheckError(
            "negative_euler", f"glued Euler characteristic is {chi}, need < 0"
        )
    assert chi % 2 == 0
    genus = (2 - chi) // 2

    checklist = {
        "pieces": [dict(p.checks) for p in pieces],
        "boundary_matching": True,
        "words_inverse": True,
        "malnormal": True,
        "negative_euler": True,
        "euler_characteristic": chi,
        "genus": genus,
        "parameters": copy.deepcopy(dict(parameters or {})),
    }
    return ClosedSurfaceCertificate(pieces, norm, families, reference, genus,
                                    checklist, edge_words, edge_rank)


def verify_piece(piece):
    """Recompute every check from the raw graphs.

    Returns (agrees, fresh) where fresh is the independently rebuilt
    piece and agrees means all recorded fields match it.
    """
    fresh = make_surface_piece(piece.fatgraph, piece.target_core)
    agrees = (
        fresh.checks == piece.checks
        and fresh.boundary == piece.boundary
        and fresh.boundary_lifts == piece.boundary_lifts
        and fresh.f_vertices == piece.f_vertices
    )
    return agrees, fresh


def verify_certificate(cert):
    """Re-derive a certificate's checklist from its pieces alone.

    Returns (valid, checklist): valid means every piece re-verifies to
    its recorded state and re-gluing reproduces the recorded checklist
    exactly.  On failure the returned dict names what broke.
    """
    from .errors import FoldsurfError

    try:
        fresh_pieces = []
        for idx, p in enumerate(cert.pieces):
            agrees, fresh = verify_piece(p)
            if not agrees:
                return False, {"failed": f"piece {idx} does not re-verify"}
            fresh_pieces.append(fresh)
        re_cert = glue(
            fresh_pieces,
            cert.pairing,
            edge_words=cert.edge_words,
            edge_rank=cert.edge_rank,
            malnormal_families=cert.families,
            reference=cert.reference,
            parameters=cert.checklist.get("parameters", {}),
        )
    except FoldsurfError as exc:
        return False, {"failed": str(exc)}
    ok = re_cert.checklist == cert.checklist and re_cert.genus == cert.genus
    if not ok:
        return False, {"failed": "recorded checklist does not match recomputation",
                       "recomputed": re_cert.checklist}
    return True, re_cert.checklist
