"""Random homomorphisms, splitting data, and the end-to-end pipeline.

A splitting is described by the generator images of the edge group in
the vertex group(s).  The pipeline samples those images, runs the
graph-level sanity checks (rank, malnormality, rigidity), builds a
verified surface piece on each side of the splitting, and glues the
pieces into a closed-surface certificate.  A Monte Carlo harness
repeats the pipeline over a grid of word lengths.
"""

import time

import numpy as np

from .builder import BuilderConfig, build_f_folded, mark_branch_positions
from .errors import (
    FormatError,
    MalnormalityFailedError,
    NotHomologicallyTrivialError,
    RankDropError,
    RigidityFailedError,
    SearchExhaustedError,
    TrivialGeneratorError,
)
from .fatgraph import euler_and_genus, glue
from .stallings import core, fold, is_fully_rigid, is_malnormal_family, rose_of_words
from .words import (
    CyclicWord,
    PseudorandomParams,
    Word,
    cyclic_reduce,
    is_homologically_trivial,
    is_pseudorandom,
    sample_reduced_word,
)

__all__ = [
    "RandomHomSpec",
    "GraphOfGroupsSpec",
    "ExperimentGrid",
    "ExperimentTable",
    "sample_homomorphism",
    "image_core",
    "small_cancellation_ratio",
    "build_certificate",
    "run_experiment",
    "EXPERIMENT_COLUMNS",
]

SPEC_FORMAT = "foldsurf-spec-v1"

KINDS = ("amalgam", "hnn")


class RandomHomSpec:
    """Parameters of one random homomorphism F_k -> F_l.

    Each of the k generators goes to an independent uniformly random
    reduced word of length n; the draw is a pure function of the seed.
    """

    __slots__ = ("k", "l", "n", "seed")

    def __init__(self, k, l, n, seed=0):
        k = int(k)
        l = int(l)
        n = int(n)
        seed = int(seed)
        if k < 1:
            raise ValueError("edge-group rank k must be at least 1")
        if l < 2:
            raise ValueError("vertex-group rank l must be at least 2")
        if n < 1:
            raise ValueError("word length n must be at least 1")
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.k = k
        self.l = l
        self.n = n
        self.seed = seed

    def __eq__(self, other):
        return (
            isinstance(other, RandomHomSpec)
            and (other.k, other.l, other.n, other.seed)
            == (self.k, self.l, self.n, self.seed)
        )

    def __hash__(self):
        return hash(("RandomHomSpec", self.k, self.l, self.n, self.seed))

    def __repr__(self):
        return f"RandomHomSpec(k={self.k}, l={self.l}, n={self.n}, seed={self.seed})"


def sample_homomorphism(spec):
    """The generator images of the random homomorphism, as k words."""
    if not isinstance(spec, RandomHomSpec):
        raise TypeError("expected a RandomHomSpec")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    return [sample_reduced_word(spec.l, spec.n, rng) for _ in range(spec.k)]


class GraphOfGroupsSpec:
    """One-edge splitting data: amalgam or HNN extension.

    phi1 and phi2 list the images of the k edge-group generators under
    the two inclusions.  For an amalgam the sides may use different
    vertex alphabets; an HNN extension has a single vertex group, so
    both sides must share one rank.  provenance records how the images
    arose (sampling seeds or "explicit").
    """

    __slots__ = ("kind", "phi1", "phi2", "provenance")

    def __init__(self, kind, phi1, phi2, provenance="explicit"):
        kind = str(kind).lower()
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        phi1 = tuple(phi1)
        phi2 = tuple(phi2)
        if not phi1 or len(phi1) != len(phi2):
            raise ValueError("phi1 and phi2 must list the same positive "
                             "number of generator images")
        for side in (phi1, phi2):
            for w in side:
                if not isinstance(w, Word):
                    raise TypeError("generator images must be words")
                if len(w) == 0:
                    raise TrivialGeneratorError("generator image is trivial")
            if any(w.rank != side[0].rank for w in side):
                raise ValueError("images on one side must share an alphabet")
        if kind == "hnn" and phi1[0].rank != phi2[0].rank:
            raise ValueError("an HNN extension has one vertex group; "
                             "both sides must share its alphabet")
        self.kind = kind
        self.phi1 = phi1
        self.phi2 = phi2
        self.provenance = provenance

    @property
    def k(self):
        return len(self.phi1)

    def ranks(self):
        return self.phi1[0].rank, self.phi2[0].rank

    def to_json_dict(self):
        return {
            "format": SPEC_FORMAT,
            "kind": self.kind,
            "rank1": self.phi1[0].rank,
            "rank2": self.phi2[0].rank,
            "phi1": [str(w) for w in self.phi1],
            "phi2": [str(w) for w in self.phi2],
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_dict(cls, d):
        if d.get("format") != SPEC_FORMAT:
            raise FormatError(f"expected {SPEC_FORMAT}, got {d.get('format')!r}")
        try:
            phi1 = [Word.parse(d["rank1"], s) for s in d["phi1"]]
            phi2 = [Word.parse(d["rank2"], s) for s in d["phi2"]]
            return cls(d["kind"], phi1, phi2, d.get("provenance", "explicit"))
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed spec record: {exc}") from exc

    def __eq__(self, other):
        return (
            isinstance(other, GraphOfGroupsSpec)
            and other.kind == self.kind
            and other.phi1 == self.phi1
            and other.phi2 == self.phi2
        )

    def __repr__(self):
        return (
            f"GraphOfGroupsSpec({self.kind}, k={self.k}, "
            f"ranks={self.ranks()})"
        )


def sample_splitting(kind, k, l, n, seed):
    """Sample both sides of a splitting, seeds derived from one master."""
    seeds = np.random.SeedSequence(int(seed)).generate_state(2)
    phi1 = sample_homomorphism(RandomHomSpec(k, l, n, int(seeds[0])))
    phi2 = sample_homomorphism(RandomHomSpec(k, l, n, int(seeds[1])))
    provenance = {"seed": int(seed), "k": int(k), "l": int(l), "n": int(n)}
    return GraphOfGroupsSpec(kind, phi1, phi2, provenance)


def image_core(images):
    """Folded core of the subgroup the images generate.

    Returns (Y, Z, overlap): Y keeps the basepoint of the rose, Z is
    the basepoint-free core, and overlap is the deepest identification
    of letters near the basepoint, measured as the longest common
    prefix over all pairs of distinct directions around the wedge.
    Folding must be a homotopy equivalence: if the subgroup rank falls
    below the number of images, the sample is degenerate.
    """
    images = list(images)
    if not images:
        raise ValueError("need at least one image")
    for w in images:
        if not isinstance(w, Word) or len(w) == 0:
            raise TrivialGeneratorError("images must be nontrivial words")
    folded = fold(rose_of_words(images))
    y = core(folded, keep_basepoint=True)
    z = core(folded, keep_basepoint=False)
    if y.betti() != len(images):
        raise RankDropError(
            f"images generate rank {y.betti()}, expected {len(images)}"
        )
    directions = []
    for w in images:
        directions.append(w.letters)
        directions.append(w.inverse().letters)
    overlap = 0
    for i in range(len(directions)):
        for j in range(i + 1, len(directions)):
            a, b = directions[i], directions[j]
            m = min(a.size, b.size)
            neq = np.flatnonzero(a[:m] != b[:m])
            overlap = max(overlap, int(neq[0]) if neq.size else m)
    return y, z, overlap


def _diagonal_runs(eq):
    """Longest run of True along any diagonal of a boolean matrix."""
    best = 0
    rows, cols = eq.shape
    for off in range(-rows + 1, cols):
        d = np.diagonal(eq, offset=off)
        if not d.any():
            continue
        # run lengths via cumulative reset at each False
        idx = np.arange(d.size)
        start = np.maximum.accumulate(np.where(~d, idx, -1))
        best = max(best, int((idx - start)[d].max()))
    return best


def _longest_common_subword(a, b):
    return _diagonal_runs(np.equal.outer(a, b))


def _longest_self_overlap(a):
    """Longest subword occurring at two distinct positions."""
    eq = np.equal.outer(a, a)
    np.fill_diagonal(eq, False)
    return _diagonal_runs(np.triu(eq))


def small_cancellation_ratio(spec):
    """Longest piece among the generator images, relative to their length.

    Members are all images of both sides and their inverses; a piece is
    a common subword of two distinct members or a subword occurring at
    two distinct positions of one member.  The ratio uses the longest
    image length as denominator, so identical members give exactly 1.
    """
    if not isinstance(spec, GraphOfGroupsSpec):
        raise TypeError("expected a GraphOfGroupsSpec")
    members = []
    for w in spec.phi1 + spec.phi2:
        members.append(w.letters)
        members.append(w.inverse().letters)
    n = max(m.size for m in members)
    longest = 0
    for i in range(len(members)):
        longest = max(longest, _longest_self_overlap(members[i]))
        for j in range(i + 1, len(members)):
            longest = max(longest, _longest_common_subword(members[i], members[j]))
    return longest / n


def _default_chain(k):
    return [Word(k, [0], _checked=True), Word(k, [1], _checked=True)]


def _push_through(images, word):
    """Image of an edge-group word under the substitution x_i -> images[i]."""
    out = Word(images[0].rank, [], _checked=True)
    for x in word.letters.tolist():
        g, bar = divmod(int(x), 2)
        out = out * (images[g].inverse() if bar else images[g])
    return out


def _match_boundary(piece, wanted):
    """Index of each wanted cyclic word in the piece boundary, no reuse."""
    taken = [False] * len(piece.boundary)
    idx = []
    for w in wanted:
        for i, b in enumerate(piece.boundary):
            if not taken[i] and b == w:
                taken[i] = True
                idx.append(i)
                break
        else:
            raise SearchExhaustedError(f"boundary lost a chain component {w}")
    return idx


def _build_side(side, image_words, z, config, want_negative):
    """One side's piece: try for negative Euler, settle for any verified piece."""
    chain = mark_branch_positions(image_words, z, min_spacing=config.min_spacing)
    seeds = np.random.SeedSequence(config.seed, spawn_key=(side,)).generate_state(2)
    attempts = []
    if want_negative:
        attempts.append((True, int(seeds[0])))
    attempts.append((False, int(seeds[1])))
    last = None
    for negative, seed in attempts:
        cfg = BuilderConfig(
            restart_budget=config.restart_budget,
            backtrack_limit=config.backtrack_limit,
            seed=seed,
            min_spacing=chain.min_spacing,
            pseudorandom=None,
            require_negative_euler=negative,
        )
        try:
            return build_f_folded(chain, z, cfg)
        except SearchExhaustedError as exc:
            last = exc
    raise last


def build_certificate(spec, chain_in_G=None, config=None):
    """Run every check, build both sides, and glue to a closed surface.

    The chain lives in the edge group; its two side images (the second
    side takes inverses, so matched circles read mutually inverse
    words) are checked for homological triviality, the image cores for
    malnormality (per side for an amalgam, jointly for an HNN
    extension), every image circle for full rigidity, and the chain for
    pseudorandomness (reported, not gated).  Each side then gets a
    verified f-folded piece, preferring a negative-Euler piece but
    accepting an annulus when only one side manages; the glued surface
    itself must end up with negative Euler characteristic.
    """
    if not isinstance(spec, GraphOfGroupsSpec):
        raise TypeError("expected a GraphOfGroupsSpec")
    config = config or BuilderConfig()
    k = spec.k
    if chain_in_G is None:
        chain_in_G = _default_chain(k)
    chain_in_G = list(chain_in_G)
    for g in chain_in_G:
        if not isinstance(g, Word) or g.rank != k:
            raise TypeError("chain words must live in the rank-k edge group")
        if len(g) == 0:
            raise TrivialGeneratorError("chain word is trivial")

    sides = []
    reports = []
    for j, images in enumerate((spec.phi1, spec.phi2)):
        y, z, overlap = image_core(images)
        side_chain = chain_in_G if j == 0 else [g.inverse() for g in chain_in_G]
        image_words = []
        for g in side_chain:
            w = _push_through(images, g)
            if len(w) == 0:
                raise NotHomologicallyTrivialError(
                    f"chain word {g} maps to the identity on side {j + 1}"
                )
            image_words.append(cyclic_reduce(w)[0])
        if not is_homologically_trivial(image_words):
            raise NotHomologicallyTrivialError(
                f"image chain on side {j + 1} is not homologically trivial"
            )
        params = config.pseudorandom or PseudorandomParams(3, 0.5)
        ok, report = is_pseudorandom(image_words, params)
        reports.append({
            "side": j + 1,
            "overlap": int(overlap),
            "pseudorandom_pass": bool(ok),
            "pseudorandom_T": params.T,
            "pseudorandom_epsilon": params.epsilon,
            "worst_sigma": None if report is None else str(report.sigma),
            "worst_ratio": None if report is None else float(report.ratio),
        })
        sides.append((z, image_words))

    if spec.kind == "amalgam":
        families = [[0], [1]]
        for j, (z, _) in enumerate(sides):
            ok, witness = is_malnormal_family([z])
            if not ok:
                raise MalnormalityFailedError(
                    f"side {j + 1} image is not malnormal", witness=witness
                )
    else:
        families = [[0, 1]]
        ok, witness = is_malnormal_family([z for z, _ in sides])
        if not ok:
            raise MalnormalityFailedError(
                "the two images are not jointly malnormal", witness=witness
            )

    for j, (z, image_words) in enumerate(sides):
        for w in image_words:
            if not is_fully_rigid(w, z):
                raise RigidityFailedError(
                    f"image circle {w} is not fully rigid on side {j + 1}"
                )

    piece1 = _build_side(1, sides[0][1], sides[0][0], config, want_negative=True)
    chi1 = euler_and_genus(piece1)[0]
    piece2 = _build_side(2, sides[1][1], sides[1][0], config,
                         want_negative=chi1 >= 0)
    chi2 = euler_and_genus(piece2)[0]
    if chi1 + chi2 >= 0:
        raise SearchExhaustedError(
            f"no negative-Euler side within budget (chi = {chi1} + {chi2}); "
            "gluing needs a hyperbolic total"
        )

    idx1 = _match_boundary(piece1, sides[0][1])
    idx2 = _match_boundary(piece2, sides[1][1])
    cyc = [cyclic_reduce(g)[0] for g in chain_in_G]
    edge_words = [[None] * len(piece1.boundary), [None] * len(piece2.boundary)]
    for i, g in enumerate(cyc):
        edge_words[0][idx1[i]] = g
        edge_words[1][idx2[i]] = g.inverse()
    pairing = [((0, idx1[i]), (1, idx2[i])) for i in range(len(cyc))]

    parameters = {
        "kind": spec.kind,
        "k": k,
        "ranks": list(spec.ranks()),
        "chain": [str(g) for g in chain_in_G],
        "provenance": spec.provenance,
        "builder_seed": config.seed,
        "restart_budget": config.restart_budget,
        "sides": reports,
    }
    return glue(
        [piece1, piece2],
        pairing,
        edge_words=edge_words,
        edge_rank=k,
        malnormal_families=families,
        reference=spec.kind,
        parameters=parameters,
    )


EXPERIMENT_COLUMNS = (
    "n", "trial", "malnormal", "rigid", "overlap_max", "pseudorandom_pass",
    "lambda_hat", "builder_success", "chi", "genus", "millis",
)


class ExperimentGrid:
    """A Monte Carlo sweep: trials per word length, one master seed."""

    __slots__ = ("n_values", "trials", "k", "l", "master_seed", "statistics",
                 "kind", "config")

    def __init__(self, n_values, trials, k=1, l=2, master_seed=0,
                 statistics=None, kind="amalgam", config=None):
        self.n_values = tuple(int(n) for n in n_values)
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be positive integers")
        self.trials = int(trials)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        self.k = int(k)
        self.l = int(l)
        if self.k < 1 or self.l < 2:
            raise ValueError("need k >= 1 and l >= 2")
        self.master_seed = int(master_seed)
        wanted = EXPERIMENT_COLUMNS[2:] if statistics is None else tuple(statistics)
        for s in wanted:
            if s not in EXPERIMENT_COLUMNS[2:]:
                raise ValueError(f"unknown statistic {s!r}")
        self.statistics = wanted
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.kind = kind
        self.config = config

    def __repr__(self):
        return (
            f"ExperimentGrid(n={list(self.n_values)}, trials={self.trials}, "
            f"k={self.k}, l={self.l}, seed={self.master_seed})"
        )


class ExperimentTable:
    """Per-trial rows of a grid run, with fixed CSV column order."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = list(rows)

    def to_csv(self):
        lines = [", ".join(EXPERIMENT_COLUMNS)]
        for row in self.rows:
            lines.append(", ".join(str(row.get(c, "")) for c in EXPERIMENT_COLUMNS))
        return "\n".join(lines) + "\n"

    def rates(self, column):
        """Mean of a 0/1 column over the trials where it was measured."""
        out = {}
        for n in sorted({r["n"] for r in self.rows}):
            vals = [r[column] for r in self.rows
                    if r["n"] == n and r.get(column, "") != ""]
            out[n] = sum(vals) / len(vals) if vals else 0.0
        return out

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def _trial_seed(master_seed, n, trial):
    ss = np.random.SeedSequence(master_seed, spawn_key=(int(n), int(trial)))
    return int(ss.generate_state(1)[0])


def run_trial(grid, n, trial):
    """One trial of the grid: sample a splitting and run the pipeline.

    Stages that fail leave the later columns empty; the trial is
    counted either way, so rates stay faithful to the model.
    """
    t0 = time.perf_counter()
    row = {c: "" for c in EXPERIMENT_COLUMNS}
    row["n"] = int(n)
    row["trial"] = int(trial)
    stats = grid.statistics
    spec = sample_splitting(grid.kind, grid.k, grid.l, n,
                            _trial_seed(grid.master_seed, n, trial))
    config = grid.config or BuilderConfig(
        restart_budget=4, seed=_trial_seed(grid.master_seed, n, trial) ^ 1)

    if "lambda_hat" in stats:
        row["lambda_hat"] = round(small_cancellation_ratio(spec), 6)

    try:
        cores = []
        overlap = 0
        for images in (spec.phi1, spec.phi2):
            _, z, ov = image_core(images)
            cores.append(z)
            overlap = max(overlap, ov)
        if "overlap_max" in stats:
            row["overlap_max"] = overlap

        if "malnormal" in stats:
            if spec.kind == "amalgam":
                ok = all(is_malnormal_family([z])[0] for z in cores)
            else:
                ok = is_malnormal_family(cores)[0]
            row["malnormal"] = int(ok)
            if not ok:
                row["millis"] = int(1000 * (time.perf_counter() - t0))
                return row

        image_words = []
        for j, images in enumerate((spec.phi1, spec.phi2)):
            side = []
            for g in (_default_chain(grid.k) if j == 0
                      else [w.inverse() for w in _default_chain(grid.k)]):
                side.append(cyclic_reduce(_push_through(images, g))[0])
            image_words.append(side)

        if "rigid" in stats:
            ok = all(
                is_fully_rigid(w, z)
                for z, side in zip(cores, image_words)
                for w in side
            )
            row["rigid"] = int(ok)
            if not ok:
                row["millis"] = int(1000 * (time.perf_counter() - t0))
                return row

        if "pseudorandom_pass" in stats:
            params = PseudorandomParams(3, 0.5)
            row["pseudorandom_pass"] = int(all(
                is_pseudorandom(side, params)[0] for side in image_words
            ))

        if "builder_success" in stats:
            pieces = []
            try:
                for j, (z, side) in enumerate(zip(cores, image_words)):
                    pieces.append(_build_side(j + 1, side, z, config,
                                              want_negative=False))
                row["builder_success"] = 1
            except (SearchExhaustedError, ValueError):
                row["builder_success"] = 0
            if pieces and len(pieces) == 2:
                chi = sum(euler_and_genus(p)[0] for p in pieces)
                if "chi" in stats:
                    row["chi"] = chi
                if "genus" in stats:
                    row["genus"] = (2 - chi) // 2
    except RankDropError:
        pass
    row["millis"] = int(1000 * (time.perf_counter() - t0))
    return row


def run_experiment(grid, jobs=1):
    """All trials of the grid, deterministic per (master seed, n, trial)."""
    if not isinstance(grid, ExperimentGrid):
        raise TypeError("expected an ExperimentGrid")
    jobs = int(jobs)
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    tasks = [(n, t) for n in grid.n_values for t in range(grid.trials)]
    if jobs == 1:
        rows = [run_trial(grid, n, t) for n, t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_trial_args, ((grid, n, t) for n, t in tasks)))
    return ExperimentTable(rows)


def _run_trial_args(args):
    return run_trial(*args)
