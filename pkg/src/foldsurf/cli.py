"""Command-line surface over the pipeline.

One subcommand per stage, shared file formats (json records produced
by the library's to_json_dict methods), reproducible seeding: a
randomized subcommand either gets --seed or draws one and records it
in its output file.  Output files carry no timestamps; each run
appends an invocation line to a sidecar log next to the output
instead, so repeated runs stay byte-identical.

Exit codes: 0 success or true verdict, 1 false verdict or a named
check failure, 2 malformed input or I/O trouble.
"""

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from .builder import BuilderConfig, build_by_enumeration, build_f_folded
from .errors import CertificationError, FoldsurfError, FormatError
from .fatgraph import (
    ClosedSurfaceCertificate,
    SurfacePiece,
    euler_and_genus,
    glue,
    verify_certificate,
    verify_piece,
)
from .model import (
    ExperimentGrid,
    GraphOfGroupsSpec,
    build_certificate,
    image_core,
    run_experiment,
    sample_splitting,
    small_cancellation_ratio,
)
from .stallings import (
    CoreGraph,
    core,
    fiber_product,
    fold,
    is_folded,
    is_fully_rigid,
    is_malnormal_family,
    lifts_of_loop,
)
from .words import (
    CyclicWord,
    PseudorandomParams,
    Word,
    cyclic_reduce,
    is_homologically_trivial,
    is_pseudorandom,
)

__all__ = ["dispatch", "main"]


def _fresh_seed():
    return int(np.random.SeedSequence().entropy % (1 << 64))


def _write_output(path, record, argv):
    """Write the machine-readable record and log the invocation."""
    path = Path(path)
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    path.write_text(text)
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(str(path) + ".log", "a") as log:
        log.write(f"{stamp} {' '.join(argv)}\n")
    return path


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _load_graph(path):
    """A core graph from its own record or from a `core` output record."""
    d = _load_json(path)
    if isinstance(d, dict) and "Z" in d and "format" in d.get("Z", {}):
        d = d["Z"]
    return CoreGraph.from_json_dict(d)


def _parse_words(rank, texts):
    return [Word.parse(rank, t) for t in texts]


def _cyclic_chain(rank, texts):
    out = []
    for t in texts:
        w, _ = cyclic_reduce(Word.parse(rank, t))
        if len(w) == 0:
            raise FormatError(f"word {t!r} is trivial after cyclic reduction")
        out.append(w)
    return out


def _builder_config(args, seed):
    kw = {"seed": seed}
    if getattr(args, "budget", None) is not None:
        kw["backtrack_limit"] = args.budget
    if getattr(args, "spacing", None) is not None:
        kw["min_spacing"] = args.spacing
    if getattr(args, "T", None) is not None:
        kw["pseudorandom"] = PseudorandomParams(args.T, args.epsilon or 0.5)
    return BuilderConfig(**kw)


def _cmd_sample(args, argv):
    seed = args.seed if args.seed is not None else _fresh_seed()
    spec = sample_splitting(args.kind, args.rank_k, args.rank_l, args.length, seed)
    out = _write_output(args.out or f"{args.kind}.spec.json",
                        spec.to_json_dict(), argv)
    print(f"sampled {args.kind} spec: k={args.rank_k} l={args.rank_l} "
          f"n={args.length} seed={seed} -> {out}")
    return 0


def _cmd_fold(args, argv):
    g = _load_graph(args.graph)
    folded = fold(g)
    out = _write_output(args.out or "folded.graph.json",
                        folded.to_json_dict(), argv)
    print(f"folded: V={folded.num_vertices} E={folded.num_edges} "
          f"(was V={g.num_vertices} E={g.num_edges}) -> {out}")
    return 0


def _cmd_core(args, argv):
    images = _parse_words(args.rank_l, args.words)
    y, z, overlap = image_core(images)
    record = {"Y": y.to_json_dict(), "Z": z.to_json_dict(), "overlap": overlap}
    out = _write_output(args.out or "core.json", record, argv)
    print(f"core: V={z.num_vertices} E={z.num_edges} rank={z.betti()} "
          f"overlap={overlap} -> {out}")
    return 0


def _cmd_fiber_product(args, argv):
    g1 = _load_graph(args.graphs[0])
    g2 = _load_graph(args.graphs[1])
    fp = fiber_product(g1, g2)
    cored = core(fp, keep_basepoint=False)
    record = {"product": fp.to_json_dict(), "core": cored.to_json_dict()}
    out = _write_output(args.out or "fiber_product.json", record, argv)
    print(f"fiber product: V={fp.num_vertices} E={fp.num_edges}, "
          f"core V={cored.num_vertices} E={cored.num_edges} -> {out}")
    return 0


def _cmd_malnormal(args, argv):
    zs = [_load_graph(p) for p in args.cores]
    ok, witness = is_malnormal_family(zs)
    record = {"malnormal": ok,
              "witness": None if witness is None else witness.to_json_dict()}
    out = _write_output(args.out or "malnormal.json", record, argv)
    if ok:
        print(f"malnormal family of {len(zs)} -> {out}")
        return 0
    print(f"NOT malnormal: witness pair ({witness.i}, {witness.j}) -> {out}")
    return 1


def _cmd_rigid(args, argv):
    z = _load_graph(args.core)
    w, _ = cyclic_reduce(Word.parse(z.rank, args.loop))
    rep = lifts_of_loop(w, z)
    rigid = is_fully_rigid(w, z)
    record = {"loop": str(w), "lifts": rep.count,
              "periodic_points": [int(v) for v in rep.periodic_points],
              "fully_rigid": rigid}
    out = _write_output(args.out or "rigid.json", record, argv)
    print(f"{rep.count} lift{'s' if rep.count != 1 else ''}; "
          f"{'fully rigid' if rigid else 'NOT fully rigid'} -> {out}")
    return 0 if rigid else 1


def _cmd_pseudorandom(args, argv):
    chain = _cyclic_chain(args.rank_l, args.words)
    params = PseudorandomParams(args.T if args.T is not None else 3,
                                args.epsilon if args.epsilon is not None else 0.5)
    ok, report = is_pseudorandom(chain, params)
    record = {"pseudorandom": ok, "T": params.T, "epsilon": params.epsilon,
              "worst_sigma": None if report is None else str(report.sigma),
              "worst_ratio": None if report is None else report.ratio}
    out = _write_output(args.out or "pseudorandom.json", record, argv)
    verdict = "pseudorandom" if ok else "NOT pseudorandom"
    print(f"{verdict} at T={params.T} epsilon={params.epsilon} -> {out}")
    return 0 if ok else 1


def _cmd_chain_check(args, argv):
    chain = _cyclic_chain(args.rank_l, args.words)
    ok = is_homologically_trivial(chain)
    record = {"homologically_trivial": ok, "chain": [str(w) for w in chain]}
    out = _write_output(args.out or "chain_check.json", record, argv)
    print(f"chain is {'': >0}{'homologically trivial' if ok else 'NOT homologically trivial'} -> {out}")
    return 0 if ok else 1


def _cmd_build_surface(args, argv):
    seed = args.seed if args.seed is not None else _fresh_seed()
    chain = _cyclic_chain(args.rank_l, args.words)
    z = _load_graph(args.target) if args.target else None
    config = _builder_config(args, seed)
    build = build_by_enumeration if args.oracle else build_f_folded
    try:
        piece = build(chain, z, config)
    except FoldsurfError as exc:
        print(f"no surface piece: {exc}")
        return 1
    record = piece.to_json_dict()
    record["seed"] = seed
    out = _write_output(args.out or "piece.json", record, argv)
    chi = euler_and_genus(piece)[0]
    print(f"piece: V={piece.fatgraph.num_vertices} E={piece.fatgraph.num_edges} "
          f"chi={chi} checks={'all-pass' if piece.passed() else 'FAIL'} "
          f"seed={seed} -> {out}")
    return 0 if piece.passed() else 1


def _cmd_verify(args, argv):
    d = _load_json(args.record)
    fmt = d.get("format", "")
    if "certificate" in fmt:
        cert = ClosedSurfaceCertificate.from_json_dict(d)
        ok, checklist = verify_certificate(cert)
        record = {"valid": ok, "checklist": checklist}
        kind = "certificate"
    elif "piece" in fmt:
        piece = SurfacePiece.from_json_dict(d)
        ok, fresh = verify_piece(piece)
        record = {"valid": ok, "checks": dict(fresh.checks)}
        kind = "piece"
    else:
        raise FormatError(f"unrecognized record format {fmt!r}")
    out = _write_output(args.out or "verify.json", record, argv)
    print(f"{kind} {'re-verifies' if ok else 'FAILS re-verification'} -> {out}")
    return 0 if ok else 1


def _cmd_glue(args, argv):
    pieces = [SurfacePiece.from_json_dict(_load_json(p)) for p in args.pieces]
    # match boundary circles into mutually inverse pairs across all pieces
    slots = [(i, j) for i, p in enumerate(pieces) for j in range(len(p.boundary))]
    taken = set()
    pairing = []
    for i, j in slots:
        if (i, j) in taken:
            continue
        want = pieces[i].boundary[j].inverse()
        match = next(((k, l) for k, l in slots
                      if (k, l) != (i, j) and (k, l) not in taken
                      and pieces[k].boundary[l] == want), None)
        if match is None:
            print(f"no partner for boundary {(i, j)}")
            return 1
        taken.update({(i, j), match})
        pairing.append(((i, j), match))
    try:
        cert = glue(pieces, pairing)
    except FoldsurfError as exc:
        print(f"gluing failed: {exc}")
        return 1
    out = _write_output(args.out or "glued.cert.json", cert.to_json_dict(), argv)
    print(f"glued {len(pieces)} pieces: genus={cert.genus} -> {out}")
    return 0


def _cmd_certify(args, argv):
    seed = args.seed if args.seed is not None else _fresh_seed()
    spec = GraphOfGroupsSpec.from_json_dict(_load_json(args.spec))
    chain = None
    if args.chain:
        chain = _parse_words(spec.k, args.chain)
    config = _builder_config(args, seed)
    try:
        cert = build_certificate(spec, chain, config)
    except CertificationError as exc:
        print(f"certification failed at stage {exc.stage}: {exc}")
        return 1
    record = cert.to_json_dict()
    record["seed"] = seed
    out = _write_output(args.out or "certificate.json", record, argv)
    chi = cert.checklist["euler_characteristic"]
    print(f"certificate: {spec.kind} genus={cert.genus} chi={chi} "
          f"seed={seed} -> {out}")
    return 0


def _cmd_experiment(args, argv):
    seed = args.seed if args.seed is not None else _fresh_seed()
    n_values = [int(s) for s in args.length.split(",")]
    grid = ExperimentGrid(n_values, args.trials, k=args.rank_k, l=args.rank_l,
                          master_seed=seed, kind=args.kind)
    table = run_experiment(grid, jobs=args.jobs)
    out = Path(args.out or "experiment.csv")
    out.write_text(table.to_csv())
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(str(out) + ".log", "a") as log:
        log.write(f"{stamp} {' '.join(argv)} seed={seed}\n")
    rates = table.rates("malnormal")
    shown = " ".join(f"{n}:{r:.2f}" for n, r in rates.items())
    print(f"experiment: {len(table)} trials, malnormal rates {{{shown}}} "
          f"seed={seed} -> {out}")
    return 0


def _add_common(p, *names):
    if "seed" in names:
        p.add_argument("--seed", type=int, default=None, metavar="u64")
    if "rank_l" in names:
        p.add_argument("--rank-l", dest="rank_l", type=int, default=2)
    if "rank_k" in names:
        p.add_argument("--rank-k", dest="rank_k", type=int, default=1)
    if "length" in names:
        p.add_argument("--length", default="100")
    if "T" in names:
        p.add_argument("--T", dest="T", type=int, default=None)
    if "epsilon" in names:
        p.add_argument("--epsilon", type=float, default=None)
    if "spacing" in names:
        p.add_argument("--spacing", type=int, default=None)
    if "budget" in names:
        p.add_argument("--budget", type=int, default=None)
    if "jobs" in names:
        p.add_argument("--jobs", type=int, default=1)
    if "out" in names:
        p.add_argument("--out", default=None, metavar="path")


def _build_parser():
    top = argparse.ArgumentParser(
        prog="foldsurf",
        description="surface-subgroup certificates for one-edge graphs of free groups",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a random splitting spec")
    p.add_argument("kind", nargs="?", default="amalgam", choices=("amalgam", "hnn"))
    _add_common(p, "seed", "rank_l", "rank_k", "out")
    p.add_argument("--length", type=int, default=100)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fold", help="fold a graph file")
    p.add_argument("graph")
    _add_common(p, "out")
    p.set_defaults(func=_cmd_fold)

    p = sub.add_parser("core", help="folded core of the subgroup the words generate")
    p.add_argument("words", nargs="+")
    _add_common(p, "rank_l", "out")
    p.set_defaults(func=_cmd_core)

    p = sub.add_parser("fiber-product", help="fiber product of two folded graphs")
    p.add_argument("graphs", nargs=2)
    _add_common(p, "out")
    p.set_defaults(func=_cmd_fiber_product)

    p = sub.add_parser("malnormal", help="malnormality of a family of cores")
    p.add_argument("--cores", nargs="+", required=True)
    _add_common(p, "out")
    p.set_defaults(func=_cmd_malnormal)

    p = sub.add_parser("rigid", help="lifts and rigidity of a loop in a core")
    p.add_argument("--loop", required=True)
    p.add_argument("--core", required=True)
    _add_common(p, "out")
    p.set_defaults(func=_cmd_rigid)

    p = sub.add_parser("pseudorandom", help="(T, epsilon) census test of a chain")
    p.add_argument("words", nargs="+")
    _add_common(p, "rank_l", "T", "epsilon", "out")
    p.set_defaults(func=_cmd_pseudorandom)

    p = sub.add_parser("chain-check", help="homological triviality of a chain")
    p.add_argument("words", nargs="+")
    _add_common(p, "rank_l", "out")
    p.set_defaults(func=_cmd_chain_check)

    p = sub.add_parser("build-surface", help="build a verified piece over a chain")
    p.add_argument("words", nargs="+")
    p.add_argument("--target", default=None, metavar="path")
    p.add_argument("--oracle", action="store_true",
                   help="exhaustive enumeration instead of search")
    _add_common(p, "seed", "rank_l", "spacing", "budget", "T", "epsilon", "out")
    p.set_defaults(func=_cmd_build_surface)

    p = sub.add_parser("verify", help="re-check a piece or certificate file")
    p.add_argument("record")
    _add_common(p, "out")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("glue", help="glue verified pieces along inverse boundaries")
    p.add_argument("pieces", nargs="+")
    _add_common(p, "out")
    p.set_defaults(func=_cmd_glue)

    p = sub.add_parser("certify", help="end-to-end certificate for a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--chain", nargs="+", default=None,
                   help="edge-group chain words (default x1 and its inverse)")
    _add_common(p, "seed", "spacing", "budget", "T", "epsilon", "out")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("experiment", help="Monte Carlo grid to CSV")
    p.add_argument("kind", nargs="?", default="amalgam", choices=("amalgam", "hnn"))
    p.add_argument("--trials", type=int, default=100)
    _add_common(p, "seed", "rank_l", "rank_k", "length", "jobs", "out")
    p.set_defaults(func=_cmd_experiment)

    return top


def dispatch(argv):
    """Run one invocation; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args, ["foldsurf"] + list(argv))
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FoldsurfError as exc:
        print(f"check failed: {exc}")
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))
