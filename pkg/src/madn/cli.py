"""``madn`` command line: one subcommand per analysis step plus ``run`` for whole pipelines."""
from __future__ import annotations

import argparse
import os
import sys
from datetime import date
from pathlib import Path

from madn import __version__
from madn.community import DEFAULT_TELEPORT, DEFAULT_TRIALS, detect_communities
from madn.dyadic import DEFAULT_ALPHA, extract_backbone, pairwise_breakdown, taxonomy_census, weight_joint_histogram
from madn.embed import EmbeddingMatrix, WalkConfig, analogy, embed_network
from madn.errors import MadnError
from madn.ingest import BuildConfig, read_records, read_registry, serialize_records, serialize_registry, synth_generate
from madn.motifs import DEFAULT_SAMPLES, DEFAULT_SWAPS_PER_LINK, colored_motif_zscores, motif_zscores
from madn import pipeline
from madn.netbuild import assemble_multiplex, build_layer, format_for_path, read_network, serialize_network
from madn.topology import summary


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _day(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _window(args):
    if args.date_from is None and args.date_to is None:
        return None
    return (args.date_from or date.min, args.date_to or date.max)


def _load_records(args):
    registry = read_registry(args.registry)
    return read_records(args.records, registry=registry), registry


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_ingest(args):
    records, _ = _load_records(args)
    BuildConfig(k=args.k, epsilon=args.epsilon, window=_window(args))
    _emit(pipeline.selections_csv(records, args.k, args.epsilon, _window(args)), args.out)


def cmd_build(args):
    records, registry = _load_records(args)
    net = build_layer(records, registry, BuildConfig(k=args.k, epsilon=args.epsilon, window=_window(args), layer=args.layer))
    fmt = args.format or (format_for_path(args.out) if args.out else "edge-list")
    kw = {"graph_attrs": {"layer": args.layer, "k": args.k, "epsilon": args.epsilon}} if fmt == "graphml" else {}
    _emit(serialize_network(net, fmt, **kw), args.out)


def cmd_stats(args):
    net = read_network(args.network)
    flat = summary(net).to_dict()
    if args.fit_kmin is not None:
        flat["in_degree_fits"] = pipeline.degree_fits(net, args.fit_kmin)
    if args.json:
        _emit(pipeline.to_json(flat), args.out)
        return
    lines = []
    for k, v in flat.items():
        if isinstance(v, dict):
            lines += [f"{k}.{family}: {fit}" for family, fit in v.items()]
        else:
            lines.append(f"{k}: {v}")
    _emit("".join(line + "\n" for line in lines), args.out)


def cmd_centrality(args):
    net = read_network(args.network)
    _emit(pipeline.ranking_csv(pipeline.centrality_scores(net, args.metric, args.damping), args.top), args.out)


def cmd_dyad_histogram(args):
    hist = weight_joint_histogram(read_network(args.attention), read_network(args.disregard), args.bin)
    _emit(pipeline.histogram_csv(hist), args.out)


def cmd_pairwise(args):
    counts = pairwise_breakdown(read_network(args.attention), read_network(args.disregard))
    _emit(pipeline.to_csv(("category", "count"), counts.items()), args.out)


def cmd_backbone(args):
    net = read_network(args.network)
    bb = extract_backbone(net, args.alpha)
    text = serialize_network(bb.network(net), "graphml", graph_attrs={"alpha_threshold": args.alpha},
                             link_attrs=bb.link_attrs())
    _emit(text, args.out)


def cmd_taxonomy(args):
    census = taxonomy_census(extract_backbone(read_network(args.network), args.alpha), args.layer)
    if args.profiles:
        _emit(pipeline.taxonomy_profiles_csv(census), args.profiles)
    if args.csv:
        _emit(pipeline.taxonomy_csv(census, args.examples), args.out)
    else:
        payload = {"layer": census.layer, "alpha_threshold": census.alpha_threshold, "total": census.total,
                   "counts": {str(k): v for k, v in census.counts.items()}}
        _emit(pipeline.to_json(payload), args.out)


def cmd_motifs(args):
    prof = motif_zscores(read_network(args.network), args.samples, args.seed, args.swaps_per_link)
    _emit(_profile_text(prof, args.json), args.out)


def cmd_colored_motifs(args):
    mux = assemble_multiplex(read_network(args.attention), read_network(args.disregard))
    prof = colored_motif_zscores(mux, args.samples, args.seed, args.swaps_per_link)
    _emit(_profile_text(prof, args.json), args.out)


def _profile_text(prof, as_json: bool) -> str:
    if as_json:
        return pipeline.to_json(prof.to_dict())
    rows = ((s.class_id, s.signature, s.observed, s.null_mean, s.null_std, s.z, s.p, s.significant) for s in prof.stats)
    return pipeline.to_csv(("id", "signature", "observed", "null_mean", "null_std", "z", "p", "significant"), rows)


def cmd_communities(args):
    net = read_network(args.network)
    if not args.full:
        net = extract_backbone(net, args.alpha).network(net)
    part = detect_communities(net, args.tau, args.seed, args.trials)
    text = pipeline.to_csv(("country", "module"), sorted(part.assignment.items()))
    if args.csv:
        _emit(text, args.out)
    else:
        _emit("".join(f"{m}\t{' '.join(nodes)}\n" for m, nodes in enumerate(part.modules())), args.out)
    sidecar = args.sidecar or (args.out + ".json" if args.out else None)
    if sidecar:
        _emit(pipeline.to_json({"input": "full network" if args.full else "disparity backbone",
                                "alpha_threshold": None if args.full else args.alpha,
                                "codelength_bits": part.codelength, "n_modules": part.n_modules, **part.params}),
              sidecar)


def cmd_embed(args):
    wc = WalkConfig(p=args.p, q=args.q, walks_per_node=args.walks, walk_length=args.length, seed=args.seed,
                    directed=not args.undirected)
    emb = embed_network(read_network(args.network), wc, dim=args.dim, window=args.window, negatives=args.negatives,
                        epochs=args.epochs, learning_rate=args.lr, seed=args.seed)
    _emit(emb.to_tsv(), args.out)
    if args.out:
        _emit(pipeline.to_json(pipeline.embedding_metadata(emb)), args.out + ".json")


def cmd_analogy(args):
    emb = EmbeddingMatrix.from_tsv(Path(args.embedding).read_text(encoding="utf-8"))
    rows = [(i, node, sim) for i, (node, sim) in enumerate(analogy(emb, args.a, args.b, args.c, args.top), start=1)]
    _emit(pipeline.to_csv(("rank", "country", "cosine"), rows), args.out)


def cmd_synth(args):
    blocks = [int(x) for x in args.blocks.split(",")]
    corpus = synth_generate(blocks, args.within, args.cross, args.days, args.entities, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _emit(serialize_records(corpus.records), str(out / "records.csv"))
    _emit(serialize_registry(corpus.registry), str(out / "registry.csv"))
    _emit(pipeline.to_csv(("country", "block"), sorted(corpus.blocks.items())), str(out / "blocks.csv"))


def cmd_run(args):
    overrides = list(args.set or [])
    if args.skip:
        overrides.append("run.skip=" + args.skip)
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    cfg = pipeline.load_config(args.config, overrides)
    manifest = pipeline.run_pipeline(cfg)
    print(f"run {manifest['run_id']}: {len(manifest['artifacts'])} artifacts in {cfg.out_dir}")


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="cap on compiled-kernel worker threads")

    parser = argparse.ArgumentParser(prog="madn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"madn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    def corpus_opts(p):
        p.add_argument("--records", required=True)
        p.add_argument("--registry", required=True)
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--from", dest="date_from", type=_day)
        p.add_argument("--to", dest="date_to", type=_day)

    p = add("ingest", cmd_ingest, "per-day top-k attention and disregard selections as CSV")
    corpus_opts(p)
    p.add_argument("--out")

    p = add("build", cmd_build, "superimposed attention or disregard network")
    corpus_opts(p)
    p.add_argument("--layer", choices=("attention", "disregard"), default="attention")
    p.add_argument("--format", choices=("graphml", "dot", "edge-list"))
    p.add_argument("--out")

    p = add("stats", cmd_stats, "topology summary")
    p.add_argument("network")
    p.add_argument("--json", action="store_true")
    p.add_argument("--fit-kmin", type=int, help="also fit the in-degree tail from this k_min")
    p.add_argument("--out")

    p = add("centrality", cmd_centrality, "ranked in-degree, out-degree or PageRank")
    p.add_argument("network")
    p.add_argument("--metric", choices=("in", "out", "pagerank"), default="pagerank")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--out")

    for name, func, help in (("dyad-histogram", cmd_dyad_histogram, "joint weight histogram of linked pairs"),
                             ("pairwise", cmd_pairwise, "pair categories after combining layers")):
        p = add(name, func, help)
        p.add_argument("attention")
        p.add_argument("disregard")
        if name == "dyad-histogram":
            p.add_argument("--bin", type=int, default=5)
        p.add_argument("--csv", action="store_true", help="CSV output (the default)")
        p.add_argument("--out")

    p = add("backbone", cmd_backbone, "disparity-filter backbone with per-link alpha annotations")
    p.add_argument("network")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--out")

    p = add("taxonomy", cmd_taxonomy, "10-type pair taxonomy census")
    p.add_argument("network")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--layer", default="attention")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--examples", type=int, default=5)
    p.add_argument("--profiles", help="write per-country label counts here")
    p.add_argument("--out")

    for name, func, nets in (("motifs", cmd_motifs, ("network",)),
                             ("colored-motifs", cmd_colored_motifs, ("attention", "disregard"))):
        p = add(name, func, "triad motif Z-scores against degree-preserving nulls")
        for n in nets:
            p.add_argument(n)
        p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--swaps-per-link", type=int, default=DEFAULT_SWAPS_PER_LINK)
        p.add_argument("--json", action="store_true")
        p.add_argument("--out")

    p = add("communities", cmd_communities, "map-equation modules")
    p.add_argument("network")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--full", action="store_true", help="use every link instead of the disparity backbone")
    p.add_argument("--tau", type=float, default=DEFAULT_TELEPORT)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--sidecar", help="JSON with codelength and parameters (default: OUT.json)")
    p.add_argument("--out")

    p = add("embed", cmd_embed, "node2vec-style embedding as TSV")
    p.add_argument("network")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--walks", type=int, default=10)
    p.add_argument("--length", type=int, default=80)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--undirected", action="store_true", help="walk the undirected projection")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = add("analogy", cmd_analogy, "rank nodes by cosine to v(A) - v(B) + v(C)")
    p.add_argument("embedding")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("c")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--out")

    p = add("synth", cmd_synth, "write a planted-block synthetic corpus")
    p.add_argument("--blocks", default="10,10", help="comma-separated block sizes")
    p.add_argument("--within", type=float, default=0.9)
    p.add_argument("--cross", type=float, default=0.05)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--entities", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)

    p = add("run", cmd_run, "full pipeline from a config file")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config field")
    p.add_argument("--skip", help="comma-separated stages to skip")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None and args.command != "run":
            pipeline.set_threads(args.threads)
        args.func(args)
    except BrokenPipeError:
        # downstream reader went away (e.g. `| head`); stay quiet
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except (MadnError, ValueError, OSError) as exc:
        print(f"madn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
