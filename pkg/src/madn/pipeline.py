"""Config-driven end-to-end runs with a manifest that pins every input and parameter.

The config is an INI file::

    [input]
    records = records.csv
    registry = registry.csv

    [output]
    dir = out

    [motifs]
    seed = 7

Relative paths resolve against the config file's directory. Every randomized
stage that is not skipped needs an explicit seed.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from madn import __version__
from madn.community import detect_communities
from madn.dyadic import (
    ALL_LABELS, combine_layers, extract_backbone, pairwise_breakdown, taxonomy_census, weight_joint_histogram,
)
from madn.embed import WalkConfig, embed_network
from madn.errors import ConfigError, ContractError, StageError
from madn.ingest import BuildConfig, read_records, read_registry, selection_rows
from madn.motifs import colored_motif_zscores, motif_zscores
from madn.netbuild import build_multiplex, serialize_network
from madn.topology import SUMMARY_METHODS, degree_centrality, fit_exponential, fit_powerlaw_tail, pagerank, ranked, summary

STAGES = ("ingest", "build", "stats", "dyadic", "taxonomy", "motifs", "communities", "embed")
LAYERS = ("attention", "disregard")

_REQUIRED = object()

# section -> key -> (parser name, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "input": {"records": ("path", _REQUIRED), "registry": ("path", _REQUIRED)},
    "output": {"dir": ("path", _REQUIRED)},
    "run": {"skip": ("stages", ()), "threads": ("int", None)},
    "build": {"k": ("int", 10), "epsilon": ("float", 0.1), "from": ("date", None), "to": ("date", None)},
    "stats": {"k_min": ("int", 5), "damping": ("float", 0.85), "top": ("int", 10)},
    "dyadic": {"alpha": ("float", 0.05), "bin": ("int", 5)},
    "taxonomy": {"layers": ("layers", LAYERS), "examples": ("int", 5)},
    "motifs": {"samples": ("int", 5000), "seed": ("int", None), "swaps_per_link": ("int", 10),
               "layers": ("layers", LAYERS), "colored": ("bool", True)},
    "communities": {"layer": ("layer", "attention"), "tau": ("float", 0.15), "trials": ("int", 10),
                    "seed": ("int", None), "full_network": ("bool", False)},
    "embed": {"layers": ("layers", ("attention",)), "dim": ("int", 128), "p": ("float", 1.0), "q": ("float", 1.0),
              "walks_per_node": ("int", 10), "walk_length": ("int", 80), "window": ("int", 10),
              "negatives": ("int", 5), "epochs": ("int", 5), "learning_rate": ("float", 0.025),
              "seed": ("int", None), "directed": ("bool", True)},
}

_SEEDED = {"motifs": "motifs.seed", "communities": "communities.seed", "embed": "embed.seed"}


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

def _convert(kind: str, raw: str, name: str, base: Path):
    raw = raw.strip()
    try:
        if kind == "path":
            return (base / raw).resolve() if raw else _REQUIRED
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "date":
            return date.fromisoformat(raw) if raw else None
        if kind == "bool":
            lowered = raw.lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return lowered in ("true", "yes", "1", "on")
        items = tuple(x.strip() for x in raw.split(",") if x.strip())
        allowed = STAGES if kind == "stages" else LAYERS
        bad = [x for x in items if x not in allowed]
        if bad:
            raise ValueError(f"unknown {'stage' if kind == 'stages' else 'layer'} {bad[0]!r}")
        if kind == "layer":
            if len(items) != 1:
                raise ValueError("expected exactly one layer")
            return items[0]
        return items
    except ValueError as exc:
        raise ConfigError(f"config field '{name}': cannot read {raw!r} ({exc})") from None


@dataclass
class RunConfig:
    params: dict[str, dict[str, object]]
    source: Path | None = None

    def __getitem__(self, dotted: str):
        section, key = dotted.split(".", 1)
        return self.params[section][key]

    @property
    def out_dir(self) -> Path:
        return self["output.dir"]

    def skipped(self, stage: str) -> bool:
        return stage in self["run.skip"]


def parse_config(text: str, base: Path | str = ".", overrides: list[str] = (), source=None) -> RunConfig:
    """Typed config from INI text. ``overrides`` are ``section.key=value`` strings applied last."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for item in overrides:
        dotted, sep, value = item.partition("=")
        section, dot, key = dotted.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)

    base = Path(base)
    params: dict[str, dict[str, object]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config field '{section}.{key}'")
    for section, fields in SCHEMA.items():
        params[section] = {}
        for key, (kind, default) in fields.items():
            name = f"{section}.{key}"
            if cp.has_option(section, key):
                value = _convert(kind, cp.get(section, key), name, base)
            else:
                value = default
            if value is _REQUIRED:
                raise ConfigError(f"missing required config field '{name}'")
            params[section][key] = value

    cfg = RunConfig(params, source)
    for stage, name in _SEEDED.items():
        if not cfg.skipped(stage) and cfg[name] is None:
            raise ConfigError(f"missing required config field '{name}' (randomized stages need explicit seeds)")
    try:
        BuildConfig(k=cfg["build.k"], epsilon=cfg["build.epsilon"], window=_window(cfg))
    except ConfigError as exc:
        raise ConfigError(f"config section [build]: {exc}") from None
    return cfg


def load_config(path, overrides: list[str] = ()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.resolve().parent, overrides, source=path)


def _window(cfg: RunConfig):
    lo, hi = cfg["build.from"], cfg["build.to"]
    if lo is None and hi is None:
        return None
    return (lo or date.min, hi or date.max)


# --------------------------------------------------------------------------
# writers shared with the command line
# --------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (date, Path)):
        return str(obj)
    return obj


def to_json(obj) -> str:
    """Stable JSON text; NaN and infinities become null."""
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def selections_csv(records, k, epsilon, window) -> str:
    rows = []
    for layer in LAYERS:
        cfg = BuildConfig(k=k, epsilon=epsilon, window=window, layer=layer)
        rows.extend((layer, d.isoformat(), c, rank, e, repr(float(v))) for d, c, rank, e, v in selection_rows(records, cfg))
    return to_csv(("layer", "date", "origin", "rank", "entity", "value"), rows)


def ranking_csv(scores: dict, top: int | None) -> str:
    return to_csv(("rank", "country", "value"), ranked(scores, top))


def centrality_scores(network, metric: str, damping: float = 0.85) -> dict:
    if metric == "pagerank":
        return pagerank(network, damping)
    deg = degree_centrality(network)
    if metric == "in":
        return {n: k[0] for n, k in deg.items()}
    if metric == "out":
        return {n: k[1] for n, k in deg.items()}
    raise ContractError(f"unknown centrality metric {metric!r}")


def histogram_csv(hist) -> str:
    b = hist.bin_size
    return to_csv(("attention_from", "disregard_from", "count"),
                  ((i * b, j * b, c) for (i, j), c in hist.cells.items()))


def taxonomy_csv(census, examples: int | None = 5) -> str:
    rows = []
    for label in ALL_LABELS:
        pairs = census.examples[label][:examples] if examples is not None else census.examples[label]
        rows.append((str(label), census.counts[label], ";".join(f"{i}>{j}" for i, j in pairs)))
    return to_csv(("label", "count", "example_pairs"), rows)


def taxonomy_profiles_csv(census) -> str:
    return to_csv(("country", *map(str, ALL_LABELS)),
                  ((c, *(prof[lab] for lab in ALL_LABELS)) for c, prof in census.profiles.items()))


def degree_fits(network, k_min: int) -> dict:
    k_in = [k for k, _ in degree_centrality(network).values()]
    out = {}
    for family, fit in (("exponential", fit_exponential), ("power-law", fit_powerlaw_tail)):
        try:
            f = fit(k_in, k_min)
            out[family] = {"k_min": f.k_min, "parameter": f.parameter, "ks": f.ks_statistic, "n_tail": f.n_tail}
        except ContractError as exc:
            out[family] = {"k_min": k_min, "error": str(exc)}
    out["exponential_parameter"] = "rate of exp(-rate * (k - k_min))"
    return out


def embedding_metadata(emb) -> dict:
    return {**emb.metadata, "nodes": len(emb.nodes)}


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class _Output:
    """Writes named artifacts into one directory and refuses anything that escapes it."""

    def __init__(self, root: Path):
        self.root = root.resolve()
        self.written: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        path = (self.root / name).resolve()
        if path.parent != self.root:
            raise ContractError(f"artifact {name!r} would land outside {self.root}")
        data = text.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.written[name] = hashlib.sha256(data).hexdigest()


@dataclass
class _Context:
    cfg: RunConfig
    out: _Output
    run_id: str
    _cache: dict = field(default_factory=dict)

    @property
    def records(self):
        if "records" not in self._cache:
            self._cache["records"] = read_records(self.cfg["input.records"])
        return self._cache["records"]

    @property
    def registry(self):
        if "registry" not in self._cache:
            self._cache["registry"] = read_registry(self.cfg["input.registry"])
        return self._cache["registry"]

    @property
    def multiplex(self):
        if "multiplex" not in self._cache:
            self._cache["multiplex"] = build_multiplex(self.records, self.registry, k=self.cfg["build.k"],
                                                       epsilon=self.cfg["build.epsilon"], window=_window(self.cfg))
        return self._cache["multiplex"]

    def layer(self, name: str):
        return getattr(self.multiplex, name)

    def backbone(self, name: str):
        key = ("backbone", name)
        if key not in self._cache:
            self._cache[key] = extract_backbone(self.layer(name), self.cfg["dyadic.alpha"])
        return self._cache[key]

    def json(self, name: str, payload: dict) -> None:
        self.out.write(name, to_json({"run_id": self.run_id, **payload}))

    def graphml(self, name: str, network, link_attrs=None, **attrs) -> None:
        self.out.write(name, serialize_network(network, "graphml", graph_attrs={"run_id": self.run_id, **attrs},
                                               link_attrs=link_attrs))


def _stage_ingest(ctx: _Context):
    c = ctx.cfg
    ctx.out.write("selections.csv", selections_csv(ctx.records, c["build.k"], c["build.epsilon"], _window(c)))


def _stage_build(ctx: _Context):
    for layer in LAYERS:
        net = ctx.layer(layer)
        ctx.graphml(f"{layer}.graphml", net, layer=layer, k=ctx.cfg["build.k"], epsilon=ctx.cfg["build.epsilon"])
        ctx.out.write(f"{layer}.edges", serialize_network(net, "edge-list"))


def _stage_stats(ctx: _Context):
    c = ctx.cfg
    report = {"methods": SUMMARY_METHODS, "layers": {}}
    for layer in LAYERS:
        net = ctx.layer(layer)
        report["layers"][layer] = {"summary": summary(net).to_dict(), "in_degree_fits": degree_fits(net, c["stats.k_min"])}
        for metric in ("in", "out", "pagerank"):
            scores = centrality_scores(net, metric, c["stats.damping"])
            ctx.out.write(f"centrality_{layer}_{metric}.csv", ranking_csv(scores, c["stats.top"] or None))
    report["pagerank_damping"] = c["stats.damping"]
    ctx.json("stats.json", report)


def _stage_dyadic(ctx: _Context):
    c = ctx.cfg
    a, d = ctx.layer("attention"), ctx.layer("disregard")
    ctx.out.write("dyad_histogram.csv", histogram_csv(weight_joint_histogram(a, d, c["dyadic.bin"])))
    combined = combine_layers(a, d)
    ctx.json("pairwise.json", {"categories": pairwise_breakdown(a, d), "tie_rule": "equal weights count as attention",
                               "links_kept": {"attention": sum(v == "attention" for v in combined.values()),
                                              "disregard": sum(v == "disregard" for v in combined.values())}})
    for layer in LAYERS:
        bb = ctx.backbone(layer)
        ctx.graphml(f"backbone_{layer}.graphml", bb.network(ctx.layer(layer)), link_attrs=bb.link_attrs(),
                    layer=layer, alpha_threshold=bb.alpha_threshold)


def _stage_taxonomy(ctx: _Context):
    for layer in ctx.cfg["taxonomy.layers"]:
        census = taxonomy_census(ctx.backbone(layer), layer)
        ctx.out.write(f"taxonomy_{layer}.csv", taxonomy_csv(census, ctx.cfg["taxonomy.examples"]))
        ctx.out.write(f"taxonomy_profiles_{layer}.csv", taxonomy_profiles_csv(census))


def _stage_motifs(ctx: _Context):
    c = ctx.cfg
    kw = dict(n_samples=c["motifs.samples"], seed=c["motifs.seed"], swaps_per_link=c["motifs.swaps_per_link"])
    for layer in c["motifs.layers"]:
        net = ctx.layer(layer)
        if net.n_links < 2:
            ctx.json(f"motifs_{layer}.json", {"layer": layer, "skipped": "fewer than 2 links; nothing to rewire"})
            continue
        ctx.json(f"motifs_{layer}.json", {"layer": layer, **motif_zscores(net, **kw).to_dict()})
    if c["motifs.colored"]:
        ctx.json("colored_motifs.json", colored_motif_zscores(ctx.multiplex, **kw).to_dict())


def _stage_communities(ctx: _Context):
    c = ctx.cfg
    layer = c["communities.layer"]
    net = ctx.layer(layer) if c["communities.full_network"] else ctx.backbone(layer).network(ctx.layer(layer))
    part = detect_communities(net, c["communities.tau"], c["communities.seed"], c["communities.trials"])
    ctx.out.write("communities.csv", to_csv(("country", "module"), sorted(part.assignment.items())))
    ctx.json("communities.json", {
        "layer": layer, "input": "full network" if c["communities.full_network"] else "disparity backbone",
        "alpha_threshold": None if c["communities.full_network"] else c["dyadic.alpha"],
        "codelength_bits": part.codelength, "n_modules": part.n_modules, **part.params,
    })


def _stage_embed(ctx: _Context):
    c = ctx.cfg
    wc = WalkConfig(p=c["embed.p"], q=c["embed.q"], walks_per_node=c["embed.walks_per_node"],
                    walk_length=c["embed.walk_length"], seed=c["embed.seed"], directed=c["embed.directed"])
    for layer in c["embed.layers"]:
        emb = embed_network(ctx.layer(layer), wc, dim=c["embed.dim"], window=c["embed.window"],
                            negatives=c["embed.negatives"], epochs=c["embed.epochs"],
                            learning_rate=c["embed.learning_rate"], seed=c["embed.seed"])
        ctx.out.write(f"embedding_{layer}.tsv", emb.to_tsv())
        ctx.json(f"embedding_{layer}.json", {"layer": layer, **embedding_metadata(emb)})


_RUNNERS = {
    "ingest": _stage_ingest, "build": _stage_build, "stats": _stage_stats, "dyadic": _stage_dyadic,
    "taxonomy": _stage_taxonomy, "motifs": _stage_motifs, "communities": _stage_communities, "embed": _stage_embed,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_pipeline(config, overrides: list[str] = ()) -> dict:
    """Run every non-skipped stage in order and write ``manifest.json``; returns the manifest.

    ``config`` is a path or a :class:`RunConfig`. A failing stage stops the run:
    outputs written so far stay in place, the manifest records the failure,
    and :class:`StageError` is raised.
    """
    cfg = config if isinstance(config, RunConfig) else load_config(config, overrides)
    if cfg["run.threads"] is not None:
        set_threads(cfg["run.threads"])
    for key in ("input.records", "input.registry"):
        if not Path(cfg[key]).is_file():
            raise ConfigError(f"config field '{key}': no such file {cfg[key]}")

    inputs = {k: {"path": str(cfg[f"input.{k}"]), "sha256": file_digest(cfg[f"input.{k}"])} for k in ("records", "registry")}
    params = {s: v for s, v in cfg.params.items() if s not in ("input", "output")}
    # thread count and skip list do not change any analysis value, so they stay out of the run id
    analysis = {s: v for s, v in params.items() if s != "run"}
    identity = {"version": __version__, "inputs": {k: v["sha256"] for k, v in inputs.items()}, "params": analysis}
    run_id = hashlib.sha256(to_json(identity).encode()).hexdigest()[:16]

    os.makedirs(cfg.out_dir, exist_ok=True)
    out = _Output(Path(cfg.out_dir))
    ctx = _Context(cfg, out, run_id)
    manifest = {
        "tool": "madn", "version": __version__, "run_id": run_id,
        "config": str(cfg.source) if cfg.source else None,
        "inputs": inputs, "params": params, "stages": [], "artifacts": {},
        "status": "running", "failure": None, "started": _now(), "finished": None,
    }

    def flush(status):
        manifest["status"] = status
        manifest["artifacts"] = dict(sorted(out.written.items()))
        manifest["finished"] = _now()
        with open(Path(out.root) / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_json(manifest))

    for stage in STAGES:
        if cfg.skipped(stage):
            manifest["stages"].append({"name": stage, "status": "skipped"})
            continue
        before = set(out.written)
        t0 = time.perf_counter()
        try:
            _RUNNERS[stage](ctx)
        except Exception as exc:
            manifest["stages"].append({"name": stage, "status": "failed", "artifacts": sorted(set(out.written) - before)})
            manifest["failure"] = {"stage": stage, "error": f"{type(exc).__name__}: {exc}"}
            flush("failed")
            raise StageError(stage, exc) from exc
        manifest["stages"].append({"name": stage, "status": "ok", "seconds": round(time.perf_counter() - t0, 3),
                                   "artifacts": sorted(set(out.written) - before)})
    flush("complete")
    return manifest


def set_threads(n: int) -> None:
    """Cap compiled-kernel worker threads at ``n`` (bounded by what numba was started with)."""
    import numba

    if n < 1:
        raise ConfigError(f"threads must be >= 1, got {n}")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
