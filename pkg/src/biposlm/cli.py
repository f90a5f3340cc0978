"""Command line front end: train, eval, analyze, sweep and lambda-search.

Settings come from built-in defaults, then an optional ``key=value``
config file, then command line flags (flags win).  Every output file
carries the run metadata: the full configuration, the toolkit version and
SHA-256 digests of the inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .analysis import (AnalysisError, component_report, context_detail, following_tag, impact,
                       rare_word_curve_from_counts, unknown_impact, word_given_tag, zipf_curve)
from .corpus import (CorpusError, TaggedCorpus, Tagset, TagMap, build_vocabulary, load_tagmap,
                     read_lob, split_corpus)
from .evaluation import (EvaluationError, evaluate, grid_search_lambda, records_csv, result_json,
                         specific_subset_ltp, sweep_training_size, table_csv, SWEEP_COLUMNS)
from .models import (BEGIN, GeneralizedModel, ModelError, UniformModel, loads_model, make_variable,
                     model_to_dict, train_bipos, train_generalized)

log = logging.getLogger("biposlm")

REPORTS = ("impact-by-prev-tag", "following-tag", "unknown-impact", "components",
           "word-given-tag", "zipf", "rare-words")
REGIME_CHOICES = ("m1", "m2", "m3", "m4", "new")


@dataclass
class RunConfig:
    corpus: str | None = None
    tagmap: str = "identity"
    n_train: int | None = None
    test: str | None = None
    model: str | None = None
    kind: str = "bipos"
    c2: float = 1e-4
    d1: float = 1e-6
    regime: str = "m1"
    variable: str | None = None
    lam: float | None = None
    out: str = "."
    seed: int = 0
    sizes: str | None = None
    fixed_vocab: bool = False
    reports: str = ",".join(REPORTS)
    prev_tag: str | None = None
    tag: str | None = None


_TYPES = {f.name: f.type for f in fields(RunConfig)}


class ConfigError(ValueError):
    pass


def _convert(key, value: str):
    t = _TYPES[key]
    if value in ("", "none", "None") and "None" in str(t):
        return None
    if "bool" in str(t):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        if "int" in str(t):
            return int(value)
        if "float" in str(t):
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return value


def read_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lam"
        if key not in _TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = _convert(key, value)
    return out


def build_config(args) -> RunConfig:
    values = asdict(RunConfig())
    if args.config:
        values.update(read_config(args.config))
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag
    cfg = RunConfig(**values)
    if cfg.regime.lower() not in REGIME_CHOICES:
        raise ConfigError(f"regime must be one of {', '.join(REGIME_CHOICES)}")
    return cfg


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def metadata(cfg: RunConfig, command: str, inputs) -> dict:
    config = {k: v for k, v in asdict(cfg).items() if k != "out"}
    return {
        "tool": "biposlm",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs if p},
        "sentence_start": f"the first word of each sentence is predicted from the {BEGIN} context; "
                          "punctuation is scored like any other word",
    }


def _header_lines(meta: dict) -> list[str]:
    return ["metadata " + json.dumps(meta, sort_keys=True)]


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# loading


def _read(path, tag_map: TagMap) -> TaggedCorpus:
    try:
        with open(path, encoding="utf-8") as fh:
            return read_lob(fh, tag_map)
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc.strerror or exc}") from None


def _training_data(cfg: RunConfig):
    if not cfg.corpus:
        raise ConfigError("no corpus given (use --corpus or corpus= in the config)")
    tag_map = load_tagmap(cfg.tagmap)
    corpus = _read(cfg.corpus, tag_map)
    n_train = corpus.n if cfg.n_train is None else cfg.n_train
    train, rest = split_corpus(corpus, n_train)
    if tag_map.open:
        tagset = Tagset("identity", tuple(dict.fromkeys(corpus.tags)) or ("X",))
    else:
        tagset = tag_map.target()
    return tag_map, tagset, train, rest


def _build_model(cfg: RunConfig, train, tagset):
    if cfg.kind == "uniform":
        return UniformModel(build_vocabulary(train, cfg.corpus))
    if cfg.kind != "bipos":
        raise ConfigError(f"unknown model kind {cfg.kind!r}; expected bipos or uniform")
    base = train_bipos(train, build_vocabulary(train, cfg.corpus), tagset, cfg.c2, cfg.d1, cfg.regime)
    if not cfg.variable:
        return base
    variable = make_variable(cfg.variable, cfg.seed)
    return train_generalized(train, base, variable, 0.5 if cfg.lam is None else cfg.lam)


def _dump(model, meta) -> str:
    if isinstance(model, UniformModel):
        data = {"format": "biposlm-model", "kind": "uniform", "words": list(model.vocabulary.words)}
    else:
        data = model_to_dict(model)
    data["metadata"] = meta
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _load(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc.strerror or exc}") from None
    data = json.loads(text)
    if data.get("kind") == "uniform":
        from .corpus import Vocabulary
        words = data["words"]
        return UniformModel(Vocabulary({w: i for i, w in enumerate(words)}, str(path), len(words), len(words)))
    return loads_model(text)


def _apply_overrides(model, cfg: RunConfig, explicit: set):
    if isinstance(model, UniformModel):
        return model
    if "regime" in explicit:
        if isinstance(model, GeneralizedModel):
            model = model.with_base(model.base.with_regime(cfg.regime))
        else:
            model = model.with_regime(cfg.regime)
    if "lam" in explicit and isinstance(model, GeneralizedModel):
        model = model.with_lambda(cfg.lam)
    return model


def _test_data(cfg: RunConfig, model):
    """Test text from --test, or the part of the corpus after n_train."""
    if cfg.test:
        tag_map = load_tagmap(cfg.tagmap)
        test = _read(cfg.test, tag_map)
        inputs = [cfg.test]
    elif cfg.corpus:
        _, _, _, test = _training_data(cfg)
        inputs = [cfg.corpus]
    else:
        raise ConfigError("no test text given (use --test, or --corpus with --n-train)")
    if not isinstance(model, UniformModel):
        tagset = model.base.tagset if isinstance(model, GeneralizedModel) else model.tagset
        foreign = sorted({t.tag for t in test.tokens if t.tag not in tagset})
        if foreign:
            raise EvaluationError(f"test tags {foreign[:5]} are not in the model tagset {tagset.name!r}")
    return test, inputs


def _explicit(args) -> set:
    out = set()
    if args.config:
        out.update(read_config(args.config))
    out.update(k for k in _TYPES if getattr(args, k, None) not in (None, False))
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_train(cfg: RunConfig, args) -> int:
    _, tagset, train, _ = _training_data(cfg)
    model = _build_model(cfg, train, tagset)
    meta = metadata(cfg, "train", [cfg.corpus, cfg.tagmap if Path(cfg.tagmap).is_file() else None])
    out = Path(cfg.out)
    _write(out / "model.json", _dump(model, meta))
    if isinstance(model, UniformModel):
        summary = {"kind": "uniform", "vocabulary": len(model.vocabulary)}
    else:
        base = model.base if isinstance(model, GeneralizedModel) else model
        summary = base.summary()
        if isinstance(model, GeneralizedModel):
            summary["variable"] = model.variable.label
            summary["lambda"] = model.lam
    _write(out / "train_summary.json", json.dumps({"summary": summary, "metadata": meta}, sort_keys=True, indent=1) + "\n")
    if "d_g" in summary:
        print(f"|V|={summary['vocabulary']} |G|={summary['tags']} d2={summary['d2']:.6g} u={summary['u']}")
        for g, d in summary["d_g"].items():
            print(f"  d_g[{g}]={d:.6g}")
    else:
        print(f"|V|={summary['vocabulary']}")
    print(f"wrote {out / 'model.json'}")
    return 0


def _print_result(res):
    print(f"n={res.n} LTP={res.LTP:.6g} PP={res.PP:.6g} ALTP={res.ALTP:.6g} APP={res.APP:.6g} s={res.s} r={res.r}")


def cmd_eval(cfg: RunConfig, args) -> int:
    if not cfg.model:
        raise ConfigError("eval needs --model")
    model = _apply_overrides(_load(cfg.model), cfg, _explicit(args))
    test, inputs = _test_data(cfg, model)
    res = evaluate(model, test)
    meta = metadata(cfg, "eval", [cfg.model] + inputs)
    out = Path(cfg.out)
    _write(out / "eval.json", result_json(res, meta))
    _write(out / "records.csv", records_csv(res.records, _header_lines(meta)))
    _print_result(res)
    return 0


def _rare_counts(model, tag):
    base = model.base if isinstance(model, GeneralizedModel) else model
    words = base.counts.words
    if tag is None:
        tag = max(base.tags, key=lambda g: (len(words[g]), -base.tags.index(g)))
    if tag not in words:
        raise AnalysisError(f"no training words carry tag {tag!r}")
    return tag, words[tag]


def cmd_analyze(cfg: RunConfig, args) -> int:
    names = [r.strip() for r in cfg.reports.split(",") if r.strip()]
    bad = [r for r in names if r not in REPORTS]
    if bad:
        raise ConfigError(f"unknown report(s) {', '.join(bad)}; valid names: {', '.join(REPORTS)}")
    if not cfg.model:
        raise ConfigError("analyze needs --model")
    model = _apply_overrides(_load(cfg.model), cfg, _explicit(args))
    if isinstance(model, UniformModel):
        raise ConfigError("analysis reports need a bi-pos model")
    test, inputs = _test_data(cfg, model)
    res = evaluate(model, test)
    meta = metadata(cfg, "analyze", [cfg.model] + inputs)
    head = _header_lines(meta)
    out = Path(cfg.out)
    written = []
    recs = res.records
    by_prev = impact(recs, "prev_tag")

    if "impact-by-prev-tag" in names:
        detail = {row["tag"]: row for row in context_detail(recs, by_prev.keys())}
        rows = []
        for row in by_prev.rows:
            d = detail[row.key]
            rows.append({"tag": row.key, "n": row.n, "LTP": row.ltp, "avg": row.avg, "f": row.f,
                         "f_tag": d["f_tag"], "f_word": d["f_word"], "f_rest": d["f_rest"]})
        cols = ("tag", "n", "LTP", "avg", "f", "f_tag", "f_word", "f_rest")
        written.append(_write(out / "impact_prev_tag.csv", table_csv(rows, cols, head)))
    if "following-tag" in names:
        prev = cfg.prev_tag or by_prev.rows[0].key
        rep = following_tag(recs, prev)
        rows = [{"prev_tag": prev, "tag": r.key, "f": r.f, "n": r.n, "LTP": r.ltp, "avg": r.avg} for r in rep.rows]
        written.append(_write(out / "following_tag.csv",
                              table_csv(rows, ("prev_tag", "tag", "f", "n", "LTP", "avg"), head)))
    if "unknown-impact" in names:
        results = {}
        for regime in ("M1", "M4"):
            variant = _apply_overrides(model, RunConfig(regime=regime), {"regime"})
            results[regime] = evaluate(variant, test)
        rows = unknown_impact(results)
        written.append(_write(out / "unknown_impact.csv",
                              table_csv(rows, ("model", "LTP", "LTP_unknown", "fraction"), head)))
    if "components" in names:
        shares = component_report(recs)
        written.append(_write(out / "components.csv",
                              table_csv([shares.fractions], ("unknown", "fact", "word", "pos"), head)))
    if "word-given-tag" in names:
        rows = word_given_tag(recs)
        written.append(_write(out / "word_given_tag.csv",
                              table_csv(rows, ("tag", "n", "LTP", "avg", "f", "f_total"), head)))
    if "zipf" in names:
        pts = [{"fraction_of_tags": x, "fraction_of_LTP": y} for x, y in zipf_curve(by_prev)]
        written.append(_write(out / "zipf.csv",
                              table_csv(pts, ("fraction_of_tags", "fraction_of_LTP"), head)))
    if "rare-words" in names:
        tag, counts = _rare_counts(model, cfg.tag)
        pts = [{"x": x, "fraction": y} for x, y in rare_word_curve_from_counts(counts)]
        written.append(_write(out / "rare_words.csv", table_csv(pts, ("x", "fraction"), head + [f"tag {tag}"])))
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if not cfg.sizes:
        raise ConfigError("sweep needs --sizes")
    try:
        sizes = [int(s) for s in cfg.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad size list {cfg.sizes!r}") from None
    _, tagset, train, test = _training_data(cfg)
    if cfg.test:
        test, _ = _test_data(cfg, train_bipos(train, None, tagset))
    rows = sweep_training_size(train, test, sizes, cfg.fixed_vocab, cfg.c2, cfg.d1, cfg.regime, tagset)
    meta = metadata(cfg, "sweep", [cfg.corpus, cfg.test])
    path = _write(Path(cfg.out) / "sweep.csv", table_csv(rows, SWEEP_COLUMNS, _header_lines(meta)))
    for row in rows:
        print(f"size={row['size']} LTP={row['LTP']:.6g} PP={row['PP']:.6g} ALTP={row['ALTP']:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_lambda_search(cfg: RunConfig, args) -> int:
    if not cfg.variable:
        raise ConfigError("lambda-search needs --variable")
    _, tagset, train, test = _training_data(cfg)
    base = train_bipos(train, build_vocabulary(train, cfg.corpus), tagset, cfg.c2, cfg.d1, cfg.regime)
    if cfg.test:
        test, _ = _test_data(cfg, base)
    model = train_generalized(train, base, make_variable(cfg.variable, cfg.seed))
    lam, res, trace = grid_search_lambda(model, test)
    base_res = evaluate(base, test)
    n_spec, ltp_spec = specific_subset_ltp(res)
    base_spec = sum(r.log2p for r, s in zip(base_res.records, res.records) if s.x == "specific")
    meta = metadata(cfg, "lambda-search", [cfg.corpus, cfg.test])
    out = {
        "lambda": lam,
        "LTP": res.LTP,
        "PP": res.PP,
        "base_LTP": base_res.LTP,
        "base_PP": base_res.PP,
        "specific_positions": n_spec,
        "specific_LTP": ltp_spec,
        "base_specific_LTP": base_spec,
        "grid": [{"lambda": g, "LTP": v} for g, v in trace],
        "metadata": meta,
    }
    path = _write(Path(cfg.out) / "lambda_search.json", json.dumps(out, sort_keys=True, indent=1) + "\n")
    print(f"lambda={lam} LTP={res.LTP:.6g} base_LTP={base_res.LTP:.6g} specific_positions={n_spec}")
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "lambda-search": cmd_lambda_search,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--regime", type=str.lower, choices=REGIME_CHOICES)
    common.add_argument("--tagmap", help="built-in tag map name, 'identity', or a file path")
    common.add_argument("--variable", help="singular, during or random:<p>")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--fixed-vocab", dest="fixed_vocab", action="store_true", default=None)
    common.add_argument("--corpus", help="tagged training corpus")
    common.add_argument("--n-train", dest="n_train", type=int, help="number of training tokens")
    common.add_argument("--test", help="tagged test text")
    common.add_argument("--c2", type=float)
    common.add_argument("--d1", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="biposlm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"biposlm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", parents=[common], help="train a model and save it")
    p.add_argument("--kind", choices=("bipos", "uniform"))
    p = sub.add_parser("eval", parents=[common], help="score a test text")
    p.add_argument("--model", required=False)
    p = sub.add_parser("analyze", parents=[common], help="write weakness reports")
    p.add_argument("--model")
    p.add_argument("--reports", help="comma separated subset of: " + ", ".join(REPORTS))
    p.add_argument("--prev-tag", dest="prev_tag", help="context tag for the following-tag report")
    p.add_argument("--tag", help="tag for the rare-words curve")
    p = sub.add_parser("sweep", parents=[common], help="retrain on growing prefixes")
    p.add_argument("--sizes", help="comma separated prefix sizes")
    sub.add_parser("lambda-search", parents=[common], help="grid search the interpolation weight")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, CorpusError, ModelError, EvaluationError, AnalysisError, OSError) as exc:
        print(f"biposlm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
