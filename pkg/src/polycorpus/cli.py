"""Command-line entry point: ``polycorpus <command> ...``.

Exit status: 0 on success, 1 on a domain error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import tomli

from . import __version__, plotting
from .assembler import (DEFAULT_BLOCK_SIZE, DEFAULT_FACTOR, DEFAULT_THRESHOLD, EpochConfig,
                        EpochSources, build_epoch, write_epoch)
from .augmentor import (PER_SENTENCE_LANGUAGE, PER_WORD_LANGUAGE, AugmentConfig, augment_batch,
                        dump_jsonl as dump_augmented)
from .errors import CorpusError, FormatError, IoError
from .fsutil import atomic_open, sha256_file
from .ingestion import (ReadStats, check_lang, parse_pair_filename, read_bilingual_dictionary,
                        read_embeddings, read_labels, read_monolingual, read_parallel,
                        read_parallel_dir, write_embeddings)
from .lexicon import Lexicon, build_multilingual_lexicon, expand_two_hop, lexicon_stats
from .metrics import corpus_bleu, language_ratio, parse_smoothing, pivot_translate, spbleu
from .prompt_forge import PromptBank, dump_jsonl as dump_sft, emit_sft_dataset
from .providers import CachedProvider, DictionaryProvider, HttpProvider, IdentityProvider
from .vocab_lab import (TokenizerModel, derive_candidates, extend_vocab, fertility, ks_lottery,
                        retrieval_r_at_1, spearman)

log = logging.getLogger("polycorpus")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ------------------------------------------------------------------ helpers

def _checksums(paths) -> dict:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_file():
            out[str(p)] = sha256_file(p)
        elif p.is_dir():
            for f in sorted(x for x in p.rglob("*") if x.is_file()):
                out[str(f)] = sha256_file(f)
    return out


def _config_snapshot(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in ("func",) and not callable(v)}


def _write_manifest(path, args, inputs, outputs=(), extra=None):
    manifest = {
        "command": args.command,
        "version": __version__,
        "config": _config_snapshot(args),
        "inputs": _checksums(inputs),
        "outputs": _checksums(outputs),
    }
    if extra:
        manifest.update(extra)
    with atomic_open(path) as f:
        json.dump(manifest, f, ensure_ascii=False, indent=2, sort_keys=True)


def _finish(args, summary: dict, inputs, outputs=()):
    """Manifest next to the first output (if any) plus an optional --report JSON."""
    if outputs:
        _write_manifest(f"{outputs[0]}.manifest.json", args, inputs, outputs)
    if getattr(args, "report", None):
        _write_manifest(args.report, args, inputs, outputs, {"summary": summary})


def _write_table(path, header, rows):
    with atomic_open(path) as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _figure_path(table_path) -> Path:
    return Path(table_path).with_suffix(".png")


def _table_outputs(args) -> list:
    return [args.table, _figure_path(args.table)] if getattr(args, "table", None) else []


def _print_json(obj):
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


def _read_numbers(path) -> list[float]:
    vals = []
    with open(path, encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or not "".join(row).strip():
                continue
            try:
                vals.append(float(row[-1]))
            except ValueError:
                if vals:
                    raise FormatError(f"non-numeric value {row[-1]!r}", path) from None
                # header row
    return vals


def _load_tokenizer(path):
    return TokenizerModel.load(path) if path else TokenizerModel.byte_level()


def _split_codes(s: str) -> list[str]:
    return [check_lang(c.strip()) for c in s.split(",") if c.strip()]


# ------------------------------------------------------------------ commands

def cmd_lexicon_build(args):
    dicts = []
    inputs = []
    for item in args.dict:
        pair, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--dict expects src-tgt=path, got {item!r}")
        src, _, tgt = pair.partition("-")
        stats = ReadStats()
        dicts.append(read_bilingual_dictionary(path, src, tgt, strict=args.strict, stats=stats))
        log.info("%s: %d entries, %d punctuation dropped, %d skipped", path, stats.yielded,
                 stats.punct_dropped, stats.skipped)
        inputs.append(path)
    lex = build_multilingual_lexicon(dicts)
    if args.two_hop:
        lex = expand_two_hop(lex)
    lex.save(args.output)
    summary = {"keys": len(lex), "languages": sorted(lex.supported_langs), "hop_depth": lex.hop_depth}
    _finish(args, summary, inputs, [args.output])
    _print_json(summary)


def cmd_lexicon_stats(args):
    lex = Lexicon.load(args.lexicon)
    langs = [args.lang] if args.lang else sorted(lex.supported_langs)
    rows = [(l, lexicon_stats(lex, l)) for l in langs]
    for l, n in rows:
        print(f"{l}\t{n}")
    _finish(args, {"entities": dict(rows)}, [args.lexicon])


def cmd_augment(args):
    lex = Lexicon.load(args.lexicon)
    pool = frozenset(_split_codes(args.pool)) if args.pool else frozenset(lex.supported_langs)
    if args.mode == "parallel":
        src, tgt = (args.src, args.tgt) if args.src and args.tgt else parse_pair_filename(args.input)
        items = list(read_parallel(args.input, src, tgt, strict=args.strict))
        strategy = PER_SENTENCE_LANGUAGE
    else:
        lang = args.lang or Path(args.input).name.split(".")[0]
        items = list(read_monolingual(args.input, lang, strict=args.strict))
        strategy = PER_WORD_LANGUAGE
    cfg = AugmentConfig(args.prob, pool, strategy, args.seed)
    out = augment_batch(items, lex, cfg, workers=args.workers)
    with atomic_open(args.output) as f:
        dump_augmented(out, f)
    replaced = sum(len(p.replacement_log) for p in out)
    eligible = sum(p.eligible_count for p in out)
    summary = {"records": len(out), "replaced": replaced, "eligible": eligible,
               "rate": replaced / eligible if eligible else None}
    _finish(args, summary, [args.input, args.lexicon], [args.output])
    _print_json(summary)


def _build_provider(section: dict, base: Path):
    backend = section.get("backend", "identity")
    cache = section.get("cache")
    cache = base / cache if cache else None
    if backend == "identity":
        inner = IdentityProvider()
    elif backend == "mock-dictionary":
        if "dict_dir" not in section:
            raise FormatError("provider.dict_dir is required for mock-dictionary")
        inner = DictionaryProvider.from_dir(base / section["dict_dir"])
    elif backend == "cache-only":
        if cache is None:
            raise FormatError("provider.cache is required for cache-only")
        return CachedProvider(None, cache)
    elif backend == "http":
        inner = HttpProvider(section["url"], float(section.get("timeout", 60)))
    else:
        raise FormatError(f"unknown provider backend {backend!r}")
    return CachedProvider(inner, cache) if cache else inner


def load_epoch_config(path):
    """Parse an epoch TOML file into (EpochConfig, EpochSources, provider, lexicon, tokenizer, raw)."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomli.load(f)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise FormatError(f"bad TOML: {exc}", path) from exc
    base = path.parent
    langs = [check_lang(l) for l in raw.get("languages", [])]
    if not langs:
        raise FormatError("config needs a non-empty 'languages' list", path)
    cfg = EpochConfig(
        languages=langs,
        threshold=int(raw.get("threshold", DEFAULT_THRESHOLD)),
        factor=int(raw.get("factor", DEFAULT_FACTOR)),
        block_size=int(raw.get("block_size", DEFAULT_BLOCK_SIZE)),
        replace_prob=float(raw.get("replace_prob", 0.90)),
        language_pool=raw.get("language_pool"),
        mono_quota=raw.get("mono_quota"),
        fill_empty_pairs=bool(raw.get("fill_empty_pairs", False)),
        stage=raw.get("stage"),
    )
    src = raw.get("sources", {})
    sources = EpochSources()
    inputs = []
    if "mono_dir" in src:
        d = base / src["mono_dir"]
        inputs.append(d)
        for lang in langs:
            p = d / f"{lang}.txt"
            if p.exists():
                sources.mono[lang] = list(read_monolingual(p, lang))
    if "parallel_dir" in src:
        d = base / src["parallel_dir"]
        inputs.append(d)
        sources.parallel = read_parallel_dir(d)
    if "english_pool" in src:
        p = base / src["english_pool"]
        inputs.append(p)
        sources.en_pool = list(read_monolingual(p, "en"))
    lex = Lexicon()
    if "lexicon" in src:
        inputs.append(base / src["lexicon"])
        lex = Lexicon.load(base / src["lexicon"])
    tok = TokenizerModel.byte_level()
    if "tokenizer" in src:
        inputs.append(base / src["tokenizer"])
        tok = TokenizerModel.load(base / src["tokenizer"])
    provider = _build_provider(raw.get("provider", {}), base)
    if raw.get("provider", {}).get("dict_dir"):
        inputs.append(base / raw["provider"]["dict_dir"])
    return cfg, sources, provider, lex, tok, raw, inputs


def cmd_assemble(args):
    cfg, sources, provider, lex, tok, raw, inputs = load_epoch_config(args.config)
    for name in ("threshold", "factor", "block_size"):
        if getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    workers = args.workers if args.workers is not None else int(raw.get("workers", 1))
    plan, records, stats = build_epoch(cfg, sources, provider, lex, args.seed, tok, workers)
    if isinstance(provider, CachedProvider):
        provider.flush()
    resolved = {**asdict(cfg), "seed": args.seed, "shard_size": args.shard_size,
                "provider": raw.get("provider", {"backend": "identity"})}
    manifest = write_epoch(args.out_dir, records, plan, stats, args.shard_size,
                           {"config": resolved, "inputs": _checksums([args.config, *inputs])})
    summary = {"records": len(records), "shards": len(manifest["shards"]),
               "pairs": len(stats)}
    if args.report:
        _write_manifest(args.report, args, [args.config, *inputs], [], {"summary": summary})
    _print_json(summary)


def cmd_vocab_fertility(args):
    tok = _load_tokenizer(args.tok)
    rep = fertility(tok, read_monolingual(args.corpus, args.lang), args.lang)
    summary = {"lang": rep.lang, "tokens": rep.token_count, "units": rep.base_unit_count,
               "fertility": rep.fertility}
    if args.table:
        _write_table(args.table, ["lang", "tokens", "units", "fertility"],
                     [[rep.lang, rep.token_count, rep.base_unit_count, f"{rep.fertility:.6f}"]])
        plotting.fertility_bars([rep], _figure_path(args.table))
    _finish(args, summary, [p for p in (args.tok, args.corpus) if p], _table_outputs(args))
    _print_json(summary)


def cmd_vocab_extend(args):
    tok = _load_tokenizer(args.tok)
    corpus = list(read_monolingual(args.corpus, args.lang))
    cands = derive_candidates(corpus, tok, args.n)
    before = fertility(tok, corpus, args.lang)
    new_tok = tok.with_added(cands)
    after = fertility(new_tok, corpus, args.lang)
    outputs = [args.out_tok]
    if args.emb:
        new_tok, new_emb = extend_vocab(tok, cands, read_embeddings(args.emb))
        write_embeddings(args.out_emb, new_emb)
        outputs.append(args.out_emb)
    new_tok.save(args.out_tok)
    summary = {"added": len(cands), "fertility_before": before.fertility,
               "fertility_after": after.fertility}
    _finish(args, summary, [p for p in (args.tok, args.corpus, args.emb) if p], outputs)
    _print_json(summary)


def cmd_analyze_ks(args):
    rep = ks_lottery(read_embeddings(args.before), read_embeddings(args.after), args.alpha)
    summary = {"shift_count": rep.shift_count, "shift_distance": rep.shift_distance,
               "alpha": args.alpha, "rows": len(rep.per_token)}
    if args.table:
        _write_table(args.table, ["token_id", "ks_statistic", "p_value", "shifted"],
                     [[t, f"{d:.6f}", f"{p:.6g}", int(p < args.alpha)] for t, d, p in rep.per_token])
        plotting.shift_histogram(rep, _figure_path(args.table))
    _finish(args, summary, [args.before, args.after], _table_outputs(args))
    _print_json(summary)


def cmd_analyze_quality(args):
    gold = [int(x) for x in Path(args.gold).read_text(encoding="utf-8").split()]
    rep = retrieval_r_at_1(read_embeddings(args.queries), read_embeddings(args.pool), gold)
    summary = asdict(rep)
    if args.table:
        _write_table(args.table, ["metric", "value"],
                     [["mean_cosine", f"{rep.mean_cosine:.6f}"], ["r_at_1", f"{rep.r_at_1:.6f}"]])
        plotting.retrieval_bars(rep, _figure_path(args.table))
    _finish(args, summary, [args.queries, args.pool, args.gold], _table_outputs(args))
    _print_json(summary)


def cmd_analyze_spearman(args):
    x, y = _read_numbers(args.x), _read_numbers(args.y)
    rho = spearman(x, y)
    if args.table:
        _write_table(args.table, ["x", "y"], list(zip(x, y)))
        plotting.correlation_scatter(x, y, rho, _figure_path(args.table),
                                     Path(args.x).stem, Path(args.y).stem)
    _finish(args, {"rho": rho, "n": len(x)}, [args.x, args.y], _table_outputs(args))
    _print_json({"rho": rho, "n": len(x)})


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def cmd_score_bleu(args):
    hyps, refs = _read_lines(args.hyp), _read_lines(args.ref)
    smoothing = parse_smoothing(args.smoothing)
    if args.sp:
        score = spbleu(hyps, refs, TokenizerModel.load(args.sp), smoothing)
    else:
        score = corpus_bleu(hyps, refs, smoothing=smoothing)
    _finish(args, score.to_json(), [p for p in (args.hyp, args.ref, args.sp) if p])
    _print_json(score.to_json())


def cmd_score_ratio(args):
    rep = language_ratio(read_labels(args.labels), args.target, args.contrast)
    _finish(args, asdict(rep), [args.labels])
    _print_json(asdict(rep))


def cmd_prompts_emit(args):
    sources = {}
    for path in sorted(Path(args.bitext).glob("*.tsv")):
        src, tgt = parse_pair_filename(path)
        key = tgt if src == args.pivot_lang and tgt != args.pivot_lang else src
        sources.setdefault(key, []).extend(read_parallel(path, src, tgt))
    bank = PromptBank.load(args.bank) if args.bank else PromptBank.default()
    recs = emit_sft_dataset(sources, args.quota, bank, args.seed, args.direction)
    with atomic_open(args.output) as f:
        dump_sft(recs, f)
    summary = {"records": len(recs), "languages": len(sources)}
    _finish(args, summary, [args.bitext], [args.output])
    _print_json(summary)


def cmd_pivot(args):
    section = {"backend": args.provider}
    if args.dict_dir:
        section["dict_dir"] = str(Path(args.dict_dir).resolve())
    if args.cache:
        section["cache"] = str(Path(args.cache).resolve())
    if args.url:
        section["url"] = args.url
    provider = _build_provider(section, Path("."))
    sentences = [s for s in _read_lines(args.input) if s.strip()]
    res = pivot_translate(provider, sentences, args.src, args.pivot, args.tgt)
    if isinstance(provider, CachedProvider):
        provider.flush()
    with atomic_open(args.output) as f:
        f.writelines(t + "\n" for t in res.translations)
    outputs = [args.output]
    if args.keep_pivot:
        with atomic_open(args.keep_pivot) as f:
            f.writelines(t + "\n" for t in res.intermediate)
        outputs.append(args.keep_pivot)
    _finish(args, {"sentences": len(sentences)}, [args.input], outputs)


def cmd_stats(args):
    rows = []
    for path in sorted(Path(args.parallel).glob("*.tsv")):
        src, tgt = parse_pair_filename(path)
        st = ReadStats()
        n = sum(1 for _ in read_parallel(path, src, tgt, stats=st))
        rows.append((f"{src}-{tgt}", n, st.skipped))
    print("direction\tpairs\tskipped")
    for r in rows:
        print(f"{r[0]}\t{r[1]}\t{r[2]}")
    if args.table:
        _write_table(args.table, ["direction", "pairs", "skipped"], rows)
        plotting.direction_counts([(r[0], r[1]) for r in rows], _figure_path(args.table))
    _finish(args, {"directions": {r[0]: r[1] for r in rows}}, [args.parallel], _table_outputs(args))


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polycorpus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="progress logging to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, table=False):
        sp.add_argument("--report", help="write a JSON summary with input checksums and resolved config")
        if table:
            sp.add_argument("--table", help="write a TSV table here and a PNG figure next to it")
        return sp

    lx = sub.add_parser("lexicon", help="build or inspect a multilingual lexicon")
    lxs = lx.add_subparsers(dest="action", parser_class=_Parser, required=True)
    b = common(lxs.add_parser("build"))
    b.add_argument("--dict", action="append", required=True, metavar="SRC-TGT=PATH")
    b.add_argument("--two-hop", action="store_true")
    b.add_argument("--strict", action="store_true")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_lexicon_build)
    s = common(lxs.add_parser("stats"))
    s.add_argument("--lexicon", required=True)
    s.add_argument("--lang")
    s.set_defaults(func=cmd_lexicon_stats)

    au = sub.add_parser("augment", help="code-switch parallel or monolingual data")
    aus = au.add_subparsers(dest="mode", parser_class=_Parser, required=True)
    for mode in ("parallel", "mono"):
        a = common(aus.add_parser(mode))
        a.add_argument("--lexicon", required=True)
        a.add_argument("--prob", type=float, default=0.90)
        a.add_argument("--pool", help="comma-separated language codes (default: all lexicon languages)")
        a.add_argument("--seed", type=int, required=True)
        a.add_argument("--workers", type=int, default=1)
        a.add_argument("--strict", action="store_true")
        a.add_argument("-i", "--input", required=True)
        a.add_argument("-o", "--output", required=True)
        if mode == "parallel":
            a.add_argument("--src")
            a.add_argument("--tgt")
        else:
            a.add_argument("--lang")
        a.set_defaults(func=cmd_augment)

    asm = common(sub.add_parser("assemble", help="build one training epoch"))
    asm.add_argument("--config", required=True)
    asm.add_argument("--seed", type=int, required=True)
    asm.add_argument("--out-dir", required=True)
    asm.add_argument("--workers", type=int)
    asm.add_argument("--shard-size", type=int, default=10_000)
    asm.add_argument("--threshold", type=int)
    asm.add_argument("--factor", type=int)
    asm.add_argument("--block-size", type=int)
    asm.set_defaults(func=cmd_assemble)

    vo = sub.add_parser("vocab", help="tokenizer fertility and vocabulary extension")
    vos = vo.add_subparsers(dest="action", parser_class=_Parser, required=True)
    f = common(vos.add_parser("fertility"), table=True)
    f.add_argument("--tok")
    f.add_argument("--corpus", required=True)
    f.add_argument("--lang", required=True)
    f.set_defaults(func=cmd_vocab_fertility)
    e = common(vos.add_parser("extend"))
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--tok")
    e.add_argument("--corpus", required=True)
    e.add_argument("--lang", required=True)
    e.add_argument("--emb")
    e.add_argument("--out-tok", required=True)
    e.add_argument("--out-emb")
    e.set_defaults(func=cmd_vocab_extend)

    an = sub.add_parser("analyze", help="embedding shift, retrieval quality, rank correlation")
    ans = an.add_subparsers(dest="action", parser_class=_Parser, required=True)
    k = common(ans.add_parser("ks"), table=True)
    k.add_argument("--before", required=True)
    k.add_argument("--after", required=True)
    k.add_argument("--alpha", type=float, default=0.05)
    k.set_defaults(func=cmd_analyze_ks)
    q = common(ans.add_parser("quality"), table=True)
    q.add_argument("--queries", required=True)
    q.add_argument("--pool", required=True)
    q.add_argument("--gold", required=True)
    q.set_defaults(func=cmd_analyze_quality)
    sp = common(ans.add_parser("spearman"), table=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.set_defaults(func=cmd_analyze_spearman)

    sc = sub.add_parser("score", help="BLEU / spBLEU and language ratios")
    scs = sc.add_subparsers(dest="action", parser_class=_Parser, required=True)
    bl = common(scs.add_parser("bleu"))
    bl.add_argument("--hyp", required=True)
    bl.add_argument("--ref", required=True)
    bl.add_argument("--sp", help="tokenizer JSON; switches to spBLEU")
    bl.add_argument("--smoothing", default="none", help="'none' (default) or 'add-k:K'")
    bl.set_defaults(func=cmd_score_bleu)
    ra = common(scs.add_parser("ratio"))
    ra.add_argument("--labels", required=True)
    ra.add_argument("--target", required=True)
    ra.add_argument("--contrast", required=True)
    ra.set_defaults(func=cmd_score_ratio)

    pr = sub.add_parser("prompts", help="instruction-tuning data")
    prs = pr.add_subparsers(dest="action", parser_class=_Parser, required=True)
    em = common(prs.add_parser("emit"))
    em.add_argument("--bitext", required=True, help="directory of SRC-TGT.tsv files")
    em.add_argument("--quota", type=int, default=1000)
    em.add_argument("--seed", type=int, required=True)
    em.add_argument("--direction", choices=["forward", "backward", "both"], default="both")
    em.add_argument("--pivot-lang", default="en", help="files are grouped by their non-pivot language")
    em.add_argument("--bank", help="prompt bank file, one template per line")
    em.add_argument("-o", "--output", required=True)
    em.set_defaults(func=cmd_prompts_emit)

    pv = common(sub.add_parser("pivot", help="translate through a pivot language"))
    pv.add_argument("--src", required=True)
    pv.add_argument("--pivot", default="en")
    pv.add_argument("--tgt", required=True)
    pv.add_argument("--provider", choices=["identity", "mock-dictionary", "cache-only", "http"],
                    required=True)
    pv.add_argument("--dict-dir")
    pv.add_argument("--cache")
    pv.add_argument("--url")
    pv.add_argument("--keep-pivot", help="also write the intermediate pivot translations")
    pv.add_argument("-i", "--input", required=True)
    pv.add_argument("-o", "--output", required=True)
    pv.set_defaults(func=cmd_pivot)

    st = common(sub.add_parser("stats", help="per-direction pair counts"), table=True)
    st.add_argument("--parallel", required=True)
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"polycorpus: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, OSError, ValueError) as exc:
        print(f"polycorpus: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
