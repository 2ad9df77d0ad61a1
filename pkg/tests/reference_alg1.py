"""Straight-line reference for one epoch of training-data construction.

Deliberately naive: literal nested loops over ordered (s, t), a visited set
so each unordered pair is emitted once, and hand-rolled formatting and
code-switching. Shares only the keyed random-stream scheme with the library
(documented in ``polycorpus.assembler``), so that matching outputs means the
same decisions were made, not that the same code ran.
"""

import json

from polycorpus.rng import substream


def _record(text, spans, meta, tokens=None):
    out = {"text": text, "loss_spans": [list(s) for s in spans], "meta": meta}
    if tokens is not None:
        out["tokens"] = list(tokens)
    return json.dumps(out, ensure_ascii=False, sort_keys=True)


def _switch(text, src_lang, lex_table, pool, p, rng):
    """lex_table: {(word, lang, target_lang): [synonyms]} built by the test."""
    others = sorted(set(pool) - {src_lang})
    target = others[int(rng.integers(len(others)))]
    words = text.lower().split(" ")
    for i, w in enumerate(words):
        syns = lex_table.get((w, src_lang, target), [])
        if not syns:
            continue
        if rng.random() < p:
            words[i] = syns[int(rng.integers(len(syns)))]
    return " ".join(words)


def reference_epoch(langs, mono, parallel, en_pool, translate, lex_table, seed, threshold, factor,
                    block_size, encode, decode, replace_prob=0.9, pool=None, stage=None,
                    fill_empty=False):
    """Returns the sorted list of canonical record strings.

    mono: {lang: [text]}, parallel: {(src, tgt): [(src_text, tgt_text)]},
    en_pool: [text], translate(text, tgt_lang) -> text.
    """
    pool = langs if pool is None else pool
    out = []
    done = set()
    for s in langs:
        for text in mono.get(s, []):
            ids = encode(text)
            for k in range(0, len(ids), block_size):
                chunk = ids[k:k + block_size]
                piece = decode(chunk)
                n = len(piece.encode("utf-8"))
                meta = {"src_lang": s, "tgt_lang": None, "direction": "mono", "origin": "natural",
                        "epoch_stage": stage, "source_id": ""}
                out.append(_record(piece, [(0, n)] if n else [], meta, chunk))
        for t in langs:
            if t == s:
                continue
            a, b = min(s, t), max(s, t)
            if (a, b) in done:
                continue
            done.add((a, b))
            union = [(a, b, x, y) for x, y in parallel.get((a, b), [])] + \
                    [(b, a, x, y) for x, y in parallel.get((b, a), [])]
            n = len(union)
            if n == 0 and not fill_empty:
                continue
            copies = factor if n < threshold else 1
            k = 0
            for c in range(copies):
                origin = "natural" if c == 0 else "replicated"
                for sl, tl, x, y in union:
                    r = substream(seed, "dir", a, b, k)
                    k += 1
                    if r.random() < 0.5:
                        text, d, m_s, m_t = x + " " + y, "forward", sl, tl
                    else:
                        text, d, m_s, m_t = y + " " + x, "backward", tl, sl
                    meta = {"src_lang": m_s, "tgt_lang": m_t, "direction": d, "origin": origin,
                            "epoch_stage": stage}
                    out.append(_record(text, [(0, len(text.encode("utf-8")))], meta))
            fill = max(0, threshold - n)
            if fill:
                perm = substream(seed, "pivot", a, b).permutation(len(en_pool))
                for i in range(fill):
                    eng = en_pool[int(perm[i])]
                    side_a = eng if a == "en" else translate(eng, a)
                    side_b = eng if b == "en" else translate(eng, b)
                    r = substream(seed, "synth", a, b, i)
                    if r.random() < 0.5:
                        sl, tl, x, y = a, b, side_a, side_b
                    else:
                        sl, tl, x, y = b, a, side_b, side_a
                    switched = _switch(x, sl, lex_table, pool, replace_prob, r)
                    text = switched + " " + y
                    start = len(switched.encode("utf-8")) + 1
                    meta = {"src_lang": sl, "tgt_lang": tl, "direction": "forward", "origin": "synthetic",
                            "epoch_stage": stage}
                    out.append(_record(text, [(start, len(text.encode("utf-8")))], meta))
    return sorted(out)
