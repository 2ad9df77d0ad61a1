import random
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from polycorpus.ingestion import DictEntryPair
from polycorpus.lexicon import (Lexicon, build_multilingual_lexicon, expand_two_hop, lexicon_stats,
                                lookup)


def E(s, t, a, b):
    return DictEntryPair(s, t, a, b)


@pytest.fixture
def hello_lex():
    return build_multilingual_lexicon([
        [E("en", "fr", "hello", "bonjour")],
        [E("en", "de", "hello", "hallo")],
        [E("en", "zh", "hello", "你好")],
    ])


def test_hello_entry(hello_lex):
    assert hello_lex.entries[("hello", "en")] == {"fr": ["bonjour"], "de": ["hallo"], "zh": ["你好"]}
    assert hello_lex.hop_depth == 1
    assert hello_lex.supported_langs == {"en", "fr", "de", "zh"}


def test_empty_input():
    lex = build_multilingual_lexicon([])
    assert len(lex) == 0 and lex.supported_langs == set()


def test_first_seen_order():
    lex = build_multilingual_lexicon([[E("en", "fr", "dog", "chien"), E("en", "fr", "dog", "clebs")]])
    # oracle: aggregate the entry list by key, keeping first-seen order
    agg = defaultdict(list)
    for s, t in [("dog", "chien"), ("dog", "clebs")]:
        if t not in agg[s]:
            agg[s].append(t)
    assert lookup(lex, "dog", "en", "fr") == agg["dog"] == ["chien", "clebs"]


def test_symmetric_build(hello_lex):
    assert lookup(hello_lex, "hallo", "de", "en") == ["hello"]


def test_lookup(hello_lex):
    assert lookup(hello_lex, "hello", "en", "de") == ["hallo"]
    assert lookup(hello_lex, "xyzzy", "en", "de") == []
    assert lookup(hello_lex, "HELLO", "en", "fr") == ["bonjour"]
    assert lookup(hello_lex, "hello", "en", "ja") == []


def test_case_folded_keys_keep_synonym_case():
    lex = build_multilingual_lexicon([[E("en", "fr", "Hello", "Bonjour")]])
    assert lookup(lex, "hello", "en", "fr") == ["Bonjour"]
    assert lookup(lex, "BONJOUR", "fr", "en") == ["Hello"]


def test_two_hop_dog_hund():
    lex = build_multilingual_lexicon([[E("en", "fr", "dog", "chien")], [E("fr", "de", "chien", "Hund")]])
    assert lookup(lex, "dog", "en", "de") == []
    two = expand_two_hop(lex)
    assert lookup(two, "dog", "en", "de") == ["Hund"]
    assert lookup(two, "dog", "en", "fr") == ["chien"]
    assert two.hop_depth == 2


def test_two_hop_fixed_point():
    lex = build_multilingual_lexicon([[E("en", "fr", "dog", "chien")], [E("en", "de", "cat", "Katze")]])
    assert expand_two_hop(lex).entries == lex.entries


def _reach_depth2(edges, start):
    """BFS over the symmetric word graph, returning nodes at distance <= 2 (excluding start's language)."""
    adj = defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    frontier, seen = {start}, {start}
    for _ in range(2):
        frontier = {n for f in frontier for n in adj[f]} - seen
        seen |= frontier
    return {n for n in seen if n[1] != start[1]}


def test_chain_does_not_reach_depth_three():
    chain = [("a", "aa"), ("b", "bb"), ("c", "cc"), ("d", "dd")]
    dicts = [[E(chain[i][1], chain[i + 1][1], chain[i][0], chain[i + 1][0])] for i in range(3)]
    two = expand_two_hop(build_multilingual_lexicon(dicts))
    got = {(w, l) for l, ws in two.entries[("a", "aa")].items() for w in ws}
    edges = [((chain[i][0], chain[i][1]), (chain[i + 1][0], chain[i + 1][1])) for i in range(3)]
    assert got == _reach_depth2(edges, ("a", "aa")) == {("b", "bb"), ("c", "cc")}
    assert lookup(two, "a", "aa", "dd") == []


def test_two_hop_guard():
    with pytest.raises(ValueError):
        expand_two_hop(expand_two_hop(Lexicon()))


def test_stats(hello_lex):
    assert lexicon_stats(hello_lex, "fr") == 1
    assert lexicon_stats(Lexicon(), "fr") == 0


def _random_dicts(seed, n=500):
    rnd = random.Random(seed)
    langs = ["en", "fr", "de", "es", "zh"]
    vocab = {l: [f"{l}{i}" for i in range(40)] for l in langs}
    by_pair = defaultdict(list)
    for _ in range(n):
        s, t = rnd.sample(langs, 2)
        by_pair[(s, t)].append(E(s, t, rnd.choice(vocab[s]), rnd.choice(vocab[t])))
    return list(by_pair.values())


@pytest.mark.parametrize("seed", range(5))
def test_stats_match_full_scan(seed):
    dicts = _random_dicts(seed)
    lex = build_multilingual_lexicon(dicts)
    for lang in ["en", "fr", "de", "es", "zh"]:
        scan = {e.src_word.lower() for d in dicts for e in d if e.src_lang == lang} | \
               {e.tgt_word.lower() for d in dicts for e in d if e.tgt_lang == lang}
        assert lexicon_stats(lex, lang) == len(scan)


@pytest.mark.parametrize("seed", range(5))
def test_symmetry_idempotence_determinism(seed):
    dicts = _random_dicts(seed, 300)
    lex = build_multilingual_lexicon(dicts)
    for (w, s), sets in lex.entries.items():
        for t, words in sets.items():
            for wt in words:
                assert w in [x.lower() for x in lookup(lex, wt, t, s)]
    again = build_multilingual_lexicon(dicts)
    assert again == lex and again.dumps() == lex.dumps()


@pytest.mark.parametrize("seed", range(5))
def test_two_hop_monotone_and_no_self(seed):
    lex = build_multilingual_lexicon(_random_dicts(seed, 300))
    two = expand_two_hop(lex)
    assert len(two) >= len(lex)
    for key, sets in lex.entries.items():
        for lang, words in sets.items():
            assert two.entries[key][lang][:len(words)] == words
    for (w, l), sets in two.entries.items():
        assert l not in sets


_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyzé,|:\\_", min_size=1, max_size=6).filter(
    lambda w: any(c.isalpha() for c in w))


@settings(max_examples=80)
@given(st.lists(st.tuples(st.sampled_from(["en", "fr", "de"]), st.sampled_from(["es", "it"]), _word, _word),
                max_size=25))
def test_serialization_roundtrip(rows):
    lex = build_multilingual_lexicon([[E(*r) for r in rows]])
    back = Lexicon.loads(lex.dumps())
    assert back == lex
    assert back.dumps() == lex.dumps()


def test_save_load(tmp_path, hello_lex):
    hello_lex.save(tmp_path / "lex.txt")
    assert Lexicon.load(tmp_path / "lex.txt") == hello_lex
