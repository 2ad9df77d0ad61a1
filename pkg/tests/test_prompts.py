import io
import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from polycorpus.errors import (EmptyInstructionError, FormatError, TemplateIndexError,
                               UnknownLanguageNameError)
from polycorpus.ingestion import SentencePair
from polycorpus.prompt_forge import (PromptBank, dump_jsonl, emit_sft_dataset, load_language_names,
                                     parse_alpaca, render_alpaca, render_translation_instruction)
from polycorpus.rng import substream

HB = SentencePair("en", "fr", "hello", "bonjour")


def test_bank_has_33_templates():
    bank = PromptBank.default()
    assert len(bank) == 33
    assert len(set(bank.templates)) == 33
    assert bank.templates[0] == "Translate the following sentences from [SRC] to [TGT]."


def test_language_names():
    names = load_language_names()
    assert len(names) == 102
    assert names["en"] == "English" and names["fr"] == "French"
    assert names["zh"] == "Chinese Simpl" and names["zhtrad"] == "Chinese Trad"


def test_template0_en_fr():
    rec = render_translation_instruction(HB, "forward", 0)
    assert rec.instruction == "Translate the following sentences from English to French."
    assert (rec.input, rec.response) == ("hello", "bonjour")
    assert rec.meta["prompt_index"] == 0 and rec.meta["template_id"] == "alpaca_input"


def test_backward_swaps_roles():
    rec = render_translation_instruction(HB, "backward", 0)
    assert rec.instruction == "Translate the following sentences from French to English."
    assert (rec.input, rec.response) == ("bonjour", "hello")


def test_render_errors():
    with pytest.raises(UnknownLanguageNameError):
        render_translation_instruction(SentencePair("en", "qqq", "a", "b"), "forward", 0)
    with pytest.raises(TemplateIndexError):
        render_translation_instruction(HB, "forward", 33)
    with pytest.raises(ValueError):
        render_translation_instruction(HB, "forward", "random")


def test_uniform_template_draws():
    bank = PromptBank.default()
    names = load_language_names()
    r = substream(0, "uniform")
    counts = Counter(render_translation_instruction(HB, "forward", "random", names, r, bank).meta["prompt_index"]
                     for _ in range(33_000))
    assert set(counts) == set(range(33))
    assert all(abs(c / 33_000 - 1 / 33) <= 0.01 for c in counts.values())


def test_alpaca_sections():
    rec = render_alpaca("Translate this.", "hello", "bonjour")
    r = rec.rendered
    assert r.index("### Instruction:") < r.index("### Input:") < r.index("### Response:")
    assert r.endswith("### Response:\nbonjour")
    assert r.startswith("Below is an instruction that describes a task, paired with an input")
    plain = render_alpaca("Say hi", "", "hi")
    assert "### Input:" not in plain.rendered
    assert plain.meta["template_id"] == "alpaca_no_input"
    with pytest.raises(EmptyInstructionError):
        render_alpaca(" ", "x", "y")


def test_alpaca_byte_exact():
    assert render_alpaca("I", "X", "R").rendered == (
        "Below is an instruction that describes a task, paired with an input that provides further "
        "context. Write a response that appropriately completes the request.\n\n"
        "### Instruction:\nI\n\n### Input:\nX\n\n### Response:\nR")


_field = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30).filter(
    lambda s: "\n\n### " not in s)


@settings(max_examples=200)
@given(_field.filter(lambda s: s.strip()), _field, _field)
def test_alpaca_roundtrip(instruction, input_, response):
    rec = render_alpaca(instruction, input_, response)
    assert parse_alpaca(rec.rendered) == (instruction, input_, response)


def test_parse_rejects_other_text():
    with pytest.raises(FormatError):
        parse_alpaca("just text")


def _sources():
    return {l: [SentencePair("en", l, f"e{i}", f"{l}{i}") for i in range(5)] for l in ("de", "fr", "sw")}


def test_emit_quota_law():
    out = emit_sft_dataset(_sources(), 2, seed=1)
    assert len(out) == 6
    assert Counter({r.meta["src_lang"] if r.meta["src_lang"] != "en" else r.meta["tgt_lang"] for r in out}) \
        == Counter({"de", "fr", "sw"})
    assert emit_sft_dataset(_sources(), 0) == []
    assert len(emit_sft_dataset({**_sources(), "ja": []}, 10)) == 15


def test_emit_deterministic_and_both_directions():
    a = emit_sft_dataset(_sources(), 5, seed=3)
    b = emit_sft_dataset(_sources(), 5, seed=3)
    assert [r.rendered for r in a] == [r.rendered for r in b]
    assert {r.meta["src_lang"] == "en" for r in a} == {True, False}
    only_fwd = emit_sft_dataset(_sources(), 5, seed=3, direction="forward")
    assert all(r.meta["src_lang"] == "en" for r in only_fwd)


def test_dump_jsonl_fields():
    buf = io.StringIO()
    dump_jsonl(emit_sft_dataset(_sources(), 1), buf)
    rows = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert len(rows) == 3
    assert set(rows[0]) == {"instruction", "input", "output", "meta"}


def test_custom_bank(tmp_path):
    p = tmp_path / "bank.txt"
    p.write_text("From [SRC] into [TGT]:\n\nSecond [SRC]->[TGT]\n", encoding="utf-8")
    bank = PromptBank.load(p)
    assert len(bank) == 2
    assert bank.render(1, "A", "B") == "Second A->B"
