"""Instruction-tuning data: Alpaca rendering and the translation prompt bank."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from . import rng as rngmod
from .errors import (EmptyInstructionError, FormatError, TemplateIndexError,
                     UnknownLanguageNameError)
from .ingestion import SentencePair

PROMPT_INPUT = (
    "Below is an instruction that describes a task, paired with an input that provides further "
    "context. Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n{instruction}\n\n### Input:\n{input}\n\n### Response:\n"
)
PROMPT_NO_INPUT = (
    "Below is an instruction that describes a task. "
    "Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n{instruction}\n\n### Response:\n"
)
TEMPLATE_INPUT = "alpaca_input"
TEMPLATE_NO_INPUT = "alpaca_no_input"


@dataclass(frozen=True)
class SftRecord:
    instruction: str
    input: str
    response: str
    rendered: str
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"instruction": self.instruction, "input": self.input,
                "output": self.response, "meta": self.meta}


def render_alpaca(instruction: str, input: str, response: str, meta: dict | None = None) -> SftRecord:
    if not instruction or not instruction.strip():
        raise EmptyInstructionError("instruction must be non-empty")
    if input:
        template_id = TEMPLATE_INPUT
        prompt = PROMPT_INPUT.format(instruction=instruction, input=input)
    else:
        template_id = TEMPLATE_NO_INPUT
        prompt = PROMPT_NO_INPUT.format(instruction=instruction)
    meta = {"template_id": template_id, **(meta or {})}
    return SftRecord(instruction, input, response, prompt + response, meta)


def parse_alpaca(rendered: str) -> tuple[str, str, str]:
    """Inverse of :func:`render_alpaca`: recover ``(instruction, input, response)``."""
    for template, has_input in ((PROMPT_INPUT, True), (PROMPT_NO_INPUT, False)):
        head, _, _ = template.partition("{instruction}")
        if not rendered.startswith(head):
            continue
        rest = rendered[len(head):]
        if has_input:
            instruction, sep, rest = rest.partition("\n\n### Input:\n")
            if not sep:
                continue
            input_, sep, response = rest.partition("\n\n### Response:\n")
        else:
            input_ = ""
            instruction, sep, response = rest.partition("\n\n### Response:\n")
        if sep:
            return instruction, input_, response
    raise FormatError("text does not match either Alpaca template")


def _resource_lines(name: str) -> list[str]:
    text = resources.files("polycorpus.resources").joinpath(name).read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class PromptBank:
    templates: tuple[str, ...]

    @classmethod
    def default(cls) -> "PromptBank":
        return cls(tuple(_resource_lines("translation_prompts.txt")))

    @classmethod
    def load(cls, path) -> "PromptBank":
        with open(path, encoding="utf-8") as f:
            return cls(tuple(line.rstrip("\n") for line in f if line.strip()))

    def __len__(self):
        return len(self.templates)

    def render(self, index: int, src_name: str, tgt_name: str) -> str:
        if not 0 <= index < len(self.templates):
            raise TemplateIndexError(f"template index {index} outside 0..{len(self.templates) - 1}")
        return self.templates[index].replace("[SRC]", src_name).replace("[TGT]", tgt_name)


def load_language_names() -> dict[str, str]:
    return dict(line.split("\t", 1) for line in _resource_lines("language_names.tsv"))


def render_translation_instruction(pair: SentencePair, direction: str = "forward",
                                   template: int | str = "random",
                                   lang_names: Mapping[str, str] | None = None,
                                   rng: np.random.Generator | None = None,
                                   bank: PromptBank | None = None) -> SftRecord:
    bank = bank or PromptBank.default()
    lang_names = lang_names if lang_names is not None else load_language_names()
    if direction == "forward":
        s, t, x, y = pair.src_lang, pair.tgt_lang, pair.src_text, pair.tgt_text
    elif direction == "backward":
        s, t, x, y = pair.tgt_lang, pair.src_lang, pair.tgt_text, pair.src_text
    else:
        raise ValueError(f"unknown direction {direction!r}")
    for code in (s, t):
        if code not in lang_names:
            raise UnknownLanguageNameError(f"no display name for {code!r}")
    if template == "random":
        if rng is None:
            raise ValueError("random template selection needs an rng")
        index = int(rng.integers(len(bank)))
    elif isinstance(template, (int, np.integer)):
        index = int(template)
    else:
        raise TemplateIndexError(f"bad template selector {template!r}")
    instruction = bank.render(index, lang_names[s], lang_names[t])
    return render_alpaca(instruction, x, y,
                         {"prompt_index": index, "src_lang": s, "tgt_lang": t})


def emit_sft_dataset(sources: Mapping[str, Sequence[SentencePair]], per_language_quota: int = 1000,
                     bank: PromptBank | None = None, seed: int = 0, direction: str = "both",
                     lang_names: Mapping[str, str] | None = None) -> list[SftRecord]:
    """Sample up to ``per_language_quota`` pairs per language and render them.

    ``direction='both'`` draws forward/backward 50/50 per record.
    """
    if per_language_quota < 0:
        raise ValueError("quota must be >= 0")
    bank = bank or PromptBank.default()
    lang_names = lang_names if lang_names is not None else load_language_names()
    out = []
    for lang in sorted(sources):
        pairs = list(sources[lang])
        k = min(per_language_quota, len(pairs))
        if k == 0:
            continue
        pick = rngmod.substream(seed, "sft-sample", lang).permutation(len(pairs))[:k]
        for i in np.sort(pick):
            r = rngmod.substream(seed, "sft", lang, int(i))
            d = direction
            if d == "both":
                d = "forward" if r.random() < 0.5 else "backward"
            out.append(render_translation_instruction(pairs[int(i)], d, "random", lang_names, r, bank))
    return out


def dump_jsonl(records, f):
    for r in records:
        f.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")
