"""Top-K selection, hybrid training mixtures and instruction rendering."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from tracseq.dataset import Dataset, Sample, round_half_up
from tracseq.errors import IntegrityError, TemplateError, ValidationError
from tracseq.influence import InfluenceRecord, ranked

DEFAULT_RATIO = 0.3


def resolve_k(n: int, k: int | None = None, k_frac: float | None = None) -> int:
    """Absolute k from either a count or a fraction of ``n`` (rounded up)."""
    if (k is None) == (k_frac is None):
        raise ValueError("give exactly one of k and k_frac")
    if k_frac is not None:
        if not 0.0 < k_frac <= 1.0:
            raise ValueError(f"k_frac must lie in (0, 1], got {k_frac}")
        k = math.ceil(k_frac * n - 1e-9)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    return k


def select_topk(records: Sequence[InfluenceRecord], k: int) -> list[str]:
    """Ids of the ``k`` highest-scoring records, ordered by (score desc, id asc)."""
    if not 1 <= k <= len(records):
        raise ValueError(f"k must lie in [1, {len(records)}], got {k}")
    return [r.sample_id for r in ranked(records)[:k]]


@dataclass(frozen=True)
class MixPlan:
    total_n: int
    ratio: float
    seed: int
    selected_high: tuple[str, ...]
    selected_random: tuple[str, ...]

    @property
    def ids(self) -> list[str]:
        return [*self.selected_high, *self.selected_random]

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["selected_high"] = list(self.selected_high)
        obj["selected_random"] = list(self.selected_random)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> MixPlan:
        return cls(
            int(obj["total_n"]), float(obj["ratio"]), int(obj["seed"]),
            tuple(obj["selected_high"]), tuple(obj["selected_random"]),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> MixPlan:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_mix(
    d: Dataset,
    topk_ids: Sequence[str],
    ratio: float = DEFAULT_RATIO,
    total_n: int | None = None,
    seed: int = 42,
) -> MixPlan:
    """Compose ``round(ratio * total_n)`` Top-K ids with a uniform random rest.

    The random part is drawn without replacement from ``d`` minus the
    high-influence part, so the two never overlap.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    total_n = len(d) if total_n is None else total_n
    if not 0 <= total_n <= len(d):
        raise ValueError(f"total_n={total_n} exceeds the dataset size {len(d)}")
    n_high = round_half_up(ratio * total_n)
    if n_high > len(topk_ids):
        raise ValueError(f"need {n_high} Top-K ids but only {len(topk_ids)} were given")
    high = list(topk_ids[:n_high])
    lookup = d.by_id
    for i in high:
        if i not in lookup:
            raise IntegrityError(f"Top-K id {i!r} is not in the dataset")
    taken = set(high)
    pool = [s.id for s in d.samples if s.id not in taken]
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(pool), size=total_n - n_high, replace=False)
    return MixPlan(total_n, ratio, seed, tuple(high), tuple(pool[i] for i in pick))


# ---------------------------------------------------------------------------
# Instruction templates


@dataclass(frozen=True)
class InstructionTemplate:
    task: str
    lead_slot: str
    fixed_question: str | None
    answer_lexicon: tuple[str, ...] | None

    @property
    def slots(self) -> tuple[str, ...]:
        if self.fixed_question is None:
            return (self.lead_slot, "question", "answer")
        return (self.lead_slot, "answer")

    def prompt(self, fields: Mapping[str, str]) -> str:
        for slot in self.slots:
            if slot not in fields:
                raise TemplateError(slot)
        question = self.fixed_question or f"{fields['question']}?"
        return f"{fields[self.lead_slot]}\nQuestion: {question}\nAnswer:"


TEMPLATES = {
    "sentiment": InstructionTemplate("sentiment", "sentence", "what is the sentiment?",
                                     ("good", "neutral", "bad")),
    "classification": InstructionTemplate("classification", "sentence", None, ("Yes", "No")),
    "qa": InstructionTemplate("qa", "context", None, None),
}


def get_template(task: str | InstructionTemplate) -> InstructionTemplate:
    if isinstance(task, InstructionTemplate):
        return task
    try:
        return TEMPLATES[task]
    except KeyError:
        raise ValueError(f"unknown task {task!r}; expected one of {sorted(TEMPLATES)}") from None


def _fields(z: Sample | Mapping[str, str]) -> Mapping[str, str]:
    if isinstance(z, Sample):
        return z.text_fields or {}
    return z


def render_parts(z: Sample | Mapping[str, str], tmpl: str | InstructionTemplate) -> tuple[str, str]:
    """``(prompt, answer)``; the prompt ends with ``"Answer:"``."""
    tmpl = get_template(tmpl)
    fields = _fields(z)
    prompt = tmpl.prompt(fields)
    answer = fields["answer"]
    if tmpl.answer_lexicon is not None and answer not in tmpl.answer_lexicon:
        raise ValidationError(
            f"answer {answer!r} is not one of {list(tmpl.answer_lexicon)} for {tmpl.task}"
        )
    return prompt, answer


def render_instruction(z: Sample | Mapping[str, str], tmpl: str | InstructionTemplate) -> str:
    prompt, answer = render_parts(z, tmpl)
    return f"{prompt} {answer}"


_PATTERNS = {
    "sentiment": re.compile(r"\A(?P<sentence>.*)\nQuestion: what is the sentiment\?\nAnswer: (?P<answer>.*)\Z", re.S),
    "classification": re.compile(r"\A(?P<sentence>.*)\nQuestion: (?P<question>.*)\?\nAnswer: (?P<answer>.*)\Z", re.S),
    "qa": re.compile(r"\A(?P<context>.*)\nQuestion: (?P<question>.*)\?\nAnswer: (?P<answer>.*)\Z", re.S),
}


def parse_instruction(text: str, task: str) -> dict[str, str]:
    """Recover the slot values from a rendered instruction."""
    m = _PATTERNS[get_template(task).task].match(text)
    if m is None:
        raise ValidationError(f"text does not match the {task} template")
    return m.groupdict()


def export_instruct_jsonl(
    plan: MixPlan,
    d: Dataset,
    tmpl: str | InstructionTemplate | Mapping[str, str] | Callable[[Sample], str],
    path: str | Path,
) -> Path:
    """Write one ``{id, source, prompt, answer}`` line per plan id, in plan order.

    ``tmpl`` is a task name or template applied to every sample, a mapping
    from sample id to task, or a callable returning the task for a sample.
    """
    lookup = d.by_id
    lines = []
    for source, ids in (("topk", plan.selected_high), ("random", plan.selected_random)):
        for i in ids:
            if i not in lookup:
                raise IntegrityError(f"plan id {i!r} is not in the dataset")
            s = lookup[i]
            if callable(tmpl) and not isinstance(tmpl, InstructionTemplate):
                task = tmpl(s)
            elif isinstance(tmpl, Mapping):
                task = tmpl[i]
            else:
                task = tmpl
            prompt, answer = render_parts(s, task)
            lines.append(json.dumps(
                {"id": i, "source": source, "prompt": prompt, "answer": answer},
                ensure_ascii=False,
            ))
    path = Path(path)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path
