"""Deterministic desk-scale benchmark generation.

make_benchmark builds the bundled synthetic benchmark: by cheapest-correct
label, 30% of queries are answerable with no retrieval, 40% need a single
lookup, 30% need a chained lookup. Each class speaks its own phrasing so a
linear model over word n-grams can tell them apart, except that a small
slice of the single-lookup class deliberately reuses the no-retrieval
phrasing; pure cost routing misroutes those, and reliability routing fixes
them. Queries answerable without retrieval are also marked wrong under
multi-step (extra context as noise), so the always-multi-step baseline is
beatable on accuracy as well as cost.

make_random_oracle_set draws correct_under uniformly from all subsets of
the three strategies (empty included) for exercising the labeling path.
Both generators are pure functions of their seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Document, QADataset, QAExample
from .engine import EXECUTION_STRATEGIES, OracleBehavior, Strategy, save_oracle

DEFAULT_BENCHMARK_SEED = 20240817

WRONG_ANSWER = "I cannot determine that."

_CONSONANTS = "bdfglmnprstvz"
_VOWELS = "aeiou"

_EASY_TEMPLATES = (
    "who wrote the famous play {e}",
    "what is the capital of the old country {e}",
    "who painted the classic portrait {e}",
)
_LOOKUP_TEMPLATES = (
    "which team won the {e} trophy last season",
    "what are the latest guidelines issued by {e}",
    "who received the {e} prize this year",
)
_CHAIN_TEMPLATES = (
    "who led the government when the founder of {e} was born",
    "which river flows through the birthplace of the inventor of {e}",
    "who ruled the empire when the architect of {e} died",
)


@dataclass(frozen=True)
class SyntheticBenchmark:
    corpus: Corpus
    qa: QADataset
    behaviors: dict[str, OracleBehavior]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write corpus.jsonl, qa.jsonl, oracle.jsonl under out_dir."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return {
            "corpus": self.corpus.export(out_dir / "corpus.jsonl"),
            "qa": self.qa.export(out_dir / "qa.jsonl"),
            "oracle": save_oracle(self.behaviors, out_dir / "oracle.jsonl"),
        }


def _word(rng: random.Random, syllables: int = 3) -> str:
    return "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables))


def _entity(rng: random.Random) -> str:
    return f"{_word(rng).capitalize()} {_word(rng).capitalize()}"


def _gold(rng: random.Random) -> str:
    # A digit suffix keeps gold answers out of every canned wrong phrase.
    return f"{_word(rng)} {rng.randrange(1000, 9000)}"


def _answers(correct_under: frozenset[Strategy], gold: str) -> dict[Strategy, str]:
    return {
        s: (f"The answer is {gold}." if s in correct_under else WRONG_ANSWER)
        for s in EXECUTION_STRATEGIES
    }


def make_benchmark(
    n: int = 300,
    seed: int = DEFAULT_BENCHMARK_SEED,
    trap_fraction: float = 0.1,
) -> SyntheticBenchmark:
    """The structured benchmark: 30% no / 40% single / 30% multi by cost label."""
    if n < 10:
        raise ValueError("benchmark needs at least 10 queries")
    rng = random.Random(seed)
    n_no = round(0.3 * n)
    n_single = round(0.4 * n)
    n_multi = n - n_no - n_single
    n_trap = max(1, round(trap_fraction * n_single))
    tags = ["easy"] * n_no + ["trap"] * n_trap + ["lookup"] * (n_single - n_trap) + ["chain"] * n_multi
    rng.shuffle(tags)

    documents: list[Document] = []
    examples: list[QAExample] = []
    behaviors: dict[str, OracleBehavior] = {}
    for i, tag in enumerate(tags):
        qid = f"q{i:04d}"
        entity = _entity(rng)
        gold = _gold(rng)
        if tag == "easy":
            template = rng.choice(_EASY_TEMPLATES)
            correct_under = frozenset({Strategy.NO_RETRIEVAL, Strategy.SINGLE_STEP})
            script: tuple[str, ...] = ()
            origin, dataset = "single_hop", "synth-single"
        elif tag == "trap":
            # Same phrasing as the easy class, but parametric knowledge fails.
            template = rng.choice(_EASY_TEMPLATES)
            correct_under = frozenset({Strategy.SINGLE_STEP, Strategy.MULTI_STEP})
            script = ()
            origin, dataset = "single_hop", "synth-single"
        elif tag == "lookup":
            template = rng.choice(_LOOKUP_TEMPLATES)
            correct_under = frozenset({Strategy.SINGLE_STEP, Strategy.MULTI_STEP})
            script = (f"{entity} record details",)
            origin, dataset = "single_hop", "synth-single"
        else:
            template = rng.choice(_CHAIN_TEMPLATES)
            correct_under = frozenset({Strategy.MULTI_STEP})
            script = (f"{entity} founding history", f"{entity} leader biography")
            origin, dataset = "multi_hop", "synth-multi"
        question = template.format(e=entity)
        examples.append(
            QAExample(id=qid, question=question, gold_answers=(gold,), origin=origin, dataset=dataset)
        )
        behaviors[qid] = OracleBehavior(
            query_id=qid,
            correct_under=correct_under,
            answers=_answers(correct_under, gold),
            multi_step_script=script,
        )
        documents.append(
            Document(
                id=f"d{i:04d}",
                title=entity,
                text=f"{entity} is a well documented subject. The records mention {gold} in the annals.",
            )
        )
    for j in range(8):
        filler = " ".join(_word(rng) for _ in range(12))
        documents.append(Document(id=f"f{j:02d}", title=f"notes {j}", text=filler))
    return SyntheticBenchmark(corpus=Corpus(documents), qa=QADataset(examples), behaviors=behaviors)


def make_random_oracle_set(n: int = 300, seed: int = 7) -> SyntheticBenchmark:
    """Queries with correct_under drawn uniformly from all eight subsets."""
    rng = random.Random(seed)
    subsets = [
        frozenset(s for bit, s in zip((1, 2, 4), EXECUTION_STRATEGIES) if mask & bit)
        for mask in range(8)
    ]
    documents = [
        Document(
            id=f"d{j:03d}",
            title=f"note {j}",
            text=" ".join(_word(rng, 2) for _ in range(10)),
        )
        for j in range(24)
    ]
    examples: list[QAExample] = []
    behaviors: dict[str, OracleBehavior] = {}
    for i in range(n):
        qid = f"r{i:04d}"
        gold = _gold(rng)
        correct_under = rng.choice(subsets)
        script_len = rng.randrange(0, 4)
        script = tuple(f"search {_word(rng)} {_word(rng)}" for _ in range(script_len))
        origin = rng.choice(("single_hop", "multi_hop"))
        examples.append(
            QAExample(
                id=qid,
                question=f"tell me about {_word(rng)} {_word(rng)}",
                gold_answers=(gold,),
                origin=origin,
                dataset="synth-random",
            )
        )
        behaviors[qid] = OracleBehavior(
            query_id=qid,
            correct_under=correct_under,
            answers=_answers(correct_under, gold),
            multi_step_script=script,
        )
    return SyntheticBenchmark(corpus=Corpus(documents), qa=QADataset(examples), behaviors=behaviors)
