"""
Summary-quality metrics: S-BLEU, C-BLEU, ROUGE-LCS F1 and METEOR.

Composite BLEU here is the ARITHMETIC mean of the modified n-gram
precisions for n = 1..4 times the brevity penalty, not the geometric mean
of classic BLEU-4.  Sentence BLEU replaces a zero match count by
0.1 / max(denominator, 1); corpus BLEU pools counts and is unsmoothed.

METEOR is nltk's single-reference scorer (exact, Porter stem, synonym
stages).  No lexical database is bundled: the synonym stage reads a plain
word -> synonyms table through ``SynonymTable`` and is empty by default.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from nltk.stem.porter import PorterStemmer
from nltk.translate.meteor_score import single_meteor_score
from nltk.util import ngrams

from .errors import EmptyCorpus, EmptyInput, EmptyReference, EvalError

MAX_N = 4
SMOOTH_EPS = 0.1
METEOR_ALPHA, METEOR_BETA, METEOR_GAMMA = 0.9, 3.0, 0.5

_stemmer = PorterStemmer()

Tokens = Sequence[str]


# ── BLEU ─────────────────────────────────────────────────────────────────────

def _clipped_counts(candidate: Tokens, reference: Tokens, n: int) -> Tuple[int, int]:
    """(clipped matches, candidate n-gram count) for order n."""
    cand = Counter(ngrams(candidate, n))
    ref = Counter(ngrams(reference, n))
    matched = sum(min(count, ref[g]) for g, count in cand.items())
    return matched, sum(cand.values())


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    if candidate_len > reference_len:
        return 1.0
    if candidate_len == 0:
        return 0.0
    return math.exp(1.0 - reference_len / candidate_len)


def sentence_bleu(candidate: Tokens, reference: Tokens) -> float:
    if not reference:
        raise EmptyReference("sentence_bleu needs a non-empty reference")
    precisions = []
    for n in range(1, MAX_N + 1):
        matched, total = _clipped_counts(candidate, reference, n)
        denom = max(total, 1)
        precisions.append(matched / denom if matched else SMOOTH_EPS / denom)
    return brevity_penalty(len(candidate), len(reference)) * sum(precisions) / MAX_N


def corpus_bleu(pairs: Sequence[Tuple[Tokens, Tokens]]) -> float:
    if not pairs:
        raise EmptyCorpus("corpus_bleu needs at least one pair")
    matched = [0] * MAX_N
    totals = [0] * MAX_N
    cand_len = ref_len = 0
    for candidate, reference in pairs:
        if not reference:
            raise EmptyReference("corpus_bleu: a reference is empty")
        cand_len += len(candidate)
        ref_len += len(reference)
        for n in range(1, MAX_N + 1):
            m, t = _clipped_counts(candidate, reference, n)
            matched[n - 1] += m
            totals[n - 1] += t
    precisions = [m / t if t else 0.0 for m, t in zip(matched, totals)]
    return brevity_penalty(cand_len, ref_len) * sum(precisions) / MAX_N


# ── ROUGE-L ──────────────────────────────────────────────────────────────────

def lcs_length(a: Tokens, b: Tokens) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_lcs_f1(candidate: Tokens, reference: Tokens) -> float:
    if not candidate or not reference:
        raise EmptyInput("rouge_lcs_f1 needs non-empty candidate and reference")
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(candidate), lcs / len(reference)
    return 2 * p * r / (p + r)


# ── METEOR ───────────────────────────────────────────────────────────────────

class _Lemma:
    def __init__(self, name: str):
        self._name = name

    def name(self) -> str:
        return self._name


class _Synset:
    def __init__(self, names: Set[str]):
        self._lemmas = [_Lemma(n) for n in sorted(names)]

    def lemmas(self) -> List[_Lemma]:
        return self._lemmas


class SynonymTable:
    """
    The ``wordnet`` interface nltk's METEOR needs, backed by a dict.

    nltk looks synonyms up after the stem stage, so keys and synonyms are
    stored lower-cased and stemmed.  Multi-word synonyms (with ``_``) are
    ignored by nltk.
    """

    def __init__(self, table: Optional[Mapping[str, Set[str]]] = None):
        self._table: Dict[str, Set[str]] = {}
        for word, syns in (table or {}).items():
            key = _stemmer.stem(word.lower())
            self._table.setdefault(key, set()).update(_stemmer.stem(s.lower()) for s in syns)

    def synsets(self, word: str) -> List[_Synset]:
        syns = self._table.get(word)
        return [_Synset(syns)] if syns else []


_NO_SYNONYMS = SynonymTable()


def meteor(
    candidate: Tokens,
    reference: Tokens,
    synonyms: Optional[Mapping[str, Set[str]]] = None,
) -> float:
    if not candidate or not reference:
        raise EmptyInput("meteor needs non-empty candidate and reference")
    table = SynonymTable(synonyms) if synonyms else _NO_SYNONYMS
    return float(single_meteor_score(
        list(reference), list(candidate), stemmer=_stemmer, wordnet=table,
        alpha=METEOR_ALPHA, beta=METEOR_BETA, gamma=METEOR_GAMMA,
    ))


# ── Reports ──────────────────────────────────────────────────────────────────

@dataclass
class MetricReport:
    s_bleu: float
    c_bleu: float
    rouge_lcs_f1: float
    meteor: float
    count: int = 0

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def as_percent(self) -> Dict[str, float]:
        return {k: round(100.0 * v, 2) for k, v in asdict(self).items() if k != "count"}

    def format(self) -> str:
        pct = self.as_percent()
        return (f"S-BLEU {pct['s_bleu']:.2f} | C-BLEU {pct['c_bleu']:.2f} | "
                f"ROUGE-L F1 {pct['rouge_lcs_f1']:.2f} | METEOR {pct['meteor']:.2f} | n={self.count}")


def score_corpus(
    predictions: Sequence[Tokens],
    references: Sequence[Tokens],
    synonyms: Optional[Mapping[str, Set[str]]] = None,
) -> MetricReport:
    """Per-sentence metrics averaged; an empty prediction scores 0 on each."""
    if len(predictions) != len(references):
        raise EvalError(f"{len(predictions)} predictions vs {len(references)} references")
    if not references:
        raise EmptyCorpus("nothing to score")
    s_bleu = rouge = met = 0.0
    for cand, ref in zip(predictions, references):
        s_bleu += sentence_bleu(cand, ref)
        if cand:
            rouge += rouge_lcs_f1(cand, ref)
            met += meteor(cand, ref, synonyms)
    n = len(references)
    return MetricReport(
        s_bleu=s_bleu / n,
        c_bleu=corpus_bleu(list(zip(predictions, references))),
        rouge_lcs_f1=rouge / n,
        meteor=met / n,
        count=n,
    )


def read_token_lines(path: Path) -> List[List[str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise EvalError(f"cannot read {path}: {e}") from e
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.split() for line in lines]


def score_files(pred_path: Path, ref_path: Path) -> MetricReport:
    """Score whitespace-tokenized files aligned line by line."""
    predictions = read_token_lines(pred_path)
    references = read_token_lines(ref_path)
    if len(predictions) != len(references):
        raise EvalError(
            f"line count mismatch: {pred_path} has {len(predictions)} lines, "
            f"{ref_path} has {len(references)}"
        )
    return score_corpus(predictions, references)
