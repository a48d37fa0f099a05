"""Dataset parsing, tokenization and bag-of-words features.

The input format is the tab separated phrase file used by the Rotten
Tomatoes sentiment task::

    PhraseId<TAB>SentenceId<TAB>Phrase<TAB>Sentiment

Unlabeled files (no ``Sentiment`` column) are accepted with
``require_labels=False`` so that trained models can be applied to them.
"""

from __future__ import annotations

import enum
import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from primalsvm.numerics import SparseVector

HEADER = ("PhraseId", "SentenceId", "Phrase", "Sentiment")
PUNCTUATION = ",.!?;:'\"()-"
_STRIP_TABLE = str.maketrans("", "", PUNCTUATION)


class ParseError(ValueError):
    """Raised for malformed dataset lines; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class FeatureMode(enum.Enum):
    BINARY = "bin"
    FREQUENCY = "freq"


@dataclass(frozen=True)
class RawRecord:
    phrase_id: int
    sentence_id: int
    phrase: str
    sentiment: Optional[int]


@dataclass(frozen=True)
class Instance:
    features: SparseVector
    sentiment: Optional[int]
    binary_label: int


@dataclass(frozen=True)
class CorpusStats:
    n_instances: int
    n_distinct_words: int
    avg_words_per_phrase: float
    avg_phrases_per_word: float


class Vocabulary:
    """Token to dense index map; indices follow first appearance."""

    def __init__(self, words: Iterable[str] = ()):
        self.word_to_index = {}
        for w in words:
            if w not in self.word_to_index:
                self.word_to_index[w] = len(self.word_to_index)

    @property
    def size(self) -> int:
        return len(self.word_to_index)

    def __len__(self):
        return len(self.word_to_index)

    def __contains__(self, word):
        return word in self.word_to_index

    def __getitem__(self, word):
        return self.word_to_index[word]

    def words(self) -> List[str]:
        return list(self.word_to_index)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.word_to_index == other.word_to_index

    def __repr__(self):
        return f"Vocabulary(size={self.size})"


def parse_tsv(stream: TextIO, require_labels: bool = True) -> List[RawRecord]:
    """Parse a phrase TSV stream into records, in file order."""
    lines = iter(stream)
    try:
        header = next(lines)
    except StopIteration:
        raise ParseError(1, "empty input, expected a header line") from None
    columns = tuple(header.rstrip("\r\n").split("\t"))
    if columns == HEADER:
        labeled = True
    elif columns == HEADER[:3] and not require_labels:
        labeled = False
    else:
        raise ParseError(1, f"unexpected header {columns!r}")

    n_fields = 4 if labeled else 3
    records = []
    seen_ids = set()
    for lineno, line in enumerate(lines, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != n_fields:
            raise ParseError(lineno, f"expected {n_fields} fields, got {len(fields)}")
        try:
            phrase_id = int(fields[0])
            sentence_id = int(fields[1])
            sentiment = int(fields[3]) if labeled else None
        except ValueError:
            raise ParseError(lineno, "non-integer id or sentiment") from None
        if sentiment is not None and not 0 <= sentiment <= 4:
            raise ParseError(lineno, f"sentiment {sentiment} outside 0..4")
        if phrase_id in seen_ids:
            raise ParseError(lineno, f"duplicate PhraseId {phrase_id}")
        seen_ids.add(phrase_id)
        records.append(RawRecord(phrase_id, sentence_id, fields[2], sentiment))
    return records


def read_tsv(path, require_labels: bool = True) -> List[RawRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_tsv(fh, require_labels=require_labels)


def format_tsv(records: Sequence[RawRecord]) -> str:
    out = io.StringIO()
    out.write("\t".join(HEADER) + "\n")
    for r in records:
        out.write(f"{r.phrase_id}\t{r.sentence_id}\t{r.phrase}\t{r.sentiment}\n")
    return out.getvalue()


def tokenize(phrase: str) -> List[str]:
    # split first, then strip characters; tokens left empty are dropped
    tokens = (t.lower().translate(_STRIP_TABLE) for t in phrase.split())
    return [t for t in tokens if t]


def build_vocabulary(records: Sequence[RawRecord]) -> Vocabulary:
    if not records:
        raise ValueError("cannot build a vocabulary from zero records")
    vocab = Vocabulary(tok for r in records for tok in tokenize(r.phrase))
    if vocab.size == 0:
        raise ValueError("no tokens found in any phrase")
    return vocab


def featurize(tokens: Sequence[str], vocab: Vocabulary, mode: FeatureMode) -> SparseVector:
    counts = Counter(vocab.word_to_index[t] for t in tokens if t in vocab.word_to_index)
    if not counts:
        return SparseVector.empty()
    idx = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
    if mode is FeatureMode.BINARY:
        vals = np.ones(len(idx))
    else:
        vals = np.array([counts[i] for i in idx], dtype=np.float64)
    return SparseVector(idx, vals)


def binarize_label(sentiment: int) -> int:
    if sentiment not in (0, 1, 2, 3, 4):
        raise ValueError(f"sentiment must be in 0..4, got {sentiment!r}")
    return 1 if sentiment >= 3 else -1


def make_instances(records: Sequence[RawRecord], vocab: Vocabulary,
                   mode: FeatureMode) -> List[Instance]:
    out = []
    for r in records:
        label = binarize_label(r.sentiment) if r.sentiment is not None else 0
        out.append(Instance(featurize(tokenize(r.phrase), vocab, mode), r.sentiment, label))
    return out


def corpus_stats(instances: Sequence[Instance], vocab: Vocabulary) -> CorpusStats:
    """Table-style statistics over featurized instances.

    Token occurrences need multiplicity, so instances should be built in
    frequency mode; in binary mode the per-phrase word count collapses to
    distinct words.
    """
    if not instances:
        raise ValueError("corpus_stats needs at least one instance")
    total_tokens = sum(float(inst.features.values.sum()) for inst in instances)
    incidence = sum(len(inst.features) for inst in instances)
    return CorpusStats(
        n_instances=len(instances),
        n_distinct_words=vocab.size,
        avg_words_per_phrase=total_tokens / len(instances),
        avg_phrases_per_word=incidence / vocab.size if vocab.size else 0.0,
    )


def synth_corpus(seed: int, n: int, vocab_spec: Tuple[int, int, int] = (20, 20, 40),
                 len_range: Tuple[int, int] = (3, 10)) -> List[RawRecord]:
    """Deterministic synthetic phrase corpus with ordinal sentiment.

    Words come from three lexicons (``pos1..``, ``neg1..``, ``neutral1..``),
    drawn uniformly from their union. Sentiment is set by the balance
    ``#pos - #neg``: >=2 -> 4, 1 -> 3, 0 -> 2, -1 -> 1, <=-2 -> 0.
    """
    n_pos, n_neg, n_neu = vocab_spec
    lo, hi = len_range
    if n < 1 or min(vocab_spec) < 1 or lo > hi or lo < 1:
        raise ValueError("invalid synthetic corpus parameters")
    lexicon = ([f"pos{i}" for i in range(1, n_pos + 1)]
               + [f"neg{i}" for i in range(1, n_neg + 1)]
               + [f"neutral{i}" for i in range(1, n_neu + 1)])
    rng = np.random.Generator(np.random.PCG64(seed))
    records = []
    for i in range(n):
        length = int(rng.integers(lo, hi + 1))
        words = [lexicon[j] for j in rng.integers(0, len(lexicon), size=length)]
        records.append(RawRecord(i + 1, i // 10 + 1, " ".join(words), synth_sentiment(words)))
    return records


def synth_sentiment(words: Sequence[str]) -> int:
    balance = sum(w.startswith("pos") for w in words) - sum(w.startswith("neg") for w in words)
    return 2 + max(-2, min(2, balance))
