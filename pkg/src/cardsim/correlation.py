"""Experiment configurations and NLP-vs-participant correlation runs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from cardsim.cardsort import CardSortStudy, participant_similarity
from cardsim.errors import CardsimError, ConfigError, InvalidDimension
from cardsim.similarity import SimilarityMatrix, cosine_similarity_matrix, pearson, upper_triangle
from cardsim.text import Corpus, PreprocessConfig, preprocess
from cardsim.vectors import bow_matrix, build_vocabulary, lsa_reduce, tfidf_matrix

METHODS = ("bow", "tfidf", "lsa", "wordnet")
DEFAULT_LSA_DIMS = 10


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    lsa_dims: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if (self.method == "lsa") != (self.lsa_dims is not None):
            raise ConfigError("lsa_dims is required for method 'lsa' and forbidden otherwise")
        if self.method == "wordnet":
            if self.preprocess.normalization == "stem":
                raise ConfigError("the WordNet method cannot be combined with stemming")
            if self.preprocess.orders != (1,):
                raise ConfigError("the WordNet method only supports unigrams")

    @property
    def needs_wordnet(self) -> bool:
        return self.method == "wordnet" or self.preprocess.normalization == "lemma"

    def as_dict(self) -> dict:
        p = self.preprocess
        d = {
            "method": self.method,
            "stopwords_included": p.include_stopwords,
            "normalization": p.normalization,
            "ngram": p.ngram_order if isinstance(p.ngram_order, int) else list(p.ngram_order),
        }
        if self.lsa_dims is not None:
            d["lsa_dims"] = self.lsa_dims
        return d

    @property
    def label(self) -> str:
        d = self.as_dict()
        tail = f"/k={self.lsa_dims}" if self.lsa_dims is not None else ""
        stop = "yes" if d["stopwords_included"] else "no"
        return f"{self.method}/stop={stop}/norm={d['normalization']}/n={d['ngram']}{tail}"


@dataclass(frozen=True)
class CorrelationRecord:
    config: ExperimentConfig
    pearson_r: float

    @property
    def r_squared(self) -> float:
        return self.pearson_r * self.pearson_r

    def as_dict(self) -> dict:
        d = self.config.as_dict()
        d["pearson_r"] = self.pearson_r
        d["r_squared"] = self.r_squared
        return d


def default_grid(lsa_dims: int = DEFAULT_LSA_DIMS, stopwords: Optional[frozenset] = None) -> list[ExperimentConfig]:
    """The 36 frequency cells (3 methods x stop words x stemming x n) followed
    by the 4 WordNet cells (stop words x lemma)."""
    extra = {} if stopwords is None else {"stopword_list": stopwords}
    grid = []
    for method in ("bow", "tfidf", "lsa"):
        for include in (False, True):
            for norm in ("none", "stem"):
                for n in (1, 2, 3):
                    pre = PreprocessConfig(include_stopwords=include, normalization=norm, ngram_order=n, **extra)
                    grid.append(ExperimentConfig(method, pre, lsa_dims if method == "lsa" else None))
    for include in (False, True):
        for norm in ("none", "lemma"):
            pre = PreprocessConfig(include_stopwords=include, normalization=norm, ngram_order=1, **extra)
            grid.append(ExperimentConfig("wordnet", pre))
    return grid


def _doc_term(corpus: Corpus, pre: PreprocessConfig, db):
    lemmatizer = db.lemmatize if db is not None else None
    grams = [preprocess(item, pre, lemmatizer) for item in corpus]
    return bow_matrix(grams, build_vocabulary(grams))


def similarity_for(corpus: Corpus, cfg: ExperimentConfig, db=None) -> SimilarityMatrix:
    if cfg.needs_wordnet and db is None:
        raise ConfigError(f"configuration {cfg.label} needs a WordNet database")
    if cfg.method == "wordnet":
        from cardsim.wordnet import glao_similarity_matrix

        return glao_similarity_matrix(corpus, cfg.preprocess, db)
    counts = _doc_term(corpus, cfg.preprocess, db)
    if cfg.method == "bow":
        rep = counts
    elif cfg.method == "tfidf":
        rep = tfidf_matrix(counts)
    else:
        rep = lsa_reduce(tfidf_matrix(counts), cfg.lsa_dims)
    return cosine_similarity_matrix(rep, corpus.ids)


def correlate(a: SimilarityMatrix, b: SimilarityMatrix) -> float:
    """Pearson r between the strict upper triangles of two similarity matrices."""
    if tuple(a.order) != tuple(b.order):
        raise ConfigError("similarity matrices use different item orders")
    return pearson(upper_triangle(a), upper_triangle(b))


def run_config(
    corpus: Corpus,
    study: CardSortStudy,
    cfg: ExperimentConfig,
    db=None,
    participant: Optional[SimilarityMatrix] = None,
) -> CorrelationRecord:
    if tuple(study.item_ids) != tuple(corpus.ids):
        raise ConfigError("card-sort items must match the corpus order")
    if participant is None:
        participant = participant_similarity(study)
    sim = similarity_for(corpus, cfg, db)
    return CorrelationRecord(cfg, correlate(sim, participant))


def sweep(
    corpus: Corpus,
    study: CardSortStudy,
    grid: Sequence[ExperimentConfig],
    db=None,
    workers: int = 1,
) -> list[CorrelationRecord]:
    """One record per configuration, in grid order regardless of ``workers``."""
    grid = list(grid)
    if not grid:
        return []
    participant = participant_similarity(study)

    def one(indexed):
        idx, cfg = indexed
        try:
            return run_config(corpus, study, cfg, db, participant)
        except CardsimError as exc:
            exc.config_index = idx
            exc.args = (f"config #{idx} ({cfg.label}): {exc}",) + exc.args[1:]
            raise

    if workers <= 1:
        return [one(pair) for pair in enumerate(grid)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, enumerate(grid)))


def best_preprocess(stopwords: Optional[frozenset] = None) -> PreprocessConfig:
    extra = {} if stopwords is None else {"stopword_list": stopwords}
    return PreprocessConfig(include_stopwords=False, normalization="none", ngram_order=1, **extra)


def lsa_dimension_sweep(
    corpus: Corpus,
    study: CardSortStudy,
    k_range: Iterable[int],
    pre: Optional[PreprocessConfig] = None,
    workers: int = 1,
) -> list[tuple[int, float]]:
    """``(k, r)`` for each LSA dimension, with stop words removed, no
    normalisation and unigrams unless ``pre`` says otherwise."""
    pre = best_preprocess() if pre is None else pre
    ks = list(k_range)
    counts = _doc_term(corpus, pre, None)
    limit = min(counts.values.shape)
    bad = [k for k in ks if not 1 <= k <= limit]
    if bad:
        raise InvalidDimension(f"LSA dimension {bad[0]} outside [1, {limit}] for this corpus")
    grid = [ExperimentConfig("lsa", pre, k) for k in ks]
    records = sweep(corpus, study, grid, None, workers)
    return [(rec.config.lsa_dims, rec.pearson_r) for rec in records]


def lsa_dimension_limit(corpus: Corpus, pre: Optional[PreprocessConfig] = None) -> int:
    pre = best_preprocess() if pre is None else pre
    return min(_doc_term(corpus, pre, None).values.shape)
