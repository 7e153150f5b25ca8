"""Context-aware hate speech detection over threaded news comments.

Two model families (sparse-feature logistic regression and a three-branch
recurrent network with attention), score ensembling, and a stratified
cross-validation harness.
"""

from .corpus import (
    Comment,
    Corpus,
    CorpusError,
    FoldAssignment,
    Thread,
    cohen_kappa,
    corpus_stats,
    load_corpus,
    make_folds,
    resolve_context,
    save_corpus,
    serialize_corpus,
)
from .ensemble import avg_ensemble, max_ensemble
from .features import (
    CategoryLexicon,
    EmotionLexicon,
    FeatureConfig,
    FeatureVector,
    Lexicons,
    Vocabulary,
    build_vocabulary,
    category_vector,
    char_ngrams,
    emotion_vector,
    featurize,
    load_category_lexicon,
    load_emotion_lexicon,
    tokenize,
    word_ngrams,
)
from .logreg import (
    ClassWeights,
    LogRegModel,
    balanced_class_weights,
    classify,
    predict_proba,
    train_logreg,
)

__all__ = [
    "Comment",
    "Corpus",
    "CorpusError",
    "FoldAssignment",
    "Thread",
    "cohen_kappa",
    "corpus_stats",
    "load_corpus",
    "make_folds",
    "resolve_context",
    "save_corpus",
    "serialize_corpus",
    "avg_ensemble",
    "max_ensemble",
    "CategoryLexicon",
    "EmotionLexicon",
    "FeatureConfig",
    "FeatureVector",
    "Lexicons",
    "Vocabulary",
    "build_vocabulary",
    "category_vector",
    "char_ngrams",
    "emotion_vector",
    "featurize",
    "load_category_lexicon",
    "load_emotion_lexicon",
    "tokenize",
    "word_ngrams",
    "ClassWeights",
    "LogRegModel",
    "balanced_class_weights",
    "classify",
    "predict_proba",
    "train_logreg",
]
