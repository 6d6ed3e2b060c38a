"""Class affinity scaling of texts between reference classes."""

from .affinity import (
    AffinityFit,
    ContrastBasis,
    contrast_basis,
    estimate_affinity,
    expected_information,
    log_likelihood,
    observed_information,
    score,
    theta_from_beta,
    wald_se,
)
from .baselines import (
    DictionaryScorer,
    dictionary_score,
    maxmargin_score,
    naive_bayes_logodds,
    wordscore_text,
    wordscore_vector,
)
from .bootstrap import BootstrapResult, bootstrap_affinity, bootstrap_corpus, resample_document
from .corpus import (
    CountVector,
    Document,
    TokenizerOptions,
    Vocabulary,
    build_vocabulary,
    count_tokens,
    default_stopwords,
    read_jsonl,
    tokenize,
)
from .diagnostics import aggregate_influence, influence, influence_exact, keyness_g2
from .reference import ReferenceModel, estimate_reference, load_model, save_model

__version__ = "0.1.0"
