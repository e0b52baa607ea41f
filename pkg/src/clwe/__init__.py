"""Cross-lingual word embedding alignment and retrofitting toolkit.

Fits supervised linear projections between monolingual embedding spaces
(Procrustes, least squares, CCA, or relaxed-CSLS refinement), retrofits
the aligned spaces to training dictionaries (optionally augmented with a
synthetic dictionary of mutual CSLS nearest neighbors), and evaluates
bilingual lexicon induction precision@1 on train and test splits.
"""

from . import _threads  # noqa: F401  must precede any numpy import

from .dictionary import (
    IndexedDictionary,
    dictionary_words,
    index_dictionary,
    merge_dictionaries,
    parse_dictionary,
    save_dictionary,
)
from .embeddings import (
    EmbeddingMatrix,
    Vocabulary,
    iterative_normalize,
    load_embeddings,
    save_embeddings,
    unit_normalize,
)
from .errors import ClweError
from .neighbors import (
    BliReport,
    CslsIndex,
    build_csls_index,
    csls_translate,
    evaluate_bli,
    induce_synthetic_dictionary,
    topk_cosine,
    write_bli_report,
)
from .projection import (
    AlignedEmbeddings,
    LinearMap,
    RcslsConfig,
    apply_projection,
    fit_cca,
    fit_least_squares,
    fit_procrustes,
    fit_rcsls,
    load_linear_map,
    rcsls_loss_and_grad,
    save_linear_map,
)
from .retrofit import (
    RetrofitConfig,
    RetrofitResult,
    retrofit,
    retrofit_objective,
    write_objective_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedEmbeddings",
    "BliReport",
    "ClweError",
    "CslsIndex",
    "EmbeddingMatrix",
    "IndexedDictionary",
    "LinearMap",
    "RcslsConfig",
    "RetrofitConfig",
    "RetrofitResult",
    "Vocabulary",
    "apply_projection",
    "build_csls_index",
    "csls_translate",
    "dictionary_words",
    "evaluate_bli",
    "fit_cca",
    "fit_least_squares",
    "fit_procrustes",
    "fit_rcsls",
    "index_dictionary",
    "induce_synthetic_dictionary",
    "iterative_normalize",
    "load_embeddings",
    "load_linear_map",
    "merge_dictionaries",
    "parse_dictionary",
    "rcsls_loss_and_grad",
    "retrofit",
    "retrofit_objective",
    "save_dictionary",
    "save_embeddings",
    "save_linear_map",
    "topk_cosine",
    "unit_normalize",
    "write_bli_report",
    "write_objective_trace",
]
