"""gramforge: oracle-guided link-grammar induction at desk scale.

The toolkit chains a sequence-probability oracle (a deterministic n-gram
model, or a remote masked-LM service) through word-sense induction,
word-category formation, and incremental link-grammar rule evaluation.
"""

from .errors import (
    ConfigError,
    DataError,
    GenerationError,
    GrammarConsistencyError,
    GrammarError,
    GramforgeError,
    OracleUnavailableError,
    OutOfVocabularyError,
)
from .oracle import (
    BOUNDARY,
    MASK,
    MaskedQuery,
    NgramOracle,
    SequenceOracle,
    SequenceScore,
    TokenSequence,
    backward_logprob,
    forward_logprob,
    load_ngram_oracle,
    save_ngram_oracle,
    sequence_score,
    train_ngram_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY",
    "MASK",
    "MaskedQuery",
    "NgramOracle",
    "SequenceOracle",
    "SequenceScore",
    "TokenSequence",
    "backward_logprob",
    "forward_logprob",
    "load_ngram_oracle",
    "save_ngram_oracle",
    "sequence_score",
    "train_ngram_oracle",
    "ConfigError",
    "DataError",
    "GenerationError",
    "GrammarConsistencyError",
    "GrammarError",
    "GramforgeError",
    "OracleUnavailableError",
    "OutOfVocabularyError",
    "__version__",
]
