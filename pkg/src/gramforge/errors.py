"""Exception hierarchy shared across the toolkit."""


class GramforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(GramforgeError):
    """Invalid or missing configuration."""


class DataError(GramforgeError):
    """Malformed corpus, matrix, or model data."""


class OracleUnavailableError(GramforgeError):
    """The sequence-probability oracle could not answer (e.g. remote failure)."""


class OutOfVocabularyError(GramforgeError):
    """A token was not in the oracle's vocabulary and strict mode is on."""


class GrammarError(GramforgeError):
    """Invalid grammar, rule, or linkage."""


class GrammarConsistencyError(GrammarError):
    """A rule references a peer that lacks the counterpart connector."""


class GenerationError(GrammarError):
    """Sentence generation exhausted its retry budget."""
