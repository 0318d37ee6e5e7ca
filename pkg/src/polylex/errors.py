"""Exception types shared across the package.

Everything raised here signals a data or validation problem (as opposed to
a usage/programming error), which the CLI maps to exit code 2.
"""


class PolylexError(ValueError):
    """Base class for data and validation failures."""


class IngestionError(PolylexError):
    """Raised when an input file cannot be decoded or parsed."""


class EmptyVocabularyError(PolylexError):
    """Raised when vocabulary construction yields no words."""


class UnembeddableTokenError(PolylexError):
    """Raised when a token has no word row and no usable subword n-grams."""


class UntranslatableDocumentError(PolylexError):
    """Raised when no token of a document contributes a translated vector."""


class PoolExhaustedError(PolylexError):
    """Raised when nearest-neighbor expansion runs out of pool documents."""
