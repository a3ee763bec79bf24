"""Context-aware permission mediation.

Thin re-export of the compiled core. Structured results are plain dicts.
"""

from ._core import (  # noqa: F401
    AmbiguityError,
    ConflictError,
    Error,
    Gateway,
    Mediator,
    ParseError,
    TraceError,
    UnknownIdError,
    ValidationError,
    ablate,
    analyze,
    cross_validate,
    generate_corpus,
    hash_token,
    hoeffding_bound,
    personalize,
    porter_stem,
    render,
    split_identifier,
    text_tokens,
    train_models,
)

__version__ = "0.1.0"
