from ._trisemi import (
    Generators,
    InvalidInput,
    approx,
    default_generators,
    delta_chain,
    diag,
    eval_word,
    lambda_bound,
    verify,
    word_error,
)

__all__ = [
    "Generators",
    "InvalidInput",
    "approx",
    "default_generators",
    "delta_chain",
    "diag",
    "eval_word",
    "lambda_bound",
    "verify",
    "word_error",
]
