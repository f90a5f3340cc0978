"""Class-based bigram language models, perplexity evaluation and
log-probability attribution."""

__version__ = "0.1.0"
