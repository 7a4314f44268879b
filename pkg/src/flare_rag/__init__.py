"""User-controllable adaptive retrieval routing.

A linear query router blends a cost-optimized and a reliability-optimized
classifier through a single control parameter and dispatches each query to
no-retrieval, single-step, or multi-step execution. The package also ships
the labeling pipelines that produce the two training signals, a small BM25
retriever, a deterministic mock answerer for desk-scale runs, and an
evaluation harness that reports the accuracy / retrieval-step trade-off.
"""

__version__ = "0.1.0"

from .engine import Strategy

__all__ = ["Strategy", "__version__"]
