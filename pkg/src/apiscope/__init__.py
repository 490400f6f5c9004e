"""apiscope: find discussion threads that refer to a given Java API method.

Combines a type-scoping syntactic score over API candidates with a learned
semantic relevance score over paragraph/code pair embeddings, fused as
C = x * A + (1 - x) * B against a relevance threshold.
"""

from .corpus import ApiMention, ApiMethod, Thread, candidate_set, find_potential_threads, split_fqn
from .embedding import HashProvider, PairText, RelevanceEmbedding, build_pair
from .fusion import classify_thread, joint_score, tune_weighting_factor
from .typescope import thread_syntactic_score

__version__ = "0.1.0"

__all__ = [
    "ApiMention",
    "ApiMethod",
    "HashProvider",
    "PairText",
    "RelevanceEmbedding",
    "Thread",
    "build_pair",
    "candidate_set",
    "classify_thread",
    "find_potential_threads",
    "joint_score",
    "split_fqn",
    "thread_syntactic_score",
    "tune_weighting_factor",
    "__version__",
]
