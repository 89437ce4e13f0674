"""Species mention normalization against the NCBI taxonomy.

BM25 candidate generation over rank-partitioned taxonomy dictionaries,
pairwise reranking with argmax selection, and a filtered-accuracy
evaluation harness.
"""

__version__ = "0.1.0"
