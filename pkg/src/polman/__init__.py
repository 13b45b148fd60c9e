"""Embedding-aware polarization measurement and mitigation for signed networks."""
from .community import Partition, estimate_k, kmeans_partition, signed_louvain
from .embedding import AlignedEmbedding, EmbeddingMatrix, align, spectral_signed_embedding
from .graph import EdgeRecord, SignedGraph, build_graph, load_edge_list, read_edge_list
from .mitigation import MitigationParams, mitigate
from .polarization import measure, pairwise_polarization, select_polarized_pairs
from .spectral import SolverConfig, effective_resistance, quad_form, signed_laplacian

__version__ = "0.1.0"
