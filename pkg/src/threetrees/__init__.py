"""Embed the universal cover of a flip graph manifold into a product of three trees.

Typical use::

    from threetrees import load_config, build_instance, ThreeTreeEmbedding

    inst, c = build_instance(load_config("instance_a"))
    emb = ThreeTreeEmbedding().fit(c)
    emb.transform([0, 1, 2])
"""

from .complex import (
    BassSerreTree,
    ComplexVertex,
    TotalComplex,
    build_complex,
    complex_distance,
    doubling_check,
    flip_image,
    measure_rho,
    sample_core_pairs,
)
from .config import InstanceConfig, load_config
from .embedding import InstanceConstants, ProductPoint, ThreeTreeEmbedding, embed, f0, fi, theoretical_constants
from .exceptions import *  # noqa: F403
from .generate import build_instance, generate_instance
from .harness import export_artifacts, run_bench, run_distortion, run_invariants
from .pathcraft import build_special_path, validate_path
from .pieces import Base, Line, Piece, make_pants_piece, make_synthetic_piece, verify_piece_axioms
from .quotient import QuotientTree, build_quotient_tree, build_quotient_trees, incremental_treeness_trace
from .trees import MetricTree, TreeLine, path_tree, regular_tree, tree_from_edges

__version__ = "0.1.0"
