"""Finite diversities: constructors, the cut cone, l1 distortion and flow-cut gaps."""
from .core import (DistortionReport, DiversityError, GroundSet, IncompleteTableError,
                   SubsetVector, TabulatedDiversity, TabulatedMetric, ValidationReport,
                   distortion_of_map, induced_metric, reduced_d2_check, validate_diversity)
from .embed import K1Result, k1_of_hypergraph_search, min_distortion_l1
from .flowcut import (extract_tight_instance, gamma, max_hsp_dual, max_hsp_primal, min_hyp_cut,
                      verify_sandwich)
from .l1cone import (L1Certificate, L1Embedding, NotInCone, SplitSystem, chain_embedding,
                     cyclic_inequality_check, ep_condition_check, evaluate_split_system,
                     is_l1_embeddable, mobius_cut_weights)
from .linprog import LpProblem, LpSolution, solve_lp

__version__ = "0.1.0"

__all__ = [
    "DistortionReport", "DiversityError", "GroundSet", "IncompleteTableError", "SubsetVector",
    "TabulatedDiversity", "TabulatedMetric", "ValidationReport", "distortion_of_map",
    "induced_metric", "reduced_d2_check", "validate_diversity",
    "K1Result", "k1_of_hypergraph_search", "min_distortion_l1",
    "extract_tight_instance", "gamma", "max_hsp_dual", "max_hsp_primal", "min_hyp_cut",
    "verify_sandwich",
    "L1Certificate", "L1Embedding", "NotInCone", "SplitSystem", "chain_embedding",
    "cyclic_inequality_check", "ep_condition_check", "evaluate_split_system",
    "is_l1_embeddable", "mobius_cut_weights",
    "LpProblem", "LpSolution", "solve_lp",
]
