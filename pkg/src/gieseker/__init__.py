"""Exact fiber calculus for Gieseker vector bundle data and generalized isomorphisms."""

from .exactlin import Matrix, Subspace, parse_rational, format_rational, solve_feasible
from .chainbundle import ChainBundle, is_admissible, section_space, v_subspaces, random_chain
from .gvbd import AttachedChain, GiesekerDatum, admissible_pair, datum_equivalent, random_datum
from .geniso import BfMorphism, GeneralizedIsomorphism, validate_bf, validate_gi, gi_equivalent, grassmannian_point
from .correspondence import contract_step, insert_step, gvbd_to_gi, gi_to_gvbd, roundtrip_check, normal_form_bf

__version__ = "0.1.0"

__all__ = [
    "Matrix", "Subspace", "parse_rational", "format_rational", "solve_feasible",
    "ChainBundle", "is_admissible", "section_space", "v_subspaces", "random_chain",
    "AttachedChain", "GiesekerDatum", "admissible_pair", "datum_equivalent", "random_datum",
    "BfMorphism", "GeneralizedIsomorphism", "validate_bf", "validate_gi", "gi_equivalent", "grassmannian_point",
    "contract_step", "insert_step", "gvbd_to_gi", "gi_to_gvbd", "roundtrip_check", "normal_form_bf",
]
