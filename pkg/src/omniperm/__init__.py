"""Finite permutation quotients of free products of finite groups with prescribed element orders."""

from .groups import FiniteGroup, Permutation, validate_group
from .words import FreeProduct
from .action_graph import ActionGraph, image_order, syllable_girth, validate
from .base_quotient import BudgetExceeded, QuotientSpec, certify, random_free_action_graph, search_base_quotient
from .surgery import build_delta, build_lambda, plan_surgery, verify_confinement
from .omnipotence import PipelineParams, combine, combine_orders, run_pipeline, stabilize, measure_family

__all__ = [
    "FiniteGroup", "Permutation", "validate_group", "FreeProduct", "ActionGraph", "image_order",
    "syllable_girth", "validate", "BudgetExceeded", "QuotientSpec", "certify", "random_free_action_graph",
    "search_base_quotient", "build_delta", "build_lambda", "plan_surgery", "verify_confinement",
    "PipelineParams", "combine", "combine_orders", "run_pipeline", "stabilize", "measure_family",
]
