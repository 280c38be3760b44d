# Trees Module
from .rules import SplitRule, RuleSpace, RuleSpaceCache, collect_candidate_rules, has_candidate_rules
from .tree import Tree, RoutingError, InvalidProposal, LEAF
from .ensemble import Ensemble

__all__ = [
    "SplitRule",
    "RuleSpace",
    "RuleSpaceCache",
    "collect_candidate_rules",
    "has_candidate_rules",
    "Tree",
    "RoutingError",
    "InvalidProposal",
    "LEAF",
    "Ensemble",
]
