"""Vehicular knowledge networking: share model descriptions, delegate model execution."""

from .comfort import RouteDecision, decide_route, default_scenario
from .config import Scenario, ScenarioError, SimConstants, load_scenario
from .engine import (
    CompositionPlan,
    ModelBytecode,
    comfort_eval,
    execute,
    execute_plan,
    plan_composition,
)
from .ldm import KnowledgeBase, LdmStore
from .netsim import run_comparison, run_strategy_info_centric, run_strategy_vkn, transit_time
from .semantic import (
    ContentItem,
    SemanticName,
    SemanticRegistry,
    TimeInterval,
    ValueDomain,
    default_registry,
    make_item,
    parse_semantic_name,
    validate_value,
)
from .vkmd import ModelDescription, parse_vkmd, serialize_vkmd, validate_description

__version__ = "0.1.0"

__all__ = [
    "CompositionPlan",
    "ContentItem",
    "KnowledgeBase",
    "LdmStore",
    "ModelBytecode",
    "ModelDescription",
    "RouteDecision",
    "Scenario",
    "ScenarioError",
    "SemanticName",
    "SemanticRegistry",
    "SimConstants",
    "TimeInterval",
    "ValueDomain",
    "comfort_eval",
    "decide_route",
    "default_registry",
    "default_scenario",
    "execute",
    "execute_plan",
    "load_scenario",
    "make_item",
    "parse_semantic_name",
    "parse_vkmd",
    "plan_composition",
    "run_comparison",
    "run_strategy_info_centric",
    "run_strategy_vkn",
    "serialize_vkmd",
    "transit_time",
    "validate_description",
    "validate_value",
]
