import random

import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from vkn.engine import (
    COMFORT_MODEL_ID,
    ModelBytecode,
    NoPlan,
    PlanStepError,
    comfort_description,
    execute,
    execute_plan,
    make_bytecode,
    plan_composition,
    plan_compute_ms,
)
from vkn.ldm import KnowledgeBase, LdmStore
from vkn.semantic import SemanticRegistry, ValueDomain, make_item, parse_semantic_name
from vkn.vkmd import parse_vkmd

from oracles import brute_force_plan
from planner_cases import random_kb

COMFORT_INPUTS = ["Road.Traffic", "Road.Visibility", "TwoWheelers.Concentration"]


def test_comfort_plan(comfort_kb):
    plan = plan_composition(comfort_kb, "Road.ComfortLevel", COMFORT_INPUTS, 3)
    assert plan.steps == (COMFORT_MODEL_ID,)
    assert plan.leaf_inputs == {parse_semantic_name(n) for n in COMFORT_INPUTS}


def test_goal_available_is_empty_plan(comfort_kb):
    plan = plan_composition(comfort_kb, "Road.Traffic", ["Road.Traffic"], 1)
    assert plan.steps == () and not plan.leaf_inputs


def test_no_plan(comfort_kb):
    with pytest.raises(NoPlan):
        plan_composition(comfort_kb, "Road.ComfortLevel", ["Road.Traffic"], 3)


def test_max_depth_must_be_positive(comfort_kb):
    with pytest.raises(ValueError):
        plan_composition(comfort_kb, "Road.ComfortLevel", COMFORT_INPUTS, 0)


REG = SemanticRegistry([(n, ValueDomain.symbolic("LO", "HI")) for n in ("X.v", "Y.v", "Z.v", "W.v")])


def chain_kb():
    kb = KnowledgeBase()
    kb.register_description(parse_vkmd("model m1\ninput x : X.v\noutput y : Y.v\n"))
    kb.register_description(parse_vkmd("model m2\ninput y : Y.v\noutput z : Z.v\n"))
    kb.install_bytecode(ModelBytecode("m1", 100, 3, lambda ins: "HI" if ins["x"].value == "LO" else "LO"))
    kb.install_bytecode(ModelBytecode("m2", 100, 4, lambda ins: ins["y"].value))
    return kb


def test_chain_plan():
    plan = plan_composition(chain_kb(), "Z.v", ["X.v"], 4)
    assert plan.steps == ("m1", "m2")
    assert plan.leaf_inputs == {parse_semantic_name("X.v")}
    with pytest.raises(NoPlan):
        plan_composition(chain_kb(), "Z.v", ["X.v"], 1)


def test_cycle_is_unreachable():
    kb = KnowledgeBase()
    kb.register_description(parse_vkmd("model a\ninput y : Y.v\noutput x : X.v\n"))
    kb.register_description(parse_vkmd("model b\ninput x : X.v\noutput y : Y.v\n"))
    with pytest.raises(NoPlan):
        plan_composition(kb, "X.v", [], 5)


def test_cycle_broken_by_third_model():
    kb = KnowledgeBase()
    kb.register_description(parse_vkmd("model a\ninput y : Y.v\noutput x : X.v\n"))
    kb.register_description(parse_vkmd("model b\ninput x : X.v\noutput y : Y.v\n"))
    kb.register_description(parse_vkmd("model c\ninput w : W.v\noutput y : Y.v\n"))
    assert plan_composition(kb, "X.v", ["W.v"], 5).steps == ("c", "a")


def test_tie_break_lexicographic():
    kb = KnowledgeBase()
    kb.register_description(parse_vkmd("model zeta\ninput x : X.v\noutput y : Y.v\n"))
    kb.register_description(parse_vkmd("model alpha\ninput x : X.v\noutput y : Y.v\n"))
    assert plan_composition(kb, "Y.v", ["X.v"], 1).steps == ("alpha",)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_matches_brute_force(seed, depth):
    kb, models, goal, available = random_kb(random.Random(seed))
    expected = brute_force_plan(models, goal, available, depth)
    if expected is None:
        with pytest.raises(NoPlan):
            plan_composition(kb, goal, available, depth)
        return
    plan = plan_composition(kb, goal, available, depth)
    assert tuple(sorted(plan.steps)) == expected
    assert plan == plan_composition(kb, goal, available, depth)
    # each step's inputs come from leaves or earlier outputs
    have = set(plan.leaf_inputs)
    assert have <= available
    for m in plan.steps:
        assert models[m][0] <= have
        have |= models[m][1]
    assert not plan.steps or goal in have


def store_with(*items):
    s = LdmStore(REG)
    for it in items:
        s.insert(it)
    return s


def test_execute_plan_single_step_matches_direct(comfort_kb):
    items = [make_item("t", "Road.Traffic", "FLUID", "A", (0, 100)),
             make_item("v", "Road.Visibility", "CLEAR", "A", (0, 100)),
             make_item("w", "TwoWheelers.Concentration", "MEDIUM", "A", (0, 100))]
    store = LdmStore()
    for it in items:
        store.insert(it)
    plan = plan_composition(comfort_kb, "Road.ComfortLevel", COMFORT_INPUTS, 1)
    got = execute_plan(comfort_kb, store, plan, "A", 50, 128)
    direct = execute(comfort_description(), make_bytecode(COMFORT_MODEL_ID),
                     dict(zip(["traffic", "visibility", "twoWheelers"], items)), 50, 128)
    assert got == direct
    assert got.value == "FAIR"


def test_execute_plan_chain_keeps_intermediate():
    kb = chain_kb()
    store = store_with(make_item("x", "X.v", "LO", "A", (0, 100), registry=REG))
    plan = plan_composition(kb, "Z.v", ["X.v"], 4)
    final = execute_plan(kb, store, plan, "A", 10, 16)
    # manual trace: m1 maps LO -> HI, m2 copies it
    mid = store.query("Y.v", "A", 10)
    assert mid is not None and mid.value == "HI" and mid.provenance.model_id == "m1"
    assert final.value == "HI" and final.provenance.input_ids == (mid.item_id,)
    assert plan_compute_ms(kb, plan) == 7


def test_execute_plan_missing_bytecode_names_step():
    kb = chain_kb()
    del kb.bytecodes["m2"]
    store = store_with(make_item("x", "X.v", "LO", "A", (0, 100), registry=REG))
    plan = plan_composition(kb, "Z.v", ["X.v"], 4)
    with pytest.raises(PlanStepError) as exc:
        execute_plan(kb, store, plan, "A", 10, 16)
    assert exc.value.step == 2 and exc.value.model_id == "m2"
    assert "step 2" in str(exc.value)
