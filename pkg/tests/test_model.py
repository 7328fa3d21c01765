import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from fracture import (IlpInstance, ParseError, components, evaluate, incidence_graph, parse_instance,
                      serialize_instance)
from fracture.model import Constraint, InstanceError, Variable
from fracture.reductions import gen_subset_sum
from oracles import nx_graph, straight_line_evaluate

FIG1_OPT = {"x1": 1, "x2": 2, "x3": 3, "x4": 4, "x5": 5, "x6": 6, "x7": 11, "y": 5}


def doc(variables, constraints):
    return json.dumps({"variables": variables, "constraints": constraints})


def test_figure1_parses(figure1):
    assert figure1.n_variables == 8
    assert figure1.n_constraints == 7
    assert figure1.c_A == 6
    assert figure1.c_b == 41


def test_empty_instance():
    inst = parse_instance(doc([], []))
    assert inst.n_variables == 0 and inst.n_constraints == 0
    assert components(inst) == []
    assert evaluate(inst, {}) == (True, 0)


def test_inequality_gets_slack():
    inst = parse_instance(doc([{"name": "x", "lower": 0, "upper": 10, "objective": 1}],
                              [{"name": "r", "coeffs": {"x": 1}, "relation": "<=", "rhs": 3}]))
    assert inst.n_variables == 2
    slack = inst.variables[1]
    assert slack.name == "_slack_r" and slack.lower == 0 and slack.upper == math.inf and slack.objective == 0
    assert dict(inst.constraints[0].coeffs) == {"x": 1, "_slack_r": 1}
    assert evaluate(inst, {"x": 2, "_slack_r": 1}) == (True, 2)


def test_greater_equal_slack_sign():
    inst = parse_instance(doc([{"name": "x", "lower": 0, "upper": 10}],
                              [{"name": "r", "coeffs": {"x": 2}, "relation": ">=", "rhs": 3}]))
    assert dict(inst.constraints[0].coeffs) == {"x": 2, "_slack_r": -1}


@pytest.mark.parametrize("variables,constraints,where", [
    ([{"name": "x"}], [{"name": "r", "coeffs": {"z": 1}, "rhs": 0}], "constraints[0].coeffs"),
    ([{"name": "x"}, {"name": "x"}], [], "variables[1]"),
    ([{"name": "x", "lower": 3, "upper": 2}], [], "variables[0]"),
    ([{"name": "x"}], [{"name": "r", "coeffs": {}, "rhs": 0}, {"name": "r", "coeffs": {}, "rhs": 0}],
     "constraints[1]"),
    ([{"name": "x", "lower": 1.5}], [], "variables[0].lower"),
    ([{"name": "x"}], [{"name": "r", "coeffs": {"x": 1}, "relation": "<", "rhs": 0}], "constraints[0].relation"),
    ([{"name": "_slack_r"}], [{"name": "r", "coeffs": {}, "relation": "<=", "rhs": 0}], "constraints[0]"),
])
def test_parse_errors_carry_location(variables, constraints, where):
    with pytest.raises(ParseError, match=r"^" + where.replace("[", r"\[").replace("]", r"\]")):
        parse_instance(doc(variables, constraints))


def test_malformed_json():
    with pytest.raises(ParseError, match="malformed JSON"):
        parse_instance(b"{nope")


def test_big_integers_round_trip_as_strings():
    big = 2 ** 70
    inst = parse_instance(doc([{"name": "x", "lower": 0, "upper": str(big), "objective": 1}],
                              [{"name": "r", "coeffs": {"x": str(big)}, "rhs": str(big * 3)}]))
    assert inst.variables[0].upper == big
    text = serialize_instance(inst)
    raw = json.loads(text)
    assert raw["variables"][0]["upper"] == str(big)
    assert raw["constraints"][0]["rhs"] == str(3 * big)
    assert parse_instance(text) == inst


def test_zero_coefficients_dropped():
    inst = parse_instance(doc([{"name": "x"}, {"name": "y"}], [{"name": "r", "coeffs": {"x": 0, "y": 2}, "rhs": 2}]))
    assert dict(inst.constraints[0].coeffs) == {"y": 2}


def test_direct_construction_checks_invariants():
    with pytest.raises(InstanceError):
        IlpInstance((Variable("x"),), (Constraint("r", {"x": 0}, 0),))
    with pytest.raises(InstanceError):
        IlpInstance((Variable("x", 1, 0),), ())


def test_figure1_incidence_graph(figure1):
    g = incidence_graph(figure1)
    assert g.n_vertices == 15
    y = figure1.var_index["y"]
    rows = [figure1.constraint_vertex(figure1.con_index[f"row{i}"]) for i in range(1, 7)]
    total = figure1.constraint_vertex(figure1.con_index["total"])
    assert list(g.adjacency[y]) == rows
    for i in range(1, 8):
        x = figure1.var_index[f"x{i}"]
        expected = [total] + ([rows[i - 1]] if i <= 6 else [])
        assert list(g.adjacency[x]) == expected
    assert g.n_edges == figure1.n_nonzeros == 19


def test_single_variable_graph():
    g = incidence_graph(IlpInstance((Variable("x"),), ()))
    assert g.n_vertices == 1 and g.n_edges == 0 and g.adjacency == ((),)


def test_subset_sum_is_a_star():
    g = incidence_graph(gen_subset_sum([1, 2, 3, 4, 5], 7))
    assert g.n_vertices == 6
    assert g.adjacency[5] == (0, 1, 2, 3, 4)
    assert all(g.adjacency[i] == (5,) for i in range(5))


def test_figure1_components(figure1):
    y = figure1.var_index["y"]
    total = figure1.constraint_vertex(figure1.con_index["total"])
    comps = components(figure1, {y, total})
    assert len(comps) == 7
    assert sorted(c.size for c in comps) == [1, 2, 2, 2, 2, 2, 2]
    for i, comp in enumerate(comps[:6]):
        assert comp.variables == (i,) and comp.constraints == (figure1.con_index[f"row{i + 1}"],)
    assert comps[6].variables == (6,) and comps[6].constraints == ()


def test_components_edge_cases(figure1):
    assert len(components(figure1)) == 1
    assert components(figure1, range(figure1.n_vertices)) == []
    with pytest.raises(ValueError, match="unknown vertex"):
        components(figure1, {15})


def test_evaluate_figure1(figure1):
    assert evaluate(figure1, FIG1_OPT) == (True, 168)
    assert evaluate(figure1, {**FIG1_OPT, "y": 6}) == (False, None)


def test_evaluate_all_zero():
    inst = IlpInstance((Variable("a", -1, 1, 3), Variable("b", 0, 5, -2)),
                       (Constraint("r", {"a": 1, "b": 4}, 0),))
    assert evaluate(inst, {"a": 0, "b": 0}) == (True, 0)


def test_evaluate_rejects_partial(figure1):
    with pytest.raises(ValueError, match="partial"):
        evaluate(figure1, {"x1": 1})
    with pytest.raises(ValueError, match="undeclared"):
        evaluate(figure1, {**FIG1_OPT, "w": 0})


# ------------------------------------------------------------- properties


def random_instance(rng, n_max=6, m_max=5, with_infinite=True):
    n = rng.randint(0, n_max)
    variables = []
    for i in range(n):
        lo = rng.randint(-4, 2)
        hi = rng.randint(lo, 4)
        if with_infinite and rng.random() < 0.15:
            lo = -math.inf
        if with_infinite and rng.random() < 0.15:
            hi = math.inf
        variables.append(Variable(f"v{i}", lo, hi, rng.randint(-3, 3)))
    constraints = []
    for j in range(rng.randint(0, m_max)):
        coeffs = {v.name: rng.choice([-3, -2, -1, 1, 2, 3]) for v in variables if rng.random() < 0.5}
        constraints.append(Constraint(f"r{j}", coeffs, rng.randint(-6, 6)))
    return IlpInstance(tuple(variables), tuple(constraints))


def test_evaluate_matches_straight_line_reevaluation():
    rng = random.Random(11)
    feasible = 0
    for _ in range(1000):
        inst = random_instance(rng)
        assignment = {v.name: rng.randint(-4, 4) for v in inst.variables}
        if rng.random() < 0.3 and inst.constraints:
            # nudge toward feasibility by fixing rhs to the current value
            c = inst.constraints[0]
            rhs = sum(a * assignment[k] for k, a in c.coeffs.items())
            inst = IlpInstance(inst.variables, (Constraint(c.name, c.coeffs, rhs),) + inst.constraints[1:])
        got = evaluate(inst, assignment)
        feasible += got[0]
        assert got == straight_line_evaluate(inst, assignment)
    assert feasible > 20


@st.composite
def instances(draw):
    return random_instance(random.Random(draw(st.integers(0, 10 ** 9))))


@settings(max_examples=150, deadline=None)
@given(instances())
def test_round_trip(inst):
    text = serialize_instance(inst)
    again = parse_instance(text)
    assert again == inst
    assert serialize_instance(again) == text


@settings(max_examples=150, deadline=None)
@given(instances(), st.randoms(use_true_random=False))
def test_edges_and_partition(inst, rnd):
    g = incidence_graph(inst)
    assert g.n_edges == inst.n_nonzeros == nx_graph(inst).number_of_edges()
    removed = {v for v in range(inst.n_vertices) if rnd.random() < 0.3}
    comps = components(inst, removed)
    seen = [v for c in comps for v in c.vertex_ids(inst.n_variables)]
    assert len(seen) == len(set(seen)) == inst.n_vertices - len(removed)
    assert set(seen) | removed == set(range(inst.n_vertices))
    mins = [min(c.vertex_ids(inst.n_variables)) for c in comps]
    assert mins == sorted(mins)
