"""Equation-form integer programs, their incidence graph and components.

An instance maximizes ``sum(objective[v] * x[v])`` subject to one equation
per constraint and ``lower <= x <= upper``.  Infinite bounds are stored as
``-math.inf`` / ``math.inf``; every finite number is a Python ``int``.

Vertex ids of the incidence graph: variables take ``0..n-1`` in declaration
order, constraints take ``n..n+m-1``.
"""

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

INF = math.inf
JSON_SAFE = 2 ** 53
SLACK_PREFIX = "_slack_"

Assignment = Dict[str, int]


class InstanceError(ValueError):
    """An instance violates a structural invariant."""


class ParseError(InstanceError):
    """Instance or graph text could not be read; the message carries the location."""


@dataclass(frozen=True)
class Variable:
    name: str
    lower: object = -INF
    upper: object = INF
    objective: int = 0

    @property
    def bounded(self):
        return self.lower != -INF and self.upper != INF


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: Mapping[str, int]
    rhs: int = 0


@dataclass(frozen=True)
class IlpInstance:
    variables: Tuple[Variable, ...] = ()
    constraints: Tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        seen = set()
        for i, var in enumerate(self.variables):
            where = f"variables[{i}]"
            if var.name in seen:
                raise InstanceError(f"{where}: duplicate variable name {var.name!r}")
            seen.add(var.name)
            _check_bound(var.lower, f"{where}.lower", allowed=-INF)
            _check_bound(var.upper, f"{where}.upper", allowed=INF)
            _check_int(var.objective, f"{where}.objective")
            if var.lower > var.upper:
                raise InstanceError(f"{where}: lower bound {var.lower} exceeds upper bound {var.upper}")
        names = set()
        for j, con in enumerate(self.constraints):
            where = f"constraints[{j}]"
            if con.name in names:
                raise InstanceError(f"{where}: duplicate constraint name {con.name!r}")
            names.add(con.name)
            _check_int(con.rhs, f"{where}.rhs")
            for key, coef in con.coeffs.items():
                if key not in seen:
                    raise InstanceError(f"{where}.coeffs: unknown variable {key!r}")
                _check_int(coef, f"{where}.coeffs.{key}")
                if coef == 0:
                    raise InstanceError(f"{where}.coeffs.{key}: zero coefficient stored")

    @property
    def n_variables(self):
        return len(self.variables)

    @property
    def n_constraints(self):
        return len(self.constraints)

    @property
    def n_vertices(self):
        return len(self.variables) + len(self.constraints)

    @cached_property
    def var_index(self) -> Dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    @cached_property
    def con_index(self) -> Dict[str, int]:
        return {c.name: j for j, c in enumerate(self.constraints)}

    @cached_property
    def rows(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        """Per constraint, the nonzero ``(variable index, coefficient)`` pairs by index."""
        idx = self.var_index
        return tuple(tuple(sorted((idx[k], a) for k, a in c.coeffs.items())) for c in self.constraints)

    @cached_property
    def columns(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        cols: List[List[Tuple[int, int]]] = [[] for _ in self.variables]
        for j, row in enumerate(self.rows):
            for i, a in row:
                cols[i].append((j, a))
        return tuple(tuple(c) for c in cols)

    def coef(self, row: int, var: int) -> int:
        return self.constraints[row].coeffs.get(self.variables[var].name, 0)

    @property
    def c_A(self) -> int:
        """Largest absolute coefficient."""
        return max((abs(a) for c in self.constraints for a in c.coeffs.values()), default=0)

    @property
    def c_b(self) -> int:
        """Largest absolute right-hand side."""
        return max((abs(c.rhs) for c in self.constraints), default=0)

    @property
    def n_nonzeros(self):
        return sum(len(c.coeffs) for c in self.constraints)

    def unary_size(self) -> int:
        """Size of the instance with every number written in unary."""
        total = self.n_vertices
        for v in self.variables:
            total += abs(v.objective)
            total += sum(abs(b) for b in (v.lower, v.upper) if b not in (INF, -INF))
        for c in self.constraints:
            total += abs(c.rhs) + sum(abs(a) for a in c.coeffs.values())
        return total

    def is_variable_vertex(self, vertex: int) -> bool:
        return 0 <= vertex < len(self.variables)

    def vertex_name(self, vertex: int) -> str:
        n = len(self.variables)
        return self.variables[vertex].name if vertex < n else self.constraints[vertex - n].name

    def constraint_vertex(self, row: int) -> int:
        return len(self.variables) + row


@dataclass(frozen=True)
class Component:
    """One connected piece of the residual graph.

    ``variables`` holds variable indices, ``constraints`` holds constraint
    indices (not vertex ids); both sorted ascending.
    """

    variables: Tuple[int, ...]
    constraints: Tuple[int, ...]

    @property
    def size(self):
        return len(self.variables) + len(self.constraints)

    def vertex_ids(self, n_variables: int) -> Tuple[int, ...]:
        return self.variables + tuple(n_variables + j for j in self.constraints)


@dataclass(frozen=True)
class IncidenceGraph:
    n_variables: int
    n_constraints: int
    adjacency: Tuple[Tuple[int, ...], ...] = field(repr=False)

    @property
    def n_vertices(self):
        return self.n_variables + self.n_constraints

    @property
    def n_edges(self):
        return sum(len(nb) for nb in self.adjacency[: self.n_variables])

    def edges(self):
        for v in range(self.n_variables):
            for f in self.adjacency[v]:
                yield v, f

    def is_variable(self, vertex: int) -> bool:
        return vertex < self.n_variables

    def components(self, removed: Iterable[int] = ()) -> List[Component]:
        removed = _check_vertex_ids(removed, self.n_vertices)
        n = self.n_variables
        seen = bytearray(self.n_vertices)
        for v in removed:
            seen[v] = 1
        out = []
        for start in range(self.n_vertices):
            if seen[start]:
                continue
            seen[start] = 1
            members = [start]
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = 1
                        members.append(w)
                        queue.append(w)
            members.sort()
            out.append(Component(
                tuple(v for v in members if v < n),
                tuple(v - n for v in members if v >= n),
            ))
        return out


def incidence_graph(instance: IlpInstance) -> IncidenceGraph:
    n = instance.n_variables
    adj: List[List[int]] = [[] for _ in range(instance.n_vertices)]
    for j, row in enumerate(instance.rows):
        for i, _ in row:
            adj[i].append(n + j)
            adj[n + j].append(i)
    return IncidenceGraph(n, instance.n_constraints, tuple(tuple(sorted(a)) for a in adj))


def components(instance: IlpInstance, removed: Iterable[int] = ()) -> List[Component]:
    """Connected components of the incidence graph minus ``removed``, by smallest vertex id."""
    return incidence_graph(instance).components(removed)


def evaluate(instance: IlpInstance, assignment: Mapping[str, int]) -> Tuple[bool, Optional[int]]:
    """Return ``(feasible, objective)``; the objective is ``None`` when infeasible."""
    idx = instance.var_index
    for key, value in assignment.items():
        if key not in idx:
            raise ValueError(f"assignment names undeclared variable {key!r}")
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"assignment value for {key!r} is not an integer")
    missing = [v.name for v in instance.variables if v.name not in assignment]
    if missing:
        raise ValueError(f"partial assignment: missing {', '.join(missing[:5])}")
    for v in instance.variables:
        if not v.lower <= assignment[v.name] <= v.upper:
            return False, None
    for c in instance.constraints:
        if sum(a * assignment[k] for k, a in c.coeffs.items()) != c.rhs:
            return False, None
    return True, sum(v.objective * assignment[v.name] for v in instance.variables)


# ---------------------------------------------------------------- JSON


_INT_TEXT = re.compile(r"-?\d+\Z")


def _check_int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"{where}: expected an integer, got {value!r}")


def _check_bound(value, where, allowed):
    if value == allowed and isinstance(value, float):
        return
    _check_int(value, where)


def _check_vertex_ids(ids, n_vertices):
    out = set()
    for v in ids:
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < n_vertices:
            raise ValueError(f"unknown vertex id {v!r}")
        out.add(v)
    return out


def read_int(value, where: str) -> int:
    """An integer from JSON: a number or a decimal string."""
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _INT_TEXT.match(value.strip()):
        return int(value.strip())
    raise ParseError(f"{where}: expected an integer, got {value!r}")


def write_int(value):
    """JSON form of an extended integer: null for infinities, strings past 2^53."""
    if value in (INF, -INF):
        return None
    return value if abs(value) < JSON_SAFE else str(value)


def load_json(text, what="instance"):
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{what}: not UTF-8 ({exc})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def parse_instance(text) -> IlpInstance:
    """Read instance JSON; inequality rows get a nonnegative slack variable each."""
    doc = load_json(text)
    if not isinstance(doc, dict):
        raise ParseError("instance: top level must be an object")
    raw_vars = doc.get("variables", [])
    raw_cons = doc.get("constraints", [])
    if not isinstance(raw_vars, list):
        raise ParseError("variables: expected a list")
    if not isinstance(raw_cons, list):
        raise ParseError("constraints: expected a list")

    variables = []
    names = set()
    for i, item in enumerate(raw_vars):
        where = f"variables[{i}]"
        if not isinstance(item, dict) or not isinstance(item.get("name"), str):
            raise ParseError(f"{where}: expected an object with a string name")
        name = item["name"]
        if name in names:
            raise ParseError(f"{where}: duplicate variable name {name!r}")
        names.add(name)
        lower = item.get("lower")
        upper = item.get("upper")
        lower = -INF if lower is None else read_int(lower, f"{where}.lower")
        upper = INF if upper is None else read_int(upper, f"{where}.upper")
        if lower > upper:
            raise ParseError(f"{where}: lower bound {lower} exceeds upper bound {upper}")
        objective = read_int(item.get("objective", 0), f"{where}.objective")
        variables.append(Variable(name, lower, upper, objective))

    constraints = []
    slacks = []
    con_names = set()
    for j, item in enumerate(raw_cons):
        where = f"constraints[{j}]"
        if not isinstance(item, dict) or not isinstance(item.get("name"), str):
            raise ParseError(f"{where}: expected an object with a string name")
        name = item["name"]
        if name in con_names:
            raise ParseError(f"{where}: duplicate constraint name {name!r}")
        con_names.add(name)
        raw = item.get("coeffs", {})
        if not isinstance(raw, dict):
            raise ParseError(f"{where}.coeffs: expected an object")
        coeffs = {}
        for key, value in raw.items():
            if key not in names:
                raise ParseError(f"{where}.coeffs: unknown variable {key!r}")
            a = read_int(value, f"{where}.coeffs.{key}")
            if a:
                coeffs[key] = a
        if "rhs" not in item:
            raise ParseError(f"{where}: missing rhs")
        rhs = read_int(item["rhs"], f"{where}.rhs")
        relation = item.get("relation", "=")
        if relation in ("<=", ">="):
            slack = SLACK_PREFIX + name
            if slack in names:
                raise ParseError(f"{where}: slack variable {slack!r} collides with a declared variable")
            names.add(slack)
            slacks.append(Variable(slack, 0, INF, 0))
            coeffs[slack] = 1 if relation == "<=" else -1
        elif relation not in ("=", "=="):
            raise ParseError(f"{where}.relation: unknown relation {relation!r}")
        constraints.append(Constraint(name, coeffs, rhs))
    return IlpInstance(tuple(variables + slacks), tuple(constraints))


def instance_to_dict(instance: IlpInstance) -> dict:
    return {
        "variables": [
            {"name": v.name, "lower": write_int(v.lower), "upper": write_int(v.upper),
             "objective": write_int(v.objective)}
            for v in instance.variables
        ],
        "constraints": [
            {"name": c.name, "coeffs": {k: write_int(a) for k, a in c.coeffs.items()},
             "relation": "=", "rhs": write_int(c.rhs)}
            for c in instance.constraints
        ],
    }


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def serialize_instance(instance: IlpInstance) -> str:
    return dump_json(instance_to_dict(instance))
