"""Instance generators: three hardness gadgets and a planted-structure sampler."""

import math
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .backdoor import Backdoor
from .model import INF, Assignment, Constraint, IlpInstance, ParseError, Variable, load_json, read_int


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: FrozenSet[Tuple[int, int]]
    parts: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) leaves the vertex range")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.parts is not None:
            parts = tuple(tuple(sorted(p)) for p in self.parts)
            flat = sorted(v for p in parts for v in p)
            if flat != list(range(self.n)):
                raise ValueError("parts must cover every vertex exactly once")
            label = {v: i for i, p in enumerate(parts) for v in p}
            for u, v in norm:
                if label[u] == label[v]:
                    raise ValueError(f"edge ({u}, {v}) lies inside part {label[u]}")
            object.__setattr__(self, "parts", parts)

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self.edges

    def to_dict(self):
        doc = {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}
        if self.parts is not None:
            doc["parts"] = [list(p) for p in self.parts]
        return doc


def parse_graph(text) -> SimpleGraph:
    doc = load_json(text, "graph")
    if not isinstance(doc, dict) or "n" not in doc:
        raise ParseError("graph: expected an object with key 'n'")
    n = read_int(doc["n"], "graph.n")
    edges = []
    for i, e in enumerate(doc.get("edges", [])):
        if not isinstance(e, list) or len(e) != 2:
            raise ParseError(f"graph.edges[{i}]: expected a pair")
        edges.append((read_int(e[0], f"graph.edges[{i}][0]"), read_int(e[1], f"graph.edges[{i}][1]")))
    parts = doc.get("parts")
    if parts is not None:
        parts = tuple(tuple(read_int(v, f"graph.parts[{i}]") for v in p) for i, p in enumerate(parts))
    try:
        return SimpleGraph(n, frozenset(edges), parts)
    except ValueError as exc:
        raise ParseError(f"graph: {exc}") from None


# ----------------------------------------------------------- number theory


def _primes_below(limit: int) -> List[int]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p::p] = bytearray(len(range(p * p, limit + 1, p)))
    return [i for i, flag in enumerate(sieve) if flag]


def nth_prime(i: int) -> int:
    """The i-th prime, counting 2 as the first."""
    if i < 1:
        raise ValueError("index must be positive")
    limit = 15 if i < 6 else int(i * (math.log(i) + math.log(math.log(i)))) + 1
    return _primes_below(limit)[i - 1]


def _is_prime(n):
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def sidon_sequence(n: int) -> List[int]:
    """n numbers with pairwise distinct sums, each at most 8n^2 (Erdős–Turán)."""
    if n < 1:
        raise ValueError("length must be positive")
    p = max(n, 2)
    while not _is_prime(p):
        p += 1
    return [2 * p * i + (i * i) % p for i in range(n)]


def is_sidon(seq: Sequence[int]) -> bool:
    sums = [a + b for a, b in combinations(seq, 2)]
    return len(sums) == len(set(sums))


# ------------------------------------------------------------------ gadgets


def gen_subset_sum(S: Sequence[int], s: int) -> IlpInstance:
    """Binary x_i with the single row sum(S[i] * x_i) = s."""
    variables = tuple(Variable(f"x{i + 1}", 0, 1, 0) for i in range(len(S)))
    coeffs = {f"x{i + 1}": a for i, a in enumerate(S) if a}
    return IlpInstance(variables, (Constraint("target", coeffs, s),))


def gen_three_coloring(g: SimpleGraph) -> IlpInstance:
    """Feasible iff ``g`` is 3-colourable; c1, c2, c3 encode colour classes by prime products.

    Vertex ``i`` (0-based) owns the prime ``nth_prime(i + 1)``; it gets colour
    ``j`` exactly when that prime divides ``c_j``.
    """
    if g.n < 1:
        raise ValueError("graph needs at least one vertex")
    variables = [Variable(f"c{j}", 0, INF, 0) for j in (1, 2, 3)]
    constraints = []

    def remainder_block(tag, prime, j):
        m, r, u, lo, hi = (f"{x}_{tag}_c{j}" for x in ("m", "r", "u", "slack_lo", "slack_hi"))
        variables.extend([
            Variable(m, 0, INF, 0), Variable(r, 0, prime - 1, 0), Variable(u, 0, 1, 0),
            Variable(lo, 0, INF, 0), Variable(hi, 0, INF, 0),
        ])
        constraints.extend([
            Constraint(f"rem_{tag}_c{j}", {f"c{j}": 1, m: -prime, r: -1}, 0),
            Constraint(f"nonzero_{tag}_c{j}", {u: 1, lo: 1, r: -1}, 0),
            Constraint(f"zero_{tag}_c{j}", {r: 1, hi: 1, u: -(prime - 1)}, 0),
        ])
        return u

    for i in range(g.n):
        tag = f"v{i}"
        flags = [remainder_block(tag, nth_prime(i + 1), j) for j in (1, 2, 3)]
        constraints.append(Constraint(f"one_colour_{tag}", {u: 1 for u in flags}, 2))
    for a, b in sorted(g.edges):
        for j in (1, 2, 3):
            ua = remainder_block(f"e{a}_{b}_v{a}", nth_prime(a + 1), j)
            ub = remainder_block(f"e{a}_{b}_v{b}", nth_prime(b + 1), j)
            surplus = f"surplus_e{a}_{b}_c{j}"
            variables.append(Variable(surplus, 0, INF, 0))
            constraints.append(Constraint(f"differ_e{a}_{b}_c{j}", {ua: 1, ub: 1, surplus: -1}, 1))
    return IlpInstance(tuple(variables), tuple(constraints))


def three_coloring_backdoor(instance: IlpInstance) -> Backdoor:
    return Backdoor({instance.var_index[c] for c in ("c1", "c2", "c3")}, 25)


def three_coloring_assignment(g: SimpleGraph, colours: Sequence[int]) -> Assignment:
    """Feasible assignment of the colouring gadget built from a proper colouring (colours 0..2)."""
    c = [math.prod(nth_prime(i + 1) for i in range(g.n) if colours[i] == j) for j in range(3)]
    out = {f"c{j + 1}": c[j] for j in range(3)}

    def block(tag, prime, j):
        value = c[j - 1]
        r = value % prime
        u = 1 if r else 0
        out.update({f"m_{tag}_c{j}": value // prime, f"r_{tag}_c{j}": r, f"u_{tag}_c{j}": u,
                    f"slack_lo_{tag}_c{j}": r - u, f"slack_hi_{tag}_c{j}": (prime - 1) * u - r})
        return u

    for i in range(g.n):
        for j in (1, 2, 3):
            block(f"v{i}", nth_prime(i + 1), j)
    for a, b in sorted(g.edges):
        for j in (1, 2, 3):
            ua = block(f"e{a}_{b}_v{a}", nth_prime(a + 1), j)
            ub = block(f"e{a}_{b}_v{b}", nth_prime(b + 1), j)
            out[f"surplus_e{a}_{b}_c{j}"] = ua + ub - 1
    return out


def gen_multicolored_clique(g: SimpleGraph) -> IlpInstance:
    """Feasible iff ``g`` has a clique with one vertex in every part.

    Selection rows pick one vertex per part and one edge per pair of parts;
    Sidon labels make the chosen edge's label sum match the chosen vertices.
    """
    if g.parts is None or len(g.parts) < 2:
        raise ValueError("graph needs a partition into at least two parts")
    k = len(g.parts)
    label = sidon_sequence(g.n)
    part_of = {v: i for i, p in enumerate(g.parts) for v in p}
    between: Dict[Tuple[int, int], List[Tuple[int, int]]] = {
        (i, j): [] for i, j in combinations(range(k), 2)}
    for u, v in sorted(g.edges):
        i, j = sorted((part_of[u], part_of[v]))
        between[i, j].append((u, v))

    variables, constraints = [], []
    for i, part in enumerate(g.parts):
        names = [f"pick_v{v}" for v in part]
        variables.extend(Variable(name, 0, 1, 0) for name in names)
        variables.append(Variable(f"label_p{i}", -INF, INF, 0))
        constraints.append(Constraint(f"one_vertex_p{i}", {name: 1 for name in names}, 1))
        coeffs = {f"pick_v{v}": label[v] for v in part if label[v]}
        coeffs[f"label_p{i}"] = -1
        constraints.append(Constraint(f"vertex_label_p{i}", coeffs, 0))
    for (i, j), edges in between.items():
        names = [f"pick_e{u}_{v}" for u, v in edges]
        variables.extend(Variable(name, 0, 1, 0) for name in names)
        variables.append(Variable(f"label_p{i}_p{j}", -INF, INF, 0))
        constraints.append(Constraint(f"one_edge_p{i}_p{j}", {name: 1 for name in names}, 1))
        coeffs = {f"pick_e{u}_{v}": label[u] + label[v] for u, v in edges if label[u] + label[v]}
        coeffs[f"label_p{i}_p{j}"] = -1
        constraints.append(Constraint(f"edge_label_p{i}_p{j}", coeffs, 0))
        constraints.append(Constraint(f"match_p{i}_p{j}",
                                      {f"label_p{i}": 1, f"label_p{j}": 1, f"label_p{i}_p{j}": -1}, 0))
    return IlpInstance(tuple(variables), tuple(constraints))


def multicolored_clique_backdoor(instance: IlpInstance) -> Backdoor:
    """Every row of the clique gadget; the residual consists of isolated variables."""
    n = instance.n_variables
    return Backdoor({n + j for j in range(instance.n_constraints)}, 3)


# ----------------------------------------------------------------- sampler


@dataclass(frozen=True)
class RandomParams:
    num_components: int = 4
    component_size: int = 3
    num_global_vars: int = 1
    num_global_constraints: int = 1
    coeff_bound: int = 3
    domain_bound: int = 3
    num_templates: int = 0

    def __post_init__(self):
        if min(self.num_components, self.component_size, self.coeff_bound, self.domain_bound) < 1:
            raise ValueError("component count, size, coefficient and domain bounds must be positive")
        if min(self.num_global_vars, self.num_global_constraints, self.num_templates) < 0:
            raise ValueError("global and template counts must be nonnegative")


@dataclass
class _Template:
    variables: List[Tuple[int, int, int, int]]   # lower, upper, objective, hidden value
    rows: List[Dict[object, int]]               # keys: local index or global variable name
    global_rows: List[Dict[int, int]]


def _sample_template(rng, params, global_names) -> _Template:
    d, cb, size = params.domain_bound, params.coeff_bound, params.component_size

    def coef():
        return rng.choice([a for a in range(-cb, cb + 1) if a])

    nv = 1 if size == 1 else rng.randint(1, size - 1)
    nc = size - nv
    variables = []
    for _ in range(nv):
        lo = rng.randint(-d, d)
        hi = rng.randint(lo, d)
        variables.append((lo, hi, rng.randint(-3, 3), rng.randint(lo, hi)))
    rows: List[Dict[object, int]] = [{} for _ in range(nc)]
    # spanning tree: every new vertex hangs off an earlier vertex of the other side
    placed_v, placed_c = [0], []
    order = [("c", j) for j in range(1, nc)] + [("v", i) for i in range(1, nv)]
    order = ([("c", 0)] if nc else []) + rng.sample(order, len(order))
    for side, idx in order:
        if side == "c":
            rows[idx][rng.choice(placed_v)] = coef()
            placed_c.append(idx)
        else:
            rows[rng.choice(placed_c)][idx] = coef()
            placed_v.append(idx)
    for row in rows:
        for i in range(nv):
            if i not in row and rng.random() < 0.3:
                row[i] = coef()
        for name in global_names:
            if rng.random() < 0.5:
                row[name] = coef()
    global_rows = [{i: coef() for i in range(nv) if rng.random() < 0.3}
                   for _ in range(params.num_global_constraints)]
    return _Template(variables, rows, global_rows)


def gen_random_fractured(seed: int, params: RandomParams = RandomParams(),
                         infeasible_rate: float = 0.2) -> Tuple[IlpInstance, Backdoor]:
    """Random instance whose global variables and rows form a planted backdoor.

    Every component is connected with exactly ``component_size`` vertices.
    With ``num_templates > 0`` components are drawn from that many templates,
    so identical components (same type) repeat.  Right-hand sides come from a
    hidden feasible point; with probability ``infeasible_rate`` one of them
    is shifted afterwards.
    """
    rng = random.Random(seed)
    d, cb = params.domain_bound, params.coeff_bound
    global_names = [f"z{i}" for i in range(params.num_global_vars)]
    variables: List[Variable] = []
    hidden: Dict[str, int] = {}
    for name in global_names:
        lo = rng.randint(-d, d)
        hi = rng.randint(lo, d)
        variables.append(Variable(name, lo, hi, rng.randint(-3, 3)))
        hidden[name] = rng.randint(lo, hi)
    global_coeffs: List[Dict[str, int]] = [{} for _ in range(params.num_global_constraints)]

    pool = [_sample_template(rng, params, global_names) for _ in range(params.num_templates)]
    local_rows: List[Tuple[str, Dict[str, int]]] = []
    for k in range(params.num_components):
        t = rng.choice(pool) if pool else _sample_template(rng, params, global_names)
        names = [f"x{k}_{i}" for i in range(len(t.variables))]
        for name, (lo, hi, obj, value) in zip(names, t.variables):
            variables.append(Variable(name, lo, hi, obj))
            hidden[name] = value
        for j, row in enumerate(t.rows):
            local_rows.append((f"c{k}_{j}", {key if isinstance(key, str) else names[key]: a
                                             for key, a in row.items()}))
        for g, row in enumerate(t.global_rows):
            global_coeffs[g].update({names[i]: a for i, a in row.items()})
    for g, coeffs in enumerate(global_coeffs):
        coeffs.update({name: rng.choice([a for a in range(-cb, cb + 1) if a])
                       for name in global_names if rng.random() < 0.5})

    # global rows are declared first so the planted set is easy to read off
    rows = [(f"g{g}", c) for g, c in enumerate(global_coeffs)] + local_rows
    constraints = [[name, coeffs, sum(a * hidden[v] for v, a in coeffs.items())] for name, coeffs in rows]
    if constraints and rng.random() < infeasible_rate:
        rng.choice(constraints)[2] += 1
    instance = IlpInstance(tuple(variables), tuple(Constraint(n, c, b) for n, c, b in constraints))
    n = instance.n_variables
    planted = set(range(len(global_names))) | {n + g for g in range(params.num_global_constraints)}
    return instance, Backdoor(planted, params.component_size)
