"""Reference implementations used as ground truth by the tests.

Each one takes a different route from the package code: plain loops over
dense data, networkx for connectivity, explicit permutation search, and an
external MILP solver for the cases no enumeration can reach.
"""

import itertools
import json
import math

import networkx as nx

from fracture.model import instance_to_dict


def dense_form(instance):
    """(names, lower, upper, objective, rows as dense lists, rhs) read from the JSON form."""
    doc = json.loads(json.dumps(instance_to_dict(instance)))
    names = [v["name"] for v in doc["variables"]]
    num = lambda x: None if x is None else int(x)
    lower = [num(v["lower"]) for v in doc["variables"]]
    upper = [num(v["upper"]) for v in doc["variables"]]
    objective = [int(v["objective"]) for v in doc["variables"]]
    rows = [[int(c["coeffs"].get(name, 0)) for name in names] for c in doc["constraints"]]
    rhs = [int(c["rhs"]) for c in doc["constraints"]]
    return names, lower, upper, objective, rows, rhs


def straight_line_evaluate(instance, assignment):
    names, lower, upper, objective, rows, rhs = dense_form(instance)
    x = [assignment[name] for name in names]
    for value, lo, hi in zip(x, lower, upper):
        if lo is not None and value < lo:
            return False, None
        if hi is not None and value > hi:
            return False, None
    for row, b in zip(rows, rhs):
        total = 0
        for a, value in zip(row, x):
            total += a * value
        if total != b:
            return False, None
    total = 0
    for e, value in zip(objective, x):
        total += e * value
    return True, total


def nx_graph(instance):
    g = nx.Graph()
    n = instance.n_variables
    g.add_nodes_from(range(instance.n_vertices))
    for j, c in enumerate(instance.constraints):
        for name in c.coeffs:
            g.add_edge(instance.var_index[name], n + j)
    return g


def max_component_after(graph, removed):
    h = graph.subgraph(set(graph.nodes) - set(removed))
    return max((len(c) for c in nx.connected_components(h)), default=0)


def brute_force_backdoor(instance, k, allowed):
    """Smallest subset of ``allowed`` with at most k vertices leaving components of at most k vertices."""
    graph = nx_graph(instance)
    for size in range(k + 1):
        for subset in itertools.combinations(sorted(allowed), size):
            if max_component_after(graph, subset) <= k:
                return set(subset)
    return None


def deletion_table(instance, max_size):
    """Largest remaining component for every vertex subset of at most ``max_size`` vertices.

    Bitmask flood fill, independent of the package's graph code.
    """
    n = instance.n_variables
    nbr = [0] * instance.n_vertices
    for j, c in enumerate(instance.constraints):
        for name in c.coeffs:
            i = instance.var_index[name]
            nbr[i] |= 1 << (n + j)
            nbr[n + j] |= 1 << i
    full = (1 << instance.n_vertices) - 1
    table = {}
    for size in range(max_size + 1):
        for subset in itertools.combinations(range(instance.n_vertices), size):
            removed = sum(1 << v for v in subset)
            left = full & ~removed
            biggest = 0
            while left:
                reach = left & -left
                frontier = reach
                while frontier:
                    grow = 0
                    f = frontier
                    while f:
                        low = f & -f
                        grow |= nbr[low.bit_length() - 1]
                        f ^= low
                    frontier = grow & left & ~reach
                    reach |= frontier
                biggest = max(biggest, bin(reach).count("1"))
                left &= ~reach
            table[subset] = biggest
    return table


def smallest_deletion(table, k, allowed):
    """Smallest subset of ``allowed`` (size <= k) leaving components of size <= k, or None."""
    best = None
    for subset, biggest in table.items():
        if len(subset) <= k and biggest <= k and all(v in allowed for v in subset):
            if best is None or len(subset) < len(best):
                best = subset
    return None if best is None else set(best)


def component_data(instance, removed, comp):
    """Matrices and local data of a component, rows and columns in the given order."""
    n = instance.n_variables
    zv = sorted(v for v in removed if v < n)
    zc = sorted(v - n for v in removed if v >= n)
    cols, rows = comp
    coef = instance.coef
    var = instance.variables
    return (
        tuple(tuple(coef(r, c) for c in cols) for r in rows),
        tuple(tuple(coef(r, v) for v in zv) for r in rows),
        tuple(tuple(coef(g, c) for c in cols) for g in zc),
        tuple(instance.constraints[r].rhs for r in rows),
        tuple((var[c].lower, var[c].upper, var[c].objective) for c in cols),
    )


def same_type_by_permutation(instance, removed, c1, c2):
    """Search all row and column bijections between two components."""
    if len(c1.variables) != len(c2.variables) or len(c1.constraints) != len(c2.constraints):
        return False
    target = component_data(instance, removed, (c1.variables, c1.constraints))
    for cols in itertools.permutations(c2.variables):
        for rows in itertools.permutations(c2.constraints):
            if component_data(instance, removed, (cols, rows)) == target:
                return True
    return False


def three_colourable(n, edges):
    for colours in itertools.product(range(3), repeat=n):
        if all(colours[u] != colours[v] for u, v in edges):
            return colours
    return None


def multicolored_clique(parts, edges):
    edges = set(edges)
    for pick in itertools.product(*parts):
        if all((min(a, b), max(a, b)) in edges for a, b in itertools.combinations(pick, 2)):
            return pick
    return None


def subset_sum(values, target):
    for mask in range(1 << len(values)):
        if sum(v for i, v in enumerate(values) if mask >> i & 1) == target:
            return mask
    return None


def milp_feasible(instance):
    """Feasibility decided by HiGHS through scipy (exact for these integer data sizes)."""
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp

    names, lower, upper, objective, rows, rhs = dense_form(instance)
    n = len(names)
    lb = np.array([-np.inf if l is None else l for l in lower], dtype=float)
    ub = np.array([np.inf if u is None else u for u in upper], dtype=float)
    cons = [LinearConstraint(np.array(rows, dtype=float), np.array(rhs, float), np.array(rhs, float))] if rows else []
    res = milp(np.zeros(n), integrality=np.ones(n), bounds=Bounds(lb, ub), constraints=cons)
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise RuntimeError(f"HiGHS returned status {res.status}: {res.message}")


_TABLES = {}


def _fixed_feasible(instance, var_ids, row_ids, fixed):
    """HiGHS feasibility of the sub-instance on ``var_ids``/``row_ids`` with some variables pinned."""
    from fracture.model import Constraint, IlpInstance, Variable

    keep = [instance.variables[i] for i in var_ids]
    variables = tuple(Variable(v.name, fixed[v.name], fixed[v.name]) if v.name in fixed else v for v in keep)
    rows = tuple(Constraint(c.name, dict(c.coeffs), c.rhs) for c in (instance.constraints[j] for j in row_ids))
    return milp_feasible(IlpInstance(variables, rows))


def _crt(pairs):
    value, modulus = 0, 1
    for p, r in pairs:
        while value % p != r:
            value += modulus
        modulus *= p
    return value


def colouring_gadget_feasible(instance):
    """Exact feasibility of a colouring gadget by residue decomposition.

    Each colour total ``c_j`` meets a component only in rows ``c_j - p*m - r = 0``
    with ``m >= 0`` unbounded above and used nowhere else, so a component sees
    ``c_j mod p`` only.  Residues modulo distinct primes are independent (CRT),
    which turns feasibility into a finite constraint problem over slots
    ``(j, p)``.  Every component's table of admissible residues comes from
    HiGHS; the constraint problem is then searched after merging residues
    that no table can tell apart.
    """
    n = instance.n_variables
    totals = {instance.var_index[f"c{j}"]: j for j in (1, 2, 3)}
    g = nx_graph(instance)
    g.remove_nodes_from(totals)
    var_rows = {i: [] for i in range(n)}
    for j, c in enumerate(instance.constraints):
        for name in c.coeffs:
            var_rows[instance.var_index[name]].append(j)

    constraints = []   # (slots, allowed tuples)
    domains = {}
    for part in nx.connected_components(g):
        var_ids = sorted(v for v in part if v < n)
        row_ids = sorted(v - n for v in part if v >= n)
        slots = []
        for r in row_ids:
            row = instance.constraints[r]
            hit = [i for i in map(instance.var_index.get, row.coeffs) if i in totals]
            if not hit:
                continue
            (c,) = hit
            others = {k: a for k, a in row.coeffs.items() if instance.var_index[k] != c}
            assert row.coeffs[instance.variables[c].name] == 1 and row.rhs == 0 and len(others) == 2
            (m, am), (rem, ar) = sorted(others.items(), key=lambda kv: kv[1])
            p = -am
            mv, rv = instance.variables[instance.var_index[m]], instance.variables[instance.var_index[rem]]
            assert ar == -1 and (mv.lower, mv.upper) == (0, math.inf) and (rv.lower, rv.upper) == (0, p - 1)
            assert var_rows[instance.var_index[m]] == [r]
            slots.append((totals[c], p))
        slots = sorted(set(slots))
        for s in slots:
            domains[s] = s[1]
        key = (tuple(slots), _shape(instance, var_ids, row_ids))
        if key not in _TABLES:
            names = {j: f"c{j}" for j in (1, 2, 3)}
            allowed = set()
            for residues in itertools.product(*(range(p) for _, p in slots)):
                fixed = {}
                for j in {s[0] for s in slots}:
                    fixed[names[j]] = _crt([(p, r) for (jj, p), r in zip(slots, residues) if jj == j])
                ids = sorted(set(var_ids) | {instance.var_index[names[j]] for j in {s[0] for s in slots}})
                if _fixed_feasible(instance, ids, row_ids, fixed):
                    allowed.add(residues)
            _TABLES[key] = allowed
        constraints.append((tuple(slots), _TABLES[key]))
    return _solve_csp(domains, constraints)


def _shape(instance, var_ids, row_ids):
    """Name-free description of a sub-instance, used to share residue tables."""
    local = {}
    totals = {f"c{j}" for j in (1, 2, 3)}
    rows = []
    for r in row_ids:
        c = instance.constraints[r]
        entry = []
        for name, a in c.coeffs.items():
            if name in totals:
                entry.append((name, a))
            else:
                local.setdefault(name, len(local))
                entry.append((local[name], a))
        rows.append((tuple(entry), c.rhs))
    order = sorted(local, key=local.get)
    bounds = tuple((instance.variables[instance.var_index[v]].lower, instance.variables[instance.var_index[v]].upper)
                   for v in order)
    return tuple(rows), bounds, len(var_ids)


def _solve_csp(domains, constraints):
    # merge values a slot carries that every table treats alike
    reps = {}
    for s, size in domains.items():
        sig = {}
        for x in range(size):
            key = []
            for slots, allowed in constraints:
                if s in slots:
                    k = slots.index(s)
                    key.append(frozenset(t[:k] + t[k + 1:] for t in allowed if t[k] == x))
            sig.setdefault(tuple(key), x)
        reps[s] = sorted(sig.values())
    order = sorted(domains, key=lambda s: (s[1], s[0]))
    chosen = {}

    def consistent():
        for slots, allowed in constraints:
            if all(s in chosen for s in slots) and tuple(chosen[s] for s in slots) not in allowed:
                return False
        return True

    def search(i):
        if i == len(order):
            return True
        s = order[i]
        for x in reps[s]:
            chosen[s] = x
            if consistent() and search(i + 1):
                return True
        del chosen[s]
        return False

    return search(0)
