"""Exact solvers for desk-scale instances with small fracture backdoors.

All solvers maximize and break ties toward the lexicographically smallest
assignment, comparing variables in declaration order.  Infinite bounds are
replaced by an artificial cap first; the result then says so.
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .backdoor import Backdoor, BackdoorMode, fracture_number, verify_backdoor
from .model import INF, IlpInstance, components

PAPER_ML = "paper-mL"
DEFAULT_CAP = 10 ** 4
DEFAULT_ENUM_LIMIT = 10 ** 6
DEFAULT_DP_LIMIT = 10 ** 6
DEFAULT_ORACLE_LIMIT = 10 ** 7
PROPAGATION_ROUNDS = 64


class SolveStatus(Enum):
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    OPTIMAL_WITHIN_CAP = "optimal_within_cap"


class SolverLimitError(RuntimeError):
    """A configured enumeration, DP or search-space limit was exceeded."""


class UnboundedDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    assignment: Optional[Dict[str, int]] = None
    objective: Optional[int] = None
    cap_hit: bool = False
    strategy: str = ""

    @property
    def feasible(self):
        return self.status is not SolveStatus.INFEASIBLE


@dataclass(frozen=True)
class DomainCapPolicy:
    cap: object = DEFAULT_CAP

    def __post_init__(self):
        if self.cap == PAPER_ML:
            return
        if isinstance(self.cap, bool) or not isinstance(self.cap, int) or self.cap < 1:
            raise ValueError(f"cap must be a positive integer or {PAPER_ML!r}")

    @property
    def uses_paper_bound(self):
        return self.cap == PAPER_ML


def domain_bound_mL(p_C: int, n: int) -> int:
    """Magnitude bound on some optimal solution: ``8 * d! * n**d`` with ``d = 2(p_C+2)^2``."""
    if p_C < 1 or n < 1:
        raise ValueError("p_C and n must be positive")
    d = 2 * (p_C + 2) ** 2
    return 8 * math.factorial(d) * n ** d


def cramer_bound(k: int, c_b: int, c_A: int) -> int:
    """Bound on entries of the solution of a nonsingular k x k system."""
    return math.factorial(k) * c_b * c_A ** (k - 1)


def solve_rational(matrix: Sequence[Sequence[int]], rhs: Sequence[int]) -> List[Fraction]:
    """Exact solution of a square system by Gaussian elimination; ValueError if singular."""
    k = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] / aug[col][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][k] / aug[i][i] for i in range(k)]


# ---------------------------------------------------------------- bounds


def _capped_bounds(instance: IlpInstance, policy: Optional[DomainCapPolicy], p: int = 1):
    """Finite bounds plus a per-variable record of which sides were artificial."""
    lo, hi, artificial = [], [], []
    cap = None
    for v in instance.variables:
        l, u = v.lower, v.upper
        flags = (l == -INF, u == INF)
        if flags[0] or flags[1]:
            if policy is None:
                raise UnboundedDomainError(f"variable {v.name!r} has an infinite bound and no cap")
            if cap is None:
                cap = (domain_bound_mL(max(p, 1), instance.unary_size())
                       if policy.uses_paper_bound else policy.cap)
            if policy.uses_paper_bound:
                l = -cap if flags[0] else l
                u = cap if flags[1] else u
                u = max(u, l)
            else:
                if flags[1]:
                    u = l + cap if not flags[0] else cap
                if flags[0]:
                    l = u - cap if not flags[1] else -cap
        lo.append(l)
        hi.append(u)
        artificial.append(flags)
    return lo, hi, artificial


def _finish(instance, values, objective, artificial, lo, hi, policy, strategy):
    assignment = {v.name: x for v, x in zip(instance.variables, values)}
    truncated = any(a or b for a, b in artificial)
    if not truncated or (policy is not None and policy.uses_paper_bound):
        return SolveResult(SolveStatus.OPTIMAL, assignment, objective, False, strategy)
    hit = any((fl and x == l) or (fu and x == u)
              for x, (fl, fu), l, u in zip(values, artificial, lo, hi))
    return SolveResult(SolveStatus.OPTIMAL_WITHIN_CAP, assignment, objective, hit, strategy)


# ----------------------------------------------------------------- oracle


def brute_force_oracle(instance: IlpInstance, policy: Optional[DomainCapPolicy] = None,
                       limit: int = DEFAULT_ORACLE_LIMIT) -> SolveResult:
    """Exhaustive enumeration in lexicographic order; keeps the first best assignment."""
    lo, hi, artificial = _capped_bounds(instance, policy)
    n = instance.n_variables
    sizes = [u - l + 1 for l, u in zip(lo, hi)]
    total = math.prod(sizes)
    if total > limit:
        raise SolverLimitError(f"search space of {total} assignments exceeds limit {limit}")
    names = [v.name for v in instance.variables]
    pos = {name: i for i, name in enumerate(names)}
    dense = [[0] * n for _ in instance.constraints]
    for j, c in enumerate(instance.constraints):
        for k, a in c.coeffs.items():
            dense[j][pos[k]] = a
    rhs = [c.rhs for c in instance.constraints]
    eta = [v.objective for v in instance.variables]

    magnitude = max([abs(x) for x in lo + hi] + [0])
    coef = max([abs(a) for row in dense for a in row] + [abs(e) for e in eta] + [0])
    fits = (n + 1) * coef * magnitude + max([abs(b) for b in rhs] + [0]) < 2 ** 62
    if fits and n > 0:
        best = _oracle_numpy(lo, sizes, dense, rhs, eta, total)
    else:
        best = None
        for values in itertools.product(*(range(l, u + 1) for l, u in zip(lo, hi))):
            if all(sum(a * x for a, x in zip(row, values)) == b for row, b in zip(dense, rhs)):
                obj = sum(e * x for e, x in zip(eta, values))
                if best is None or obj > best[0]:
                    best = (obj, values)
    if best is None:
        return SolveResult(SolveStatus.INFEASIBLE, strategy="oracle")
    return _finish(instance, list(best[1]), best[0], artificial, lo, hi, policy, "oracle")


def _oracle_numpy(lo, sizes, dense, rhs, eta, total, chunk=1 << 16):
    n = len(lo)
    strides = [math.prod(sizes[i + 1:]) for i in range(n)]
    A = np.array(dense, dtype=np.int64).reshape(len(dense), n)
    b = np.array(rhs, dtype=np.int64)
    c = np.array(eta, dtype=np.int64)
    low = np.array(lo, dtype=np.int64)
    st = np.array(strides, dtype=np.int64)
    sz = np.array(sizes, dtype=np.int64)
    best = None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        X = low + (idx[:, None] // st) % sz
        ok = np.all(X @ A.T == b, axis=1) if len(dense) else np.ones(len(idx), dtype=bool)
        if not ok.any():
            continue
        objs = X[ok] @ c
        i = int(np.argmax(objs))
        obj = int(objs[i])
        if best is None or obj > best[0]:
            best = (obj, tuple(int(x) for x in X[ok][i]))
    return best


# ------------------------------------------------------- component search


class _Budget:
    def __init__(self, limit, what):
        self.left = limit
        self.limit = limit
        self.what = what

    def spend(self, amount=1):
        self.left -= amount
        if self.left < 0:
            raise SolverLimitError(f"{self.what} exceeded limit {self.limit}")


def _propagate(rows, lo, hi) -> bool:
    """Bounds propagation on equations ``sum(a*x) = rhs``; False on a proven conflict."""
    for _ in range(PROPAGATION_ROUNDS):
        changed = False
        for terms, rhs in rows:
            smin = smax = 0
            for i, a in terms:
                if a > 0:
                    smin += a * lo[i]
                    smax += a * hi[i]
                else:
                    smin += a * hi[i]
                    smax += a * lo[i]
            if rhs < smin or rhs > smax:
                return False
            if smin == smax:
                continue
            for i, a in terms:
                if lo[i] == hi[i]:
                    continue
                if a > 0:
                    rest_min, rest_max = smin - a * lo[i], smax - a * hi[i]
                else:
                    rest_min, rest_max = smin - a * hi[i], smax - a * lo[i]
                # a * x must land in [rhs - rest_max, rhs - rest_min]
                low_t, high_t = rhs - rest_max, rhs - rest_min
                if a > 0:
                    new_lo, new_hi = -(-low_t // a), high_t // a
                else:
                    new_lo, new_hi = -(-high_t // a), low_t // a
                if new_lo > lo[i] or new_hi < hi[i]:
                    lo[i] = max(lo[i], new_lo)
                    hi[i] = min(hi[i], new_hi)
                    if lo[i] > hi[i]:
                        return False
                    changed = True
        if not changed:
            return True
    return True


def _enumerate(rows, lo, hi, budget):
    """All integer points of the rows within the box, in lexicographic order."""
    lo, hi = list(lo), list(hi)
    if not _propagate(rows, lo, hi):
        return
    yield from _dfs(rows, lo, hi, 0, budget)


def _dfs(rows, lo, hi, i, budget):
    n = len(lo)
    while i < n and lo[i] == hi[i]:
        i += 1
    if i == n:
        yield tuple(lo)
        return
    for value in range(lo[i], hi[i] + 1):
        budget.spend()
        nlo, nhi = lo[:], hi[:]
        nlo[i] = nhi[i] = value
        if _propagate(rows, nlo, nhi):
            yield from _dfs(rows, nlo, nhi, i + 1, budget)


class _Piece:
    """One component of the residual instance, indexed locally."""

    def __init__(self, instance, comp, zv_pos, zc):
        self.vars = comp.variables
        local = {v: p for p, v in enumerate(self.vars)}
        self.rows = []
        self.deps = set()
        for r in comp.constraints:
            terms, zterms = [], []
            for i, a in instance.rows[r]:
                if i in local:
                    terms.append((local[i], a))
                else:
                    zterms.append((zv_pos[i], a))
                    self.deps.add(zv_pos[i])
            self.rows.append((terms, zterms, instance.constraints[r].rhs))
        self.global_terms = [
            [(local[i], a) for i, a in instance.rows[g] if i in local] for g in zc
        ]
        self.objective = [instance.variables[v].objective for v in self.vars]
        self.ready_at = max(self.deps) + 1 if self.deps else 0
        self._best = {}
        self._table = {}
        self._points = {}

    def shifted(self, z):
        return tuple(rhs - sum(a * z[p] for p, a in zterms) for _, zterms, rhs in self.rows)

    def _solutions(self, rhs, lo, hi, limit):
        rows = [(terms, b) for (terms, _, _), b in zip(self.rows, rhs)]
        budget = _Budget(limit, "per-component enumeration")
        return _enumerate(rows, [lo[v] for v in self.vars], [hi[v] for v in self.vars], budget)

    def _scored(self, rhs, lo, hi, limit):
        """Solutions with their objectives and contribution keys, in enumeration order."""
        if rhs in self._points:
            return self._points[rhs]
        self._points[rhs] = found = self._score(list(self._solutions(rhs, lo, hi, limit)))
        return found

    def _score(self, sols):
        if not sols:
            return sols, [], []
        terms = self.global_terms
        coef = max([abs(e) for e in self.objective] + [abs(a) for t in terms for _, a in t] + [1])
        size = max((abs(x) for values in sols for x in values), default=0)
        if (len(self.vars) + 1) * coef * size < 2 ** 62:
            arr = np.array(sols, dtype=np.int64).reshape(len(sols), len(self.vars))
            objs = (arr @ np.array(self.objective, dtype=np.int64)).tolist()
            if not terms:
                return sols, objs, [()] * len(sols)
            G = np.zeros((len(self.vars), len(terms)), dtype=np.int64)
            for d, t in enumerate(terms):
                for i, a in t:
                    G[i, d] += a
            return sols, objs, list(map(tuple, (arr @ G).tolist()))
        objs = [sum(e * x for e, x in zip(self.objective, values)) for values in sols]
        keys = [tuple(sum(a * values[i] for i, a in t) for t in terms) for values in sols]
        return sols, objs, keys

    def best(self, rhs, lo, hi, limit):
        """(objective, values) of the best local solution, or None."""
        if rhs not in self._best:
            if self.global_terms:
                # the join needs every point anyway, so enumerate once for both
                sols, objs, _ = self._scored(rhs, lo, hi, limit)
                scored = zip(objs, sols)
            else:
                scored = ((sum(e * x for e, x in zip(self.objective, v)), v)
                          for v in self._solutions(rhs, lo, hi, limit))
            best = None
            for obj, values in scored:
                if best is None or obj > best[0]:
                    best = (obj, values)
            self._best[rhs] = best
        return self._best[rhs]

    def table(self, rhs, lo, hi, limit):
        """Best local solution per contribution vector to the deletion-set rows."""
        if rhs not in self._table:
            table = {}
            for values, obj, key in zip(*self._scored(rhs, lo, hi, limit)):
                old = table.get(key)
                if old is None or obj > old[0]:
                    table[key] = (obj, values)
            self._table[rhs] = table
        return self._table[rhs]


def _combine(pieces, tables, target, limit_dp):
    """Pick one entry per table so contributions sum to ``target``; maximize, then lex-min."""
    g = len(target)
    suffix_lo = [[0] * g for _ in range(len(tables) + 1)]
    suffix_hi = [[0] * g for _ in range(len(tables) + 1)]
    for i in range(len(tables) - 1, -1, -1):
        for d, keys in enumerate(zip(*tables[i])):
            suffix_lo[i][d] = suffix_lo[i + 1][d] + min(keys)
            suffix_hi[i][d] = suffix_hi[i + 1][d] + max(keys)

    states = {(0,) * g: (0, ())}
    done: List[int] = []
    for i, table in enumerate(tables):
        done = done + list(pieces[i].vars)
        perm = sorted(range(len(done)), key=done.__getitem__)
        lo_next, hi_next = suffix_lo[i + 1], suffix_hi[i + 1]
        # rows no later table can move must be met exactly now: look those up
        closed = [d for d in range(g) if lo_next[d] == hi_next[d]]
        # running sums on the other rows must stay where later tables can still fix them
        windows = [(d, target[d] - hi_next[d], target[d] - lo_next[d])
                   for d in range(g) if lo_next[d] != hi_next[d]]
        index: Dict[tuple, list] = {}
        for contrib, entry in table.items():
            index.setdefault(tuple(contrib[d] for d in closed), []).append((contrib, entry))
        new = {}
        for key, (obj, wit) in states.items():
            need = tuple(target[d] - lo_next[d] - key[d] for d in closed)
            for contrib, (o, values) in index.get(need, ()):
                nk = tuple(x + y for x, y in zip(key, contrib))
                stuck = False
                for d, low, high in windows:
                    if nk[d] < low or nk[d] > high:
                        stuck = True
                        break
                if stuck:
                    continue
                cand = (obj + o, wit + values)
                old = new.get(nk)
                if old is None or cand[0] > old[0] or (
                        cand[0] == old[0] and [cand[1][p] for p in perm] < [old[1][p] for p in perm]):
                    new[nk] = cand
        if len(new) > limit_dp:
            raise SolverLimitError(f"DP state count {len(new)} exceeded limit {limit_dp}")
        states = new
    return states.get(tuple(target))


class _Structured:
    """Enumerate deletion-set variables, solve components, join through deletion-set rows."""

    def __init__(self, instance, zv, zc, policy, p, limit_enum, limit_dp, strategy):
        self.instance = instance
        self.zv, self.zc = list(zv), list(zc)
        self.policy = policy
        self.lo, self.hi, self.artificial = _capped_bounds(instance, policy, p)
        self.limit_dp = limit_dp
        self.strategy = strategy
        self.limit_enum = limit_enum
        n = instance.n_variables
        removed = set(self.zv) | {n + g for g in self.zc}
        zv_pos = {v: p for p, v in enumerate(self.zv)}
        self.pieces = [_Piece(instance, c, zv_pos, self.zc) for c in components(instance, removed)]
        self.z_rows = [
            ([(zv_pos[i], a) for i, a in instance.rows[g] if i in zv_pos], instance.constraints[g].rhs)
            for g in self.zc
        ]
        self.product = math.prod(self.hi[v] - self.lo[v] + 1 for v in self.zv)
        if self.product > limit_enum:
            raise SolverLimitError(
                f"backdoor-domain product {self.product} exceeds limit {limit_enum}")

    def _full(self, z, parts):
        values = [0] * self.instance.n_variables
        for p, v in enumerate(self.zv):
            values[v] = z[p]
        for piece, vals in parts:
            for v, x in zip(piece.vars, vals):
                values[v] = x
        return values

    def _leaf(self, z):
        """Best completion for a full assignment ``z`` of the deletion-set variables."""
        base = sum(self.instance.variables[v].objective * z[p] for p, v in enumerate(self.zv))
        if not self.zc:
            parts = []
            for piece in self.pieces:
                found = piece.best(piece.shifted(z), self.lo, self.hi, self.limit_enum)
                parts.append((piece, found[1]))
                base += found[0]
            return base, self._full(z, parts)
        target = [rhs - sum(a * z[p] for p, a in terms) for terms, rhs in self.z_rows]
        tables = [piece.table(piece.shifted(z), self.lo, self.hi, self.limit_enum) for piece in self.pieces]
        if any(not t for t in tables):
            return None
        joined = _combine(self.pieces, tables, target, self.limit_dp)
        if joined is None:
            return None
        obj, flat = joined
        parts, at = [], 0
        for piece in self.pieces:
            parts.append((piece, flat[at:at + len(piece.vars)]))
            at += len(piece.vars)
        return base + obj, self._full(z, parts)

    def _alive(self, z, depth):
        for piece in self.pieces:
            if piece.ready_at == depth and piece.best(piece.shifted(z), self.lo, self.hi, self.limit_enum) is None:
                return False
        return True

    def solve(self) -> SolveResult:
        best = None
        z = [0] * len(self.zv)

        def walk(depth):
            nonlocal best
            if not self._alive(z, depth):
                return
            if depth == len(self.zv):
                found = self._leaf(z)
                if found is not None and (best is None or found[0] > best[0] or
                                          (found[0] == best[0] and found[1] < best[1])):
                    best = found
                return
            v = self.zv[depth]
            for value in range(self.lo[v], self.hi[v] + 1):
                z[depth] = value
                walk(depth + 1)

        walk(0)
        if best is None:
            return SolveResult(SolveStatus.INFEASIBLE, strategy=self.strategy)
        return _finish(self.instance, best[1], best[0], self.artificial, self.lo, self.hi,
                       self.policy, self.strategy)


def _check_backdoor(instance, Z, mode):
    if not verify_backdoor(instance, Z.vertices, Z.ell, mode):
        raise ValueError(f"not a {mode.value} backdoor to {Z.ell}-compactness")
    return Z.split(instance.n_variables)


def solve_compact(instance: IlpInstance, ell: int, policy: Optional[DomainCapPolicy] = None,
                  limit_enum: int = DEFAULT_ENUM_LIMIT) -> SolveResult:
    """Solve every component on its own and add up the objectives."""
    policy = policy or DomainCapPolicy()
    if any(c.size > ell for c in components(instance)):
        raise ValueError(f"instance is not {ell}-compact")
    return _Structured(instance, (), (), policy, ell, limit_enum, DEFAULT_DP_LIMIT, "compact").solve()


def solve_constraint_backdoor(instance: IlpInstance, Z: Backdoor, policy: Optional[DomainCapPolicy] = None,
                              limit_enum: int = DEFAULT_ENUM_LIMIT,
                              limit_dp: int = DEFAULT_DP_LIMIT) -> SolveResult:
    """Join component solutions through the deletion-set rows by a DP over contribution vectors."""
    policy = policy or DomainCapPolicy()
    zv, zc = _check_backdoor(instance, Z, BackdoorMode.CONSTRAINT)
    p = max(Z.size, Z.ell)
    return _Structured(instance, zv, zc, policy, p, limit_enum, limit_dp, "constraint-backdoor").solve()


def solve_variable_backdoor(instance: IlpInstance, Z: Backdoor, policy: Optional[DomainCapPolicy] = None,
                            limit_enum: int = DEFAULT_ENUM_LIMIT) -> SolveResult:
    """Try every value of the deletion-set variables and solve the compact remainder."""
    policy = policy or DomainCapPolicy()
    zv, zc = _check_backdoor(instance, Z, BackdoorMode.VARIABLE)
    p = max(Z.size, Z.ell)
    return _Structured(instance, zv, zc, policy, p, limit_enum, DEFAULT_DP_LIMIT, "variable-backdoor").solve()


def solve_mixed(instance: IlpInstance, Z: Backdoor, policy: Optional[DomainCapPolicy] = None,
                limit_enum: int = DEFAULT_ENUM_LIMIT, limit_dp: int = DEFAULT_DP_LIMIT) -> SolveResult:
    policy = policy or DomainCapPolicy()
    zv, zc = _check_backdoor(instance, Z, BackdoorMode.MIXED)
    p = max(Z.size, Z.ell)
    return _Structured(instance, zv, zc, policy, p, limit_enum, limit_dp, "mixed-backdoor").solve()


def solve_auto(instance: IlpInstance, k_max: int = 4, policy: Optional[DomainCapPolicy] = None,
               limit_enum: int = DEFAULT_ENUM_LIMIT, limit_dp: int = DEFAULT_DP_LIMIT,
               oracle_limit: int = DEFAULT_ORACLE_LIMIT) -> SolveResult:
    """Detect a backdoor (constraint, then variable, then mixed) and use the matching solver."""
    policy = policy or DomainCapPolicy()
    for mode in (BackdoorMode.CONSTRAINT, BackdoorMode.VARIABLE, BackdoorMode.MIXED):
        found = fracture_number(instance, mode, k_max)
        if found is None:
            continue
        _, Z = found
        if not Z.vertices:
            return solve_compact(instance, Z.ell, policy, limit_enum)
        if mode is BackdoorMode.CONSTRAINT:
            return solve_constraint_backdoor(instance, Z, policy, limit_enum, limit_dp)
        if mode is BackdoorMode.VARIABLE:
            return solve_variable_backdoor(instance, Z, policy, limit_enum)
        return solve_mixed(instance, Z, policy, limit_enum, limit_dp)
    return brute_force_oracle(instance, policy, oracle_limit)
