"""Types of components: isomorphism classes under renaming of variables and rows.

A component's type records how it couples to the deletion set (``q_vars``:
component rows x deletion-set variables, ``q_cons``: deletion-set rows x
component variables), its own matrix ``q`` and its local right-hand side,
bounds and objective, all in a canonical row/column order.

The canonical order is the lexicographically smallest encoding over every
column order that respects an iterated colour refinement of rows and
columns; rows follow by sorting once the columns are fixed.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from .backdoor import Backdoor
from .model import Component, IlpInstance, components

MAX_ORDERINGS = 10 ** 6


class TypeSearchLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class ComponentType:
    q: Tuple[Tuple[int, ...], ...]
    q_vars: Tuple[Tuple[int, ...], ...]
    q_cons: Tuple[Tuple[int, ...], ...]
    rhs: Tuple[int, ...]
    lower: Tuple[object, ...]
    upper: Tuple[object, ...]
    objective: Tuple[int, ...]

    @property
    def n_rows(self):
        return len(self.q_vars)

    @property
    def n_cols(self):
        return len(self.lower)

    def matrices(self):
        return self.q, self.q_vars, self.q_cons

    def extended(self, second_kind=False) -> "ComponentType":
        """Type after appending one copy per column (copy coefficients repeat ``q``, vanish in ``q_cons``)."""
        zeros = (0,) * self.n_cols
        if second_kind:
            lower, upper = zeros + self.lower, zeros + self.upper
        else:
            lower, upper = self.lower + zeros, self.upper + zeros
        return ComponentType(
            q=tuple(row + row for row in self.q),
            q_vars=self.q_vars,
            q_cons=tuple(row + zeros for row in self.q_cons),
            rhs=self.rhs,
            lower=lower,
            upper=upper,
            objective=self.objective + zeros,
        )


@dataclass(frozen=True)
class CanonicalComponent:
    component: Component
    type: ComponentType
    columns: Tuple[int, ...]
    rows: Tuple[int, ...]


@dataclass(frozen=True)
class TypeClass:
    type: ComponentType
    component_ids: Tuple[int, ...]
    members: Tuple[CanonicalComponent, ...]

    @property
    def multiplicity(self):
        return len(self.members)

    @property
    def representative(self) -> CanonicalComponent:
        return self.members[0]


@dataclass(frozen=True)
class TypePartition:
    backdoor: Backdoor
    classes: Tuple[TypeClass, ...]

    @property
    def N(self) -> int:
        return max((c.multiplicity for c in self.classes), default=0)

    @property
    def n_components(self):
        return sum(c.multiplicity for c in self.classes)


def _rank(signatures: Dict[int, tuple]) -> Dict[int, int]:
    order = {sig: i for i, sig in enumerate(sorted(set(signatures.values())))}
    return {key: order[sig] for key, sig in signatures.items()}


def _distinct_orders(items: Sequence[int], label: Dict[int, tuple]) -> Iterable[Tuple[int, ...]]:
    """Orderings of ``items`` up to swapping items that carry equal labels."""
    groups: Dict[tuple, List[int]] = {}
    for it in items:
        groups.setdefault(label[it], []).append(it)
    keys = sorted(groups)
    counts = [len(groups[k]) for k in keys]

    def rec(prefix, counts):
        if len(prefix) == len(items):
            yield prefix
            return
        for g, left in enumerate(counts):
            if left:
                counts[g] -= 1
                yield from rec(prefix + [g], counts)
                counts[g] += 1

    for pattern in rec([], counts):
        used = [0] * len(keys)
        out = []
        for g in pattern:
            out.append(groups[keys[g]][used[g]])
            used[g] += 1
        yield tuple(out)


def _count_distinct(items, label):
    counts: Dict[tuple, int] = {}
    for it in items:
        counts[label[it]] = counts.get(label[it], 0) + 1
    total = math.factorial(len(items))
    for c in counts.values():
        total //= math.factorial(c)
    return total


def canonical_form(instance: IlpInstance, Z: Iterable[int], comp: Component,
                   with_local_data: bool = True) -> CanonicalComponent:
    """Canonical type of ``comp`` relative to deletion set ``Z`` (vertex ids).

    With ``with_local_data=False`` only the three coupling matrices count and
    the local vectors of the returned type are empty.
    """
    n = instance.n_variables
    zv = sorted(v for v in Z if v < n)
    zc = sorted(v - n for v in Z if v >= n)
    cols, rows = comp.variables, comp.constraints
    col_set = set(cols)
    zv_pos = {v: p for p, v in enumerate(zv)}

    entry: Dict[Tuple[int, int], int] = {}
    col_rows: Dict[int, List[int]] = {c: [] for c in cols}
    row_cols: Dict[int, List[int]] = {r: [] for r in rows}
    qv_row = {}
    for r in rows:
        qv = [0] * len(zv)
        for i, a in instance.rows[r]:
            if i in col_set:
                entry[r, i] = a
                col_rows[i].append(r)
                row_cols[r].append(i)
            else:
                qv[zv_pos[i]] = a
        qv_row[r] = tuple(qv)
    qc_col = {c: tuple(instance.coef(g, c) for g in zc) for c in cols}

    if with_local_data:
        var = instance.variables
        col_base = {c: (var[c].lower, var[c].upper, var[c].objective, qc_col[c]) for c in cols}
        row_base = {r: (instance.constraints[r].rhs, qv_row[r]) for r in rows}
    else:
        col_base = {c: qc_col[c] for c in cols}
        row_base = {r: qv_row[r] for r in rows}

    cc, rc = _rank(col_base), _rank(row_base)
    while True:
        ncc = _rank({c: (cc[c], tuple(sorted((entry[r, c], rc[r]) for r in col_rows[c])))
                     for c in cols})
        nrc = _rank({r: (rc[r], tuple(sorted((entry[r, c], cc[c]) for c in row_cols[r])))
                     for r in rows})
        stable = len(set(ncc.values())) == len(set(cc.values())) and \
            len(set(nrc.values())) == len(set(rc.values()))
        cc, rc = ncc, nrc
        if stable:
            break

    classes: Dict[int, List[int]] = {}
    for c in cols:
        classes.setdefault(cc[c], []).append(c)
    class_lists = [classes[k] for k in sorted(classes)]
    # columns with identical data everywhere are interchangeable
    raw = {c: (col_base[c], tuple(entry.get((r, c), 0) for r in rows)) for c in cols}
    total = 1
    for members in class_lists:
        total *= _count_distinct(members, raw)
    if total > MAX_ORDERINGS:
        raise TypeSearchLimit(f"component needs {total} column orderings")

    best = None
    for parts in itertools.product(*(list(_distinct_orders(m, raw)) for m in class_lists)):
        order = tuple(itertools.chain.from_iterable(parts))
        keyed = sorted(
            ((rc[r], row_base[r], tuple(entry.get((r, c), 0) for c in order)), r) for r in rows
        )
        enc = (tuple(col_base[c] for c in order), tuple(k for k, _ in keyed))
        if best is None or enc < best[0]:
            best = (enc, order, tuple(r for _, r in keyed))

    _, col_order, row_order = best
    var = instance.variables
    if with_local_data:
        local = dict(
            rhs=tuple(instance.constraints[r].rhs for r in row_order),
            lower=tuple(var[c].lower for c in col_order),
            upper=tuple(var[c].upper for c in col_order),
            objective=tuple(var[c].objective for c in col_order),
        )
    else:
        local = dict(rhs=(), lower=(), upper=(), objective=())
    ctype = ComponentType(
        q=tuple(tuple(entry.get((r, c), 0) for c in col_order) for r in row_order),
        q_vars=tuple(qv_row[r] for r in row_order),
        q_cons=tuple(tuple(qc_col[c][g] for c in col_order) for g in range(len(zc))),
        **local,
    )
    return CanonicalComponent(comp, ctype, col_order, row_order)


def _residual(instance, Z):
    vertices = Z.vertices if isinstance(Z, Backdoor) else frozenset(Z)
    return vertices, components(instance, vertices)


def same_type(instance: IlpInstance, Z: Backdoor, c1: Component, c2: Component) -> bool:
    vertices, comps = _residual(instance, Z)
    present = set(comps)
    for c in (c1, c2):
        if c not in present:
            raise ValueError(f"{c} is not a component of the residual instance")
    if c1 == c2:
        return True
    if (len(c1.variables), len(c1.constraints)) != (len(c2.variables), len(c2.constraints)):
        return False
    return canonical_form(instance, vertices, c1).type == canonical_form(instance, vertices, c2).type


def classify(instance: IlpInstance, Z: Backdoor) -> TypePartition:
    """Group the components of the residual instance by type, in order of first appearance."""
    vertices, comps = _residual(instance, Z)
    grouped: Dict[ComponentType, List[Tuple[int, CanonicalComponent]]] = {}
    for cid, comp in enumerate(comps):
        canon = canonical_form(instance, vertices, comp)
        grouped.setdefault(canon.type, []).append((cid, canon))
    classes = tuple(
        TypeClass(t, tuple(i for i, _ in members), tuple(c for _, c in members))
        for t, members in grouped.items()
    )
    backdoor = Z if isinstance(Z, Backdoor) else Backdoor(vertices, max((c.size for c in comps), default=1))
    return TypePartition(backdoor, classes)


def type_class_bound(c_A: int, k: int) -> int:
    """Upper bound on the number of coupling-matrix classes for components of size at most ``k``."""
    return (2 * c_A + 1) ** (2 * k * k)
