"""Rewriting a backdoor-decomposed instance into 4-block N-fold form.

Layout of the stacked instance: deletion-set variables first, then ``N``
bricks of ``t`` columns each; deletion-set constraints first, then ``N``
bricks of ``u`` rows each.  Every brick holds one component of every type,
so the constraint matrix is

    [ A1  A2  A2 ... A2 ]
    [ A3  A4  0  ... 0  ]
    [ A3  0   A4 ... 0  ]
    [ ...               ]

Types occurring fewer than ``N`` times are first extended (each variable gets
a zero-fixed copy) and then topped up with padded clones whose originals are
fixed to zero and whose copies carry the original bounds.  Padding never
touches the deletion-set rows nor the objective.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from .backdoor import Backdoor, BackdoorMode, verify_backdoor
from .component_types import CanonicalComponent, TypeClass, TypePartition, classify
from .model import (Assignment, Component, Constraint, IlpInstance, Variable, components,
                    evaluate, instance_to_dict)


class ExtensionKind(Enum):
    FIRST = "first"
    SECOND = "second"


class _Builder:
    def __init__(self, instance: IlpInstance):
        self.source = instance
        self.variables: List[Variable] = list(instance.variables)
        self.rows: List[Tuple[str, Dict[str, int], int]] = [
            (c.name, dict(c.coeffs), c.rhs) for c in instance.constraints
        ]
        self.var_names = {v.name for v in self.variables}
        self.con_names = {c.name for c in instance.constraints}

    @staticmethod
    def _fresh(taken, base):
        name, i = base, 1
        while name in taken:
            i += 1
            name = f"{base}{i}"
        taken.add(name)
        return name

    def _add_var(self, base, lower, upper, objective) -> int:
        self.variables.append(Variable(self._fresh(self.var_names, base), lower, upper, objective))
        return len(self.variables) - 1

    def first_kind(self, comp: Component) -> Dict[int, int]:
        """Add a zero-fixed copy of every variable of ``comp``; returns original -> copy index."""
        src = self.source
        inside = set(comp.constraints)
        copies = {}
        for c in comp.variables:
            copies[c] = self._add_var(src.variables[c].name + "~copy", 0, 0, 0)
            name = self.variables[copies[c]].name
            for r, a in src.columns[c]:
                if r in inside:
                    self.rows[r][1][name] = a
        return copies

    def padded_clone(self, comp: Component, tag: str):
        """Add a clone of ``comp`` already extended in the second way.

        Returns (clone index per original variable, copy index per original
        variable, clone row index per original row).
        """
        src = self.source
        members = set(comp.variables)
        clone, copy = {}, {}
        for c in comp.variables:
            v = src.variables[c]
            clone[c] = self._add_var(f"{v.name}~{tag}", 0, 0, v.objective)
        for c in comp.variables:
            v = src.variables[c]
            copy[c] = self._add_var(f"{v.name}~{tag}~copy", v.lower, v.upper, 0)
        new_rows = {}
        for r in comp.constraints:
            con = src.constraints[r]
            coeffs = {}
            for i, a in src.rows[r]:
                if i in members:
                    coeffs[self.variables[clone[i]].name] = a
                    coeffs[self.variables[copy[i]].name] = a
                else:
                    coeffs[src.variables[i].name] = a
            self.rows.append((self._fresh(self.con_names, f"{con.name}~{tag}"), coeffs, con.rhs))
            new_rows[r] = len(self.rows) - 1
        inside = set(comp.constraints)
        for c in comp.variables:
            for g, a in src.columns[c]:
                if g not in inside:
                    self.rows[g][1][self.variables[clone[c]].name] = a
        return clone, copy, new_rows

    def build(self) -> IlpInstance:
        return IlpInstance(tuple(self.variables),
                           tuple(Constraint(n, c, b) for n, c, b in self.rows))


def _translate(backdoor: Backdoor, old_n: int, new_n: int, ell: int) -> Backdoor:
    return Backdoor({v if v < old_n else v - old_n + new_n for v in backdoor.vertices}, ell)


def _require_component(instance, Z, comp):
    if comp not in components(instance, Z.vertices):
        raise ValueError(f"{comp} is not a component of the residual instance")


def extend_component(instance: IlpInstance, Z: Backdoor, c: Component, kind: ExtensionKind) -> IlpInstance:
    """First kind extends ``c`` in place; second kind appends a padded clone of ``c``."""
    _require_component(instance, Z, c)
    builder = _Builder(instance)
    if kind is ExtensionKind.FIRST:
        builder.first_kind(c)
    else:
        builder.padded_clone(c, "pad")
    return builder.build()


def pad_to_uniform(instance: IlpInstance, Z: Backdoor,
                   partition: TypePartition) -> Tuple[IlpInstance, TypePartition]:
    """Bring every type to multiplicity ``N``.

    Only types below ``N`` are touched.  In the returned partition every
    member lists its columns as originals in canonical order followed by
    their copies, so all members of a class share the same coupling
    matrices; they may differ in bounds (zero-fixed copies versus zero-fixed
    originals).
    """
    N = partition.N
    builder = _Builder(instance)
    plans = []
    for cls in partition.classes:
        if cls.multiplicity == N:
            plans.append((cls, None, []))
            continue
        copies = [builder.first_kind(m.component) for m in cls.members]
        clones = [builder.padded_clone(cls.representative.component, f"pad{len(plans)}_{t}")
                  for t in range(N - cls.multiplicity)]
        plans.append((cls, copies, clones))
    padded = builder.build()
    m_old = instance.n_variables
    m_new = padded.n_variables

    classes = []
    for cls, copies, clones in plans:
        if copies is None:
            classes.append(cls)
            continue
        members = []
        for member, copy in zip(cls.members, copies):
            cols = member.columns + tuple(copy[c] for c in member.columns)
            comp = Component(tuple(sorted(cols)), member.component.constraints)
            members.append(CanonicalComponent(comp, cls.type.extended(), cols, member.rows))
        rep = cls.representative
        for clone, copy, new_rows in clones:
            cols = tuple(clone[c] for c in rep.columns) + tuple(copy[c] for c in rep.columns)
            rows = tuple(new_rows[r] for r in rep.rows)
            comp = Component(tuple(sorted(cols)), tuple(sorted(rows)))
            members.append(CanonicalComponent(comp, cls.type.extended(second_kind=True), cols, rows))
        classes.append(TypeClass(cls.type.extended(), cls.component_ids, tuple(members)))

    ell = max([Z.ell] + [m.component.size for c in classes for m in c.members])
    return padded, TypePartition(_translate(Z, m_old, m_new, ell), tuple(classes))


Matrix = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class FourBlockInstance:
    a1: Matrix
    a2: Matrix
    a3: Matrix
    a4: Matrix
    r: int
    s: int
    t: int
    u: int
    N: int
    instance: IlpInstance
    origin: Tuple[Optional[str], ...]
    brick_types: Tuple[Tuple[int, int, int], ...] = ()

    @property
    def rhs(self):
        return tuple(c.rhs for c in self.instance.constraints)

    @property
    def lower(self):
        return tuple(v.lower for v in self.instance.variables)

    @property
    def upper(self):
        return tuple(v.upper for v in self.instance.variables)

    @property
    def objective(self):
        return tuple(v.objective for v in self.instance.variables)

    def stacked_matrix(self) -> List[List[int]]:
        inst = self.instance
        out = [[0] * inst.n_variables for _ in inst.constraints]
        for j, row in enumerate(inst.rows):
            for i, a in row:
                out[j][i] = a
        return out

    def block_product(self) -> List[List[int]]:
        """The N-fold 4-block matrix assembled from the four blocks."""
        r, s, t, u, N = self.r, self.s, self.t, self.u, self.N
        width = s + N * t
        out = [[0] * width for _ in range(r + N * u)]
        for g in range(r):
            out[g][:s] = self.a1[g]
            for b in range(N):
                out[g][s + b * t: s + (b + 1) * t] = self.a2[g]
        for b in range(N):
            for h in range(u):
                row = out[r + b * u + h]
                row[:s] = self.a3[h]
                row[s + b * t: s + (b + 1) * t] = self.a4[h]
        return out

    def metadata(self) -> dict:
        r, s, t, u = self.r, self.s, self.t, self.u
        return {
            "r": r, "s": s, "t": t, "u": u, "N": self.N,
            "brick_variable_offsets": [s + b * t for b in range(self.N)],
            "brick_constraint_offsets": [r + b * u for b in range(self.N)],
            "types": [{"columns": w, "rows": h, "multiplicity": m} for w, h, m in self.brick_types],
            "origin": list(self.origin),
        }


def to_four_block(instance: IlpInstance, Z: Backdoor) -> FourBlockInstance:
    if not verify_backdoor(instance, Z.vertices, Z.ell, BackdoorMode.MIXED):
        raise ValueError("deletion set does not witness the stated compactness")
    partition = classify(instance, Z)
    padded, uniform = pad_to_uniform(instance, Z, partition)
    zv, zc = uniform.backdoor.split(padded.n_variables)
    N = max(uniform.N, 1)

    var_order, con_order = list(zv), list(zc)
    for b in range(uniform.N):
        for cls in uniform.classes:
            member = cls.members[b]
            var_order += member.columns
            con_order += member.rows
    stacked = IlpInstance(tuple(padded.variables[i] for i in var_order),
                          tuple(padded.constraints[j] for j in con_order))

    shapes = tuple((c.type.n_cols, c.type.n_rows, partition.classes[k].multiplicity)
                   for k, c in enumerate(uniform.classes))
    t = sum(w for w, _, _ in shapes)
    u = sum(h for _, h, _ in shapes)
    s, r = len(zv), len(zc)
    cols0 = var_order[s:s + t]
    rows0 = con_order[r:r + u]
    coef = padded.coef
    origin = tuple(padded.variables[i].name if i < instance.n_variables else None for i in var_order)
    return FourBlockInstance(
        a1=tuple(tuple(coef(g, v) for v in zv) for g in zc),
        a2=tuple(tuple(coef(g, c) for c in cols0) for g in zc),
        a3=tuple(tuple(coef(h, v) for v in zv) for h in rows0),
        a4=tuple(tuple(coef(h, c) for c in cols0) for h in rows0),
        r=r, s=s, t=t, u=u, N=N,
        instance=stacked,
        origin=origin,
        brick_types=shapes,
    )


def lift_solution(fb: FourBlockInstance, assignment: Mapping[str, int]) -> Assignment:
    """Project a feasible stacked assignment onto the original variables."""
    feasible, _ = evaluate(fb.instance, assignment)
    if not feasible:
        raise ValueError("assignment is infeasible for the stacked instance")
    names = [v.name for v in fb.instance.variables]
    return {orig: assignment[names[i]] for i, orig in enumerate(fb.origin) if orig is not None}


def four_block_to_dict(fb: FourBlockInstance) -> dict:
    doc = instance_to_dict(fb.instance)
    doc["fourblock"] = fb.metadata()
    return doc
