"""Command line: analyze, solve, normalize, generate, verify.

Exit codes: 0 success (or feasible/valid), 1 infeasible or invalid,
2 unreadable input or bad parameters, 3 solver limit exceeded, 4 no
backdoor found within ``--kmax``.
"""

import argparse
import sys
from pathlib import Path

from .backdoor import Backdoor, BackdoorMode, fracture_number, verify_backdoor
from .model import (ParseError, dump_json, evaluate, load_json, parse_instance, read_int,
                    serialize_instance, write_int)
from .nfold import four_block_to_dict, to_four_block
from .reductions import (RandomParams, gen_multicolored_clique, gen_random_fractured, gen_subset_sum,
                         gen_three_coloring, multicolored_clique_backdoor, parse_graph,
                         three_coloring_backdoor)
from .solvers import (DEFAULT_CAP, DEFAULT_DP_LIMIT, DEFAULT_ENUM_LIMIT, PAPER_ML, DomainCapPolicy,
                      SolverLimitError, brute_force_oracle, solve_auto, solve_compact,
                      solve_constraint_backdoor, solve_mixed, solve_variable_backdoor)

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_LIMIT, EXIT_NO_BACKDOOR = 0, 1, 2, 3, 4
MODES = [m.value for m in BackdoorMode]


class UsageError(Exception):
    pass


def witness_to_dict(instance, backdoor: Backdoor, mode: BackdoorMode) -> dict:
    zv, zc = backdoor.split(instance.n_variables)
    return {
        "variables": [instance.variables[i].name for i in zv],
        "constraints": [instance.constraints[j].name for j in zc],
        "ell": backdoor.ell,
        "mode": mode.value,
    }


def witness_from_dict(instance, doc, ell=None, mode=None):
    if not isinstance(doc, dict):
        raise ParseError("witness: expected an object")
    vertices = set()
    for key, index, offset in (("variables", instance.var_index, 0),
                               ("constraints", instance.con_index, instance.n_variables)):
        names = doc.get(key, [])
        if not isinstance(names, list):
            raise ParseError(f"witness.{key}: expected a list of names")
        for name in names:
            if name not in index:
                raise ParseError(f"witness.{key}: unknown name {name!r}")
            vertices.add(offset + index[name])
    ell = ell if ell is not None else doc.get("ell")
    if isinstance(ell, bool) or not isinstance(ell, int) or ell < 1:
        raise ParseError("witness.ell: expected a positive integer")
    mode = mode or doc.get("mode", "mixed")
    if mode not in MODES:
        raise ParseError(f"witness.mode: unknown mode {mode!r}")
    return vertices, ell, BackdoorMode(mode)


def _read(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None


def _load_instance(path):
    return parse_instance(_read(path))


def _emit(args, doc, text_lines):
    if args.format == "json":
        sys.stdout.write(dump_json(doc))
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


def _policy(args):
    if args.cap == PAPER_ML:
        return DomainCapPolicy(PAPER_ML)
    try:
        return DomainCapPolicy(int(args.cap))
    except ValueError:
        raise UsageError(f"--cap expects a positive integer or {PAPER_ML}") from None


def _modes(args):
    return [BackdoorMode(args.mode)] if args.mode else list(BackdoorMode)


# -------------------------------------------------------------- commands


def cmd_analyze(args):
    instance = _load_instance(args.instance)
    report = {
        "sizes": {"variables": instance.n_variables, "constraints": instance.n_constraints,
                  "nonzeros": instance.n_nonzeros},
        "c_A": write_int(instance.c_A),
        "c_b": write_int(instance.c_b),
        "kmax": args.kmax,
        "modes": {},
    }
    lines = [f"{instance.n_variables} variables, {instance.n_constraints} constraints, c_A = {instance.c_A}"]
    for mode in _modes(args):
        found = fracture_number(instance, mode, args.kmax)
        if found is None:
            report["modes"][mode.value] = {"p": None, "witness": f"not found <= {args.kmax}"}
            lines.append(f"{mode.value}: not found <= {args.kmax}")
        else:
            p, backdoor = found
            w = witness_to_dict(instance, backdoor, mode)
            report["modes"][mode.value] = {"p": p, "witness": w}
            lines.append(f"{mode.value}: p = {p}, deletion set {w['variables'] + w['constraints']}")
    _emit(args, report, lines)
    return EXIT_OK


def _solve(instance, args, policy):
    if not args.mode:
        return solve_auto(instance, args.kmax, policy, args.limit_enum, args.limit_dp)
    mode = BackdoorMode(args.mode)
    found = fracture_number(instance, mode, args.kmax)
    if found is None:
        return brute_force_oracle(instance, policy)
    _, Z = found
    if not Z.vertices:
        return solve_compact(instance, Z.ell, policy, args.limit_enum)
    if mode is BackdoorMode.CONSTRAINT:
        return solve_constraint_backdoor(instance, Z, policy, args.limit_enum, args.limit_dp)
    if mode is BackdoorMode.VARIABLE:
        return solve_variable_backdoor(instance, Z, policy, args.limit_enum)
    return solve_mixed(instance, Z, policy, args.limit_enum, args.limit_dp)


def cmd_solve(args):
    instance = _load_instance(args.instance)
    policy = _policy(args)
    try:
        result = _solve(instance, args, policy)
    except SolverLimitError as exc:
        _emit(args, {"status": "limit_exceeded", "message": str(exc)}, [f"limit exceeded: {exc}"])
        return EXIT_LIMIT
    doc = {
        "status": result.status.value,
        "objective": None if result.objective is None else write_int(result.objective),
        "assignment": None if result.assignment is None else
        {k: write_int(v) for k, v in result.assignment.items()},
        "strategy_used": result.strategy,
        "cap_hit": result.cap_hit,
    }
    lines = [f"status: {result.status.value}", f"strategy: {result.strategy}"]
    if result.feasible:
        lines.append(f"objective: {result.objective}")
        lines += [f"  {k} = {v}" for k, v in result.assignment.items()]
        if result.cap_hit:
            lines.append("warning: the optimum sits on an artificial domain cap")
    _emit(args, doc, lines)
    return EXIT_OK if result.feasible else EXIT_NO


def _write_output(args, text):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_normalize(args):
    instance = _load_instance(args.instance)
    mode = BackdoorMode(args.mode or "mixed")
    found = fracture_number(instance, mode, args.kmax)
    if found is None:
        sys.stderr.write(f"no {mode.value} backdoor found with k <= {args.kmax}\n")
        return EXIT_NO_BACKDOOR
    fb = to_four_block(instance, found[1])
    if args.format == "json":
        _write_output(args, dump_json(four_block_to_dict(fb)))
    else:
        _write_output(args, f"r={fb.r} s={fb.s} t={fb.t} u={fb.u} N={fb.N}\n")
    return EXIT_OK


def _sidecar(path):
    p = Path(path)
    return p.with_name(p.stem + ".witness.json")


def cmd_generate(args):
    witness = None
    try:
        if args.kind == "subset-sum":
            if len(args.params) != 2:
                raise UsageError("subset-sum expects VALUES TARGET, e.g. 3,5,7 8")
            values = [int(x) for x in args.params[0].split(",") if x.strip()]
            instance = gen_subset_sum(values, int(args.params[1]))
        elif args.kind in ("3coloring", "clique"):
            if len(args.params) != 1:
                raise UsageError(f"{args.kind} expects one graph file")
            graph = parse_graph(_read(args.params[0]))
            if args.kind == "3coloring":
                instance = gen_three_coloring(graph)
                witness = (three_coloring_backdoor(instance), BackdoorMode.VARIABLE)
            else:
                instance = gen_multicolored_clique(graph)
                witness = (multicolored_clique_backdoor(instance), BackdoorMode.CONSTRAINT)
        else:
            if args.params:
                raise UsageError("random takes options only")
            params = RandomParams(args.components, args.size, args.global_vars,
                                  args.global_constraints, args.coeff_bound, args.domain_bound,
                                  args.templates)
            instance, backdoor = gen_random_fractured(args.seed, params)
            witness = (backdoor, BackdoorMode.MIXED)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_output(args, serialize_instance(instance))
    if witness and args.output:
        _sidecar(args.output).write_text(dump_json(witness_to_dict(instance, *witness)), encoding="utf-8")
    return EXIT_OK


def cmd_verify(args):
    instance = _load_instance(args.instance)
    if (args.witness is None) == (args.assignment is None):
        raise UsageError("give exactly one of --witness or --assignment")
    if args.witness:
        vertices, ell, mode = witness_from_dict(instance, load_json(_read(args.witness), "witness"),
                                                args.ell, args.mode)
        ok = verify_backdoor(instance, vertices, ell, mode)
        doc = {"kind": "backdoor", "valid": ok, "ell": ell, "mode": mode.value, "size": len(vertices)}
        lines = [f"{mode.value} backdoor of size {len(vertices)} to {ell}-compactness: "
                 f"{'valid' if ok else 'invalid'}"]
    else:
        raw = load_json(_read(args.assignment), "assignment")
        if isinstance(raw, dict) and isinstance(raw.get("assignment"), dict):
            raw = raw["assignment"]
        if not isinstance(raw, dict):
            raise ParseError("assignment: expected an object of name -> integer")
        try:
            assignment = {k: read_int(v, f"assignment.{k}") for k, v in raw.items()}
            ok, objective = evaluate(instance, assignment)
        except ValueError as exc:
            raise ParseError(f"assignment: {exc}") from None
        doc = {"kind": "assignment", "valid": ok, "objective": None if objective is None else write_int(objective)}
        lines = [f"feasible, objective {objective}" if ok else "infeasible"]
    _emit(args, doc, lines)
    return EXIT_OK if ok else EXIT_NO


# ---------------------------------------------------------------- parser


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--kmax", type=_positive, default=4)
    common.add_argument("--mode", choices=MODES)

    parser = argparse.ArgumentParser(prog="fracture", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="fracture numbers in each mode")
    p.add_argument("instance")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", parents=[common], help="detect structure and solve")
    p.add_argument("instance")
    p.add_argument("--cap", default=str(DEFAULT_CAP), help=f"domain cap for infinite bounds or {PAPER_ML}")
    p.add_argument("--limit-enum", type=_positive, default=DEFAULT_ENUM_LIMIT)
    p.add_argument("--limit-dp", type=_positive, default=DEFAULT_DP_LIMIT)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("normalize", parents=[common], help="write the 4-block N-fold form")
    p.add_argument("instance")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("generate", parents=[common], help="generate an instance")
    p.add_argument("kind", choices=["subset-sum", "3coloring", "clique", "random"])
    p.add_argument("params", nargs="*")
    p.add_argument("-o", "--output")
    p.add_argument("--components", type=_positive, default=4)
    p.add_argument("--size", type=_positive, default=3)
    p.add_argument("--global-vars", type=int, default=1)
    p.add_argument("--global-constraints", type=int, default=1)
    p.add_argument("--coeff-bound", type=_positive, default=3)
    p.add_argument("--domain-bound", type=_positive, default=3)
    p.add_argument("--templates", type=int, default=0, help="draw components from this many shapes")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", parents=[common], help="check a backdoor witness or an assignment")
    p.add_argument("instance")
    p.add_argument("--witness")
    p.add_argument("--assignment")
    p.add_argument("--ell", type=_positive)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
