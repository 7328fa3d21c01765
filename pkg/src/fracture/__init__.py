"""Fracture backdoors for integer linear programs: detection, N-fold normalization, solving."""

from .model import (Assignment, Component, Constraint, IlpInstance, IncidenceGraph, InstanceError,
                    ParseError, Variable, components, evaluate, incidence_graph, parse_instance,
                    serialize_instance)
from .backdoor import (Backdoor, BackdoorMode, find_backdoor_approx, find_backdoor_exact,
                       fracture_number, verify_backdoor)
from .component_types import (ComponentType, TypePartition, canonical_form, classify, same_type,
                              type_class_bound)
from .nfold import (ExtensionKind, FourBlockInstance, extend_component, lift_solution,
                    pad_to_uniform, to_four_block)
from .solvers import (DomainCapPolicy, SolveResult, SolveStatus, SolverLimitError, brute_force_oracle,
                      domain_bound_mL, solve_auto, solve_compact, solve_constraint_backdoor,
                      solve_mixed, solve_variable_backdoor)
from .reductions import (RandomParams, SimpleGraph, gen_multicolored_clique, gen_random_fractured,
                         gen_subset_sum, gen_three_coloring, nth_prime, sidon_sequence)

__version__ = "0.1.0"
