"""Hierarchy tables, recursion operators, flows and reference comparison."""

from .flows import ASSUMPTIONS, PDESystem, emit_pde_system, flow_for_hamiltonian, truncated_v
from .recursion import RecursionOperator, check_recursion, extract_recursion_operator
from .reference import (
    DiffReport,
    appendix_report,
    classify,
    diff_against_reference,
    flow_report,
    parse_operator,
)
from .solver import (
    HierarchyTable,
    SeedReport,
    SolveError,
    check_seeds,
    default_seeds,
    solve_block,
    solve_hierarchy,
)

__all__ = ["HierarchyTable", "SeedReport", "SolveError", "check_seeds", "default_seeds",
           "solve_block", "solve_hierarchy", "PDESystem", "emit_pde_system", "truncated_v",
           "flow_for_hamiltonian", "ASSUMPTIONS", "RecursionOperator", "extract_recursion_operator",
           "check_recursion", "DiffReport", "diff_against_reference", "classify", "parse_operator",
           "appendix_report", "flow_report"]
