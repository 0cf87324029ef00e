from .scenario_field import (
    FieldEvaluation,
    IndifferenceTrade,
    NodeFieldEvaluator,
    expected_utilities,
    field_at,
    indifference_trade,
    invert_field,
    lemma19_matrix,
    marginal_prices,
    pareto_allocation_field,
    spectral_bound_check,
    terminal_field,
)
from .scenario_tree import NodeRef, ScenarioTree

__all__ = [
    'FieldEvaluation',
    'IndifferenceTrade',
    'NodeFieldEvaluator',
    'NodeRef',
    'ScenarioTree',
    'expected_utilities',
    'field_at',
    'indifference_trade',
    'invert_field',
    'lemma19_matrix',
    'marginal_prices',
    'pareto_allocation_field',
    'spectral_bound_check',
    'terminal_field',
]
