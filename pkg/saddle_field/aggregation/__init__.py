from .aggregate_utility import (
    AggregateDerivatives,
    AggregateUtilityEvaluator,
    AllocationResult,
    WeightVector,
    brute_force_r,
    r_and_gradient,
    r_hessian,
    solve_allocation,
)

__all__ = [
    'AggregateDerivatives',
    'AggregateUtilityEvaluator',
    'AllocationResult',
    'WeightVector',
    'brute_force_r',
    'r_and_gradient',
    'r_hessian',
    'solve_allocation',
]
