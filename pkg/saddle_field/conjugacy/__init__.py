from .points import (
    DualPoint,
    PrimalDerivatives,
    PrimalEvaluator,
    PrimalPoint,
    SaddlePair,
    SecondOrderBundle,
)
from .saddle_transform import (
    conjugate_point_from_dual,
    conjugate_point_from_primal,
    envelope_check,
    second_order_bundle,
)

__all__ = [
    'DualPoint',
    'PrimalDerivatives',
    'PrimalEvaluator',
    'PrimalPoint',
    'SaddlePair',
    'SecondOrderBundle',
    'conjugate_point_from_dual',
    'conjugate_point_from_primal',
    'envelope_check',
    'second_order_bundle',
]
