from .utility_core import (
    AgentSet,
    UtilitySpec,
    eval,
    eval_array,
    inverse_marginal,
    risk_aversion,
    risk_tolerance,
)

__all__ = [
    'AgentSet',
    'UtilitySpec',
    'eval',
    'eval_array',
    'inverse_marginal',
    'risk_aversion',
    'risk_tolerance',
]
