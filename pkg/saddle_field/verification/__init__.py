from .finite_difference import finite_difference_gradient, finite_difference_hessian
from .reports import CheckReport, ReportStore, SweepConfig
from .suites import SUITES, run_suite

__all__ = [
    'CheckReport',
    'ReportStore',
    'SUITES',
    'SweepConfig',
    'finite_difference_gradient',
    'finite_difference_hessian',
    'run_suite',
]
