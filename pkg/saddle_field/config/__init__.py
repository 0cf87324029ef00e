from .problem_config import ProblemConfig, Query, load_problem, parse_at, parse_problem

__all__ = ['ProblemConfig', 'Query', 'load_problem', 'parse_at', 'parse_problem']
