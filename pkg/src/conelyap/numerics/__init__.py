"""数值内核：稠密单纯形 LP 与有效集凸 QP"""

from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, LPResult, find_feasible_point, solve_lp
from .qp import QuadraticProgram, QPResult, null_space, project_onto, solve_qp
