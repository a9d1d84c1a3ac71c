"""有效集凸 QP 求解模块

求解 min ½xᵀQx + cᵀx s.t. A_ub x ≤ b_ub, A_eq x = b_eq。
原始有效集法：在工作集零空间内求牛顿步；零曲率的下降方向按射线处理，
无阻挡约束时报告无界。初始可行点由 LP 第一阶段给出，也可由调用方热启动。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import DimensionMismatchError, SolverError
from conelyap.numerics.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp


@dataclass(frozen=True)
class QuadraticProgram:
    """凸二次规划问题描述（Q 对称，目标按 ½xᵀQx + cᵀx 计）"""

    Q: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    sense: str = "min"

    @classmethod
    def build(cls, Q, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, sense: str = "min"):
        """构造并校验（Q 须对称到 1e-12）"""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        if Q.shape != (n, n):
            raise DimensionMismatchError(f"Q 形状 {Q.shape} 与线性项维数 {n} 不一致")
        scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)))
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("Q 不对称")
        if sense != "min":
            raise ValueError("QP 只支持凸目标的最小化")
        lp = LinearProgram.build(c, A_ub, b_ub, A_eq, b_eq)
        return cls(0.5 * (Q + Q.T), c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, sense)

    @classmethod
    def over(cls, polyhedron, Q, c):
        """以多面体为约束构造 QP"""
        return cls.build(Q, c, polyhedron.A, polyhedron.b, polyhedron.E, polyhedron.f)

    @property
    def n(self) -> int:
        return self.c.size

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)


@dataclass
class QPResult:
    """QP 求解结果

    status 为 unbounded 时 ray 为目标无下界的可行方向；
    infeasible 时 certificate 为 LP 给出的 Farkas 证书。
    """

    status: str
    x: Optional[np.ndarray]
    value: float
    iterations: int = 0
    kkt_residual: float = 0.0
    ray: Optional[np.ndarray] = None
    certificate: Dict[str, np.ndarray] = field(default_factory=dict)


def null_space(M: np.ndarray, n: int, rtol: float = 1e-10) -> np.ndarray:
    """矩阵零空间的正交基（列向量）"""
    if M.size == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > rtol * max(1.0, s[0]))) if s.size else 0
    return vt[rank:].T.copy()


def _is_independent(rows: List[np.ndarray], candidate: np.ndarray, tol: float) -> bool:
    if not rows:
        return np.linalg.norm(candidate) > tol
    M = np.vstack(rows)
    coef, *_ = np.linalg.lstsq(M.T, candidate, rcond=None)
    return np.linalg.norm(M.T @ coef - candidate) > tol * max(1.0, np.linalg.norm(candidate))


class _ActiveSetSolver:
    """单次使用的有效集求解器实例（不跨线程共享）"""

    def __init__(self, qp: QuadraticProgram, cfg: NumericsConfig):
        self.qp = qp
        self.cfg = cfg
        self.iterations = 0

    def _initial_working_set(self, x: np.ndarray):
        qp, tol = self.qp, self.cfg.tau_geom
        rows: List[np.ndarray] = []
        eq_rows: List[int] = []
        for i, a in enumerate(qp.A_eq):
            if _is_independent(rows, a, tol):
                rows.append(a)
                eq_rows.append(i)
        active: List[int] = []
        slack = qp.b_ub - qp.A_ub @ x
        for i in np.argsort(np.abs(slack)):
            if abs(slack[i]) > tol * (1.0 + abs(qp.b_ub[i])):
                break
            if _is_independent(rows, qp.A_ub[i], tol):
                rows.append(qp.A_ub[i])
                active.append(int(i))
        return eq_rows, active

    def solve(self, x: np.ndarray) -> QPResult:
        qp, cfg = self.qp, self.cfg
        n = qp.n
        eq_rows, active = self._initial_working_set(x)

        while True:
            self.iterations += 1
            if self.iterations > cfg.qp_max_iter:
                raise SolverError(
                    "有效集 QP 迭代次数超限",
                    iterations=self.iterations,
                    diagnostics={"working_set": list(active)},
                )

            g = qp.Q @ x + qp.c
            A_W = np.vstack([qp.A_eq[eq_rows], qp.A_ub[active]]) if (eq_rows or active) else np.zeros((0, n))
            Z = null_space(A_W, n)
            is_ray = False
            p = np.zeros(n)

            if Z.shape[1] > 0:
                H = Z.T @ qp.Q @ Z
                gz = Z.T @ g
                w, V = np.linalg.eigh(0.5 * (H + H.T))
                eig_tol = 1e-10 * max(1.0, float(np.max(np.abs(w))))
                if np.any(w < -1e3 * eig_tol):
                    raise SolverError(
                        "目标在可行子空间上非凸",
                        iterations=self.iterations,
                        diagnostics={"min_eigenvalue": float(w.min())},
                    )
                pos = w > eig_tol
                flat = V[:, ~pos]
                g_flat = flat @ (flat.T @ gz)
                if np.linalg.norm(g_flat) > cfg.kkt_tol * max(1.0, np.linalg.norm(g)):
                    # 零曲率方向上梯度非零：沿该方向目标线性下降
                    p = -Z @ g_flat
                    is_ray = True
                else:
                    curved = V[:, pos]
                    p = -Z @ (curved @ ((curved.T @ gz) / w[pos]))

            if not is_ray and np.linalg.norm(p) <= cfg.kkt_tol * (1.0 + np.linalg.norm(x)):
                # 工作集上的驻点：检查不等式乘子符号
                if A_W.shape[0]:
                    lam, *_ = np.linalg.lstsq(A_W.T, -g, rcond=None)
                else:
                    lam = np.zeros(0)
                lam_ineq = lam[len(eq_rows) :]
                mult_tol = cfg.kkt_tol * max(1.0, np.linalg.norm(g))
                if lam_ineq.size == 0 or lam_ineq.min() >= -mult_tol:
                    return self._finish(x, eq_rows, active, lam)
                drop = int(np.argmin(lam_ineq))
                del active[drop]
                continue

            Gp = qp.A_ub @ p
            slack = np.maximum(qp.b_ub - qp.A_ub @ x, 0.0)
            step = np.inf if is_ray else 1.0
            blocking = None
            for i in range(len(qp.b_ub)):
                if i in active or Gp[i] <= cfg.pivot_tol * max(1.0, np.linalg.norm(p)):
                    continue
                alpha = slack[i] / Gp[i]
                if alpha < step:
                    step, blocking = alpha, i

            if not np.isfinite(step):
                logger.debug(f"QP 无界（迭代 {self.iterations} 次）")
                return QPResult(
                    UNBOUNDED,
                    None,
                    -np.inf,
                    self.iterations,
                    ray=p / np.linalg.norm(p),
                )

            x = x + step * p
            if blocking is not None:
                active.append(blocking)

    def _finish(self, x, eq_rows, active, lam) -> QPResult:
        qp = self.qp
        n = qp.n
        mu = np.zeros(len(qp.b_eq))
        nu = np.zeros(len(qp.b_ub))
        mu[eq_rows] = lam[: len(eq_rows)]
        nu[active] = np.maximum(lam[len(eq_rows) :], 0.0)
        g = qp.Q @ x + qp.c
        stationarity = g + qp.A_ub.T @ nu + qp.A_eq.T @ mu if n else np.zeros(0)
        complementarity = np.abs(nu * (qp.b_ub - qp.A_ub @ x))
        residual = float(
            max(
                np.linalg.norm(stationarity),
                float(np.max(complementarity, initial=0.0)),
            )
        )
        if residual > self.cfg.kkt_tol * (1.0 + np.linalg.norm(g)):
            logger.warning(f"QP 的 KKT 残差 {residual:.3e} 偏大")
        logger.debug(f"QP 最优: 迭代 {self.iterations} 次, KKT 残差 {residual:.2e}")
        return QPResult(OPTIMAL, x, qp.objective(x), self.iterations, residual)


def solve_qp(
    qp: QuadraticProgram,
    config: Optional[NumericsConfig] = None,
    x0: Optional[np.ndarray] = None,
) -> QPResult:
    """求解凸 QP

    Args:
        qp: 问题描述
        config: 数值配置
        x0: 可选的热启动点（须可行，否则退回 LP 第一阶段）

    Returns:
        QPResult，status ∈ {optimal, infeasible, unbounded}
    """
    cfg = config or NUMERICS_CONFIG

    start = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        tol = cfg.tau_mem * (1.0 + np.linalg.norm(x0))
        if np.all(qp.A_ub @ x0 - qp.b_ub <= tol) and np.all(np.abs(qp.A_eq @ x0 - qp.b_eq) <= tol):
            start = x0
    if start is None:
        phase1 = solve_lp(LinearProgram.build(np.zeros(qp.n), qp.A_ub, qp.b_ub, qp.A_eq, qp.b_eq), cfg)
        if phase1.status == INFEASIBLE:
            return QPResult(INFEASIBLE, None, np.inf, phase1.iterations, certificate=phase1.certificate)
        start = phase1.x

    return _ActiveSetSolver(qp, cfg).solve(start.copy())


def project_onto(A_ub, b_ub, A_eq, b_eq, point, config=None) -> QPResult:
    """欧氏投影：min ½‖x − p‖²"""
    point = np.asarray(point, dtype=float)
    n = point.size
    return solve_qp(QuadraticProgram.build(np.eye(n), -point, A_ub, b_ub, A_eq, b_eq), config)
