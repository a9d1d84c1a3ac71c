"""稠密单纯形 LP 求解模块

求解 min/max cᵀx s.t. A_ub x ≤ b_ub, A_eq x = b_eq，x 为自由变量。
两阶段修正单纯形法，默认 Dantzig 定价，连续退化主元过多时切换 Bland 规则防止循环。
每个结论都带证书：最优解附对偶乘子，不可行附 Farkas 证书，无界附改进射线。
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import DimensionMismatchError, SolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _as_rows(rows, n: int) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros((0, n))
    arr = np.atleast_2d(arr)
    if arr.shape[1] != n:
        raise DimensionMismatchError(f"约束行长度 {arr.shape[1]} 与变量维数 {n} 不一致")
    return arr


@dataclass(frozen=True)
class LinearProgram:
    """线性规划问题描述（不可变，可在线程间共享）"""

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    sense: str = "min"

    @classmethod
    def build(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, sense: str = "min"):
        """构造并校验维度"""
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        A_ub = _as_rows(A_ub if A_ub is not None else [], n)
        A_eq = _as_rows(A_eq if A_eq is not None else [], n)
        b_ub = np.asarray(b_ub if b_ub is not None else np.zeros(len(A_ub)), dtype=float).ravel()
        b_eq = np.asarray(b_eq if b_eq is not None else np.zeros(len(A_eq)), dtype=float).ravel()
        if len(b_ub) != len(A_ub) or len(b_eq) != len(A_eq):
            raise DimensionMismatchError("约束右端项长度与约束行数不一致")
        if sense not in ("min", "max"):
            raise ValueError(f"未知的优化方向: {sense}")
        return cls(c, A_ub, b_ub, A_eq, b_eq, sense)

    @classmethod
    def over(cls, polyhedron, c, sense: str = "min"):
        """以多面体为约束构造 LP"""
        return cls.build(c, polyhedron.A, polyhedron.b, polyhedron.E, polyhedron.f, sense)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LPResult:
    """LP 求解结果

    status 为 optimal 时 certificate 含 ineq_multipliers / eq_multipliers / dual_value；
    infeasible 时含 farkas_ineq / farkas_eq；unbounded 时含 ray。
    """

    status: str
    x: Optional[np.ndarray]
    value: float
    certificate: Dict[str, np.ndarray] = field(default_factory=dict)
    iterations: int = 0


class _RevisedSimplex:
    """标准型 min cᵀz, Az = b, z ≥ 0（b ≥ 0）上的修正单纯形"""

    def __init__(self, cfg: NumericsConfig):
        self.cfg = cfg
        self.iterations = 0
        self.bland_engaged = False

    def run(
        self, A: np.ndarray, b: np.ndarray, cost: np.ndarray, basis: list
    ) -> Tuple[str, list, Optional[Tuple[int, np.ndarray]]]:
        m, N = A.shape
        tol = self.cfg.pivot_tol
        cost_tol = tol * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        degenerate_run = 0
        use_bland = False

        while True:
            if m == 0:
                improving = np.where(cost < -cost_tol)[0]
                if improving.size:
                    return UNBOUNDED, basis, (int(improving[0]), np.zeros(0))
                return OPTIMAL, basis, None

            B = A[:, basis]
            x_B = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, cost[basis])
            reduced = cost - A.T @ y
            reduced[basis] = 0.0
            candidates = np.where(reduced < -cost_tol)[0]
            if candidates.size == 0:
                return OPTIMAL, basis, None

            if use_bland:
                j = int(candidates.min())
            else:
                j = int(candidates[np.argmin(reduced[candidates])])

            d = np.linalg.solve(B, A[:, j])
            positive = np.where(d > tol)[0]
            if positive.size == 0:
                return UNBOUNDED, basis, (j, d)

            ratios = np.maximum(x_B[positive], 0.0) / d[positive]
            theta = ratios.min()
            ties = positive[ratios <= theta + tol]
            # 离基变量：并列时取下标最小者（Bland 离基规则）
            leave = int(min(ties, key=lambda i: basis[i]))

            if theta <= tol:
                degenerate_run += 1
                if degenerate_run >= self.cfg.bland_after and not use_bland:
                    use_bland = True
                    self.bland_engaged = True
                    logger.debug(f"连续 {degenerate_run} 次退化主元，切换到 Bland 规则")
            else:
                degenerate_run = 0

            basis[leave] = j
            self.iterations += 1
            if self.iterations > self.cfg.lp_max_iter:
                raise SolverError(
                    "单纯形迭代次数超限（Bland 规则已启用仍未终止）"
                    if self.bland_engaged
                    else "单纯形迭代次数超限",
                    iterations=self.iterations,
                    diagnostics={"bland_engaged": self.bland_engaged},
                )


def _drive_out_artificials(A: np.ndarray, b: np.ndarray, basis: list, n_orig: int, tol: float):
    """把留在基中的人工变量换出；换不出的行是冗余行，删除之

    Returns:
        (A, b, basis, kept_rows)
    """
    kept = list(range(A.shape[0]))
    position = 0
    while position < len(basis):
        if basis[position] < n_orig:
            position += 1
            continue
        B = A[:, basis]
        e = np.zeros(len(basis))
        e[position] = 1.0
        row = np.linalg.solve(B.T, e) @ A[:, :n_orig]
        row[[v for v in basis if v < n_orig]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if np.abs(row[j]) > tol:
            basis[position] = j
            position += 1
            continue
        # 冗余行
        A = np.delete(A, position, axis=0)
        b = np.delete(b, position)
        del kept[position]
        del basis[position]
    return A, b, basis, kept


def solve_lp(lp: LinearProgram, config: Optional[NumericsConfig] = None) -> LPResult:
    """求解线性规划

    Args:
        lp: 问题描述
        config: 数值配置（默认全局 NUMERICS_CONFIG）

    Returns:
        LPResult，status ∈ {optimal, infeasible, unbounded}
    """
    cfg = config or NUMERICS_CONFIG
    n = lp.n
    G, h, E, f = lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq
    m1, m2 = len(h), len(f)
    c = lp.c if lp.sense == "min" else -lp.c
    flip = 1.0 if lp.sense == "min" else -1.0

    if m1 + m2 == 0:
        if np.max(np.abs(c), initial=0.0) <= cfg.pivot_tol:
            return LPResult(
                OPTIMAL,
                np.zeros(n),
                0.0,
                {"ineq_multipliers": np.zeros(0), "eq_multipliers": np.zeros(0), "dual_value": 0.0},
            )
        return LPResult(UNBOUNDED, None, -flip * np.inf, {"ray": -c / np.linalg.norm(c)})

    # 标准型：x = x⁺ − x⁻，不等式加松弛变量
    A = np.block(
        [
            [G, -G, np.eye(m1)],
            [E, -E, np.zeros((m2, m1))],
        ]
    )
    b = np.concatenate([h, f])
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    n_std = A.shape[1]
    m = m1 + m2

    simplex = _RevisedSimplex(cfg)

    # 第一阶段
    A1 = np.hstack([A, np.eye(m)])
    cost1 = np.concatenate([np.zeros(n_std), np.ones(m)])
    basis = list(range(n_std, n_std + m))
    _, basis, _ = simplex.run(A1, b, cost1, basis)
    B = A1[:, basis]
    z_B = np.linalg.solve(B, b)
    phase1_value = float(cost1[basis] @ z_B)

    if phase1_value > cfg.tau_mem * (1.0 + np.max(np.abs(b))):
        y = np.linalg.solve(B.T, cost1[basis])
        u = sign * y
        farkas_ineq = np.maximum(-u[:m1], 0.0)
        farkas_eq = -u[m1:]
        logger.debug(f"LP 不可行（第一阶段目标 {phase1_value:.3e}，迭代 {simplex.iterations} 次）")
        return LPResult(
            INFEASIBLE,
            None,
            flip * np.inf,
            {"farkas_ineq": farkas_ineq, "farkas_eq": farkas_eq},
            simplex.iterations,
        )

    A2, b2, basis, kept = _drive_out_artificials(A1, b, basis, n_std, cfg.pivot_tol)
    A2 = A2[:, :n_std]
    cost2 = np.concatenate([c, -c, np.zeros(m1)])

    # 第二阶段
    status, basis, ray_info = simplex.run(A2, b2, cost2, basis)

    if status == UNBOUNDED:
        j, d = ray_info
        dz = np.zeros(n_std)
        dz[j] = 1.0
        if len(basis):
            dz[basis] = -d
        ray = dz[:n] - dz[n : 2 * n]
        norm = np.linalg.norm(ray)
        logger.debug(f"LP 无界（迭代 {simplex.iterations} 次）")
        return LPResult(
            UNBOUNDED,
            None,
            -flip * np.inf,
            {"ray": ray / norm if norm > 0 else ray},
            simplex.iterations,
        )

    z = np.zeros(n_std)
    if len(basis):
        z[basis] = np.linalg.solve(A2[:, basis], b2)
        y_kept = np.linalg.solve(A2[:, basis].T, cost2[basis])
    else:
        y_kept = np.zeros(0)
    y = np.zeros(m)
    y[kept] = y_kept
    u = sign * y
    ineq_mult = np.maximum(-u[:m1], 0.0)
    eq_mult = -u[m1:]
    x = z[:n] - z[n : 2 * n]
    value = float(c @ x)
    dual_value = float(-h @ ineq_mult - f @ eq_mult)

    violation = max(
        float(np.max(G @ x - h, initial=0.0)),
        float(np.max(np.abs(E @ x - f), initial=0.0)),
    )
    if violation > cfg.tau_mem * (1.0 + np.linalg.norm(x)):
        logger.warning(f"LP 最优解约束违反量 {violation:.3e} 超过容差")

    logger.debug(
        f"LP 最优: 值 {flip * value:.6g}, 对偶间隙 {abs(value - dual_value):.2e}, "
        f"迭代 {simplex.iterations} 次"
    )
    return LPResult(
        OPTIMAL,
        x,
        flip * value,
        {
            "ineq_multipliers": ineq_mult,
            "eq_multipliers": eq_mult,
            "dual_value": flip * dual_value,
        },
        simplex.iterations,
    )


def find_feasible_point(A_ub=None, b_ub=None, A_eq=None, b_eq=None, n: int = 0, config=None):
    """求多面体中任意一点；空集返回 None"""
    lp = LinearProgram.build(np.zeros(n), A_ub, b_ub, A_eq, b_eq)
    result = solve_lp(lp, config)
    return result.x if result.status == OPTIMAL else None
