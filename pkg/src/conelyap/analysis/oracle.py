"""独立的暴力参照（oracle）

直接按定义实现，使用 scipy.optimize（HiGHS linprog、SLSQP 与 Nelder-Mead），
与主路径的单纯形/有效集求解器不共享代码，用于交叉验证推导出的结果。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import linprog, minimize

from conelyap.config.settings import ORACLE_CONFIG, SAMPLING_CONFIG
from conelyap.errors import ConsistencyError, DimensionMismatchError, SolverError
from conelyap.geometry.cone import NEGATIVE, PolyCone
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.geometry.sampling import cross_section_samples, random_unit_vectors
from conelyap.analysis.functions import ConeFunction, QuadOnCone, RestrictedTo
from conelyap.analysis.process import ConvexProcess
from conelyap.analysis.verdict import VerificationReport, Verdict
from conelyap.analysis.workers import run_indexed

YES_CERTIFIED = "yes_certified"
UNKNOWN = "unknown"


class TrajectorySystem:
    """d 步轨迹 (x_0, ..., x_d) ∈ ℝ^{n(d+1)}：(x_k, x_{k+1}) ∈ graph(H)，x_0 = 锚点

    Args:
        process: 凸过程 H
        horizon: 步数 d ≥ 1
        anchor: 初始状态 x_0
    """

    def __init__(self, process: ConvexProcess, horizon: int, anchor):
        if horizon < 1:
            raise ValueError(f"视界必须 ≥ 1: {horizon}")
        anchor = np.asarray(anchor, dtype=float).ravel()
        if anchor.size != process.n:
            raise DimensionMismatchError(f"初始状态维数 {anchor.size} 与过程维数 {process.n} 不一致")
        self.process = process
        self.horizon = horizon
        self.anchor = anchor
        self.n = process.n
        self.dim = self.n * (horizon + 1)
        self.polyhedron = self._stack()

    def _stack(self) -> Polyhedron:
        n, d = self.n, self.horizon
        ineq, eq = (np.asarray(r) for r in self.process.graph._membership_rows())
        A = np.zeros((len(ineq) * d, self.dim))
        E = np.zeros((len(eq) * d + n, self.dim))
        for k in range(d):
            cols = slice(k * n, (k + 2) * n)
            A[k * len(ineq) : (k + 1) * len(ineq), cols] = ineq
            E[k * len(eq) : (k + 1) * len(eq), cols] = eq
        E[len(eq) * d :, :n] = np.eye(n)
        f = np.concatenate([np.zeros(len(eq) * d), self.anchor])
        return Polyhedron(self.dim, A, np.zeros(len(A)), E, f, self.process.config)

    def states(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z).reshape(self.horizon + 1, self.n)

    def _linprog(self, c: np.ndarray):
        P = self.polyhedron
        return linprog(
            c,
            A_ub=P.A if len(P.A) else None,
            b_ub=P.b if len(P.A) else None,
            A_eq=P.E,
            b_eq=P.f,
            bounds=[(None, None)] * self.dim,
            method="highs",
        )

    def feasible_point(self) -> Optional[np.ndarray]:
        """HiGHS 可行性 LP；不可行返回 None"""
        result = self._linprog(np.zeros(self.dim))
        if result.status == 0:
            return result.x
        if result.status == 2:
            return None
        raise SolverError(f"轨迹可行性 LP 失败: {result.message}", diagnostics={"status": int(result.status)})


def _unit(x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).ravel()
    norm = np.linalg.norm(x0)
    return x0 / norm if norm > 0 else x0


def feasible_depth(H: ConvexProcess, x0, d: int) -> bool:
    """是否存在从 x0 出发的 d 步轨迹（锥性质下按 ‖x0‖ = 1 归一化）"""
    x0 = _unit(x0)
    if not np.any(x0):
        return True
    return TrajectorySystem(H, d, x0).feasible_point() is not None


def feasible_depths(H: ConvexProcess, x0, d_max: int) -> List[bool]:
    """d = 1..d_max 的可行性序列；断言其关于 d 单调不增"""
    depths = [feasible_depth(H, x0, d) for d in range(1, d_max + 1)]
    for d in range(1, len(depths)):
        if depths[d] and not depths[d - 1]:
            raise ConsistencyError(f"轨迹可行性关于视界不单调: d={d + 1} 可行但 d={d} 不可行")
    return depths


@dataclass
class StabilizabilityResult:
    """有限视界可镇定性采样结论：yes_certified 或 unknown（有限视界无法否定）"""

    verdict: str
    trajectory: Optional[np.ndarray]
    final_norm: Optional[float] = None
    horizon: int = 0
    epsilon: float = 0.0
    details: Dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == YES_CERTIFIED


def stabilizable_sample(H: ConvexProcess, x0, d: Optional[int] = None, epsilon: float = 1e-3) -> StabilizabilityResult:
    """在轨迹系统上最小化 ‖x_d‖² + μΣ‖x_k‖²（SLSQP），事后检查衰减包络

    yes_certified 要求 ‖x_d‖ ≤ ε 且 ‖x_k‖ ≤ C·ε^{k/d}（‖x0‖ 归一化为 1）。
    """
    d = ORACLE_CONFIG["horizon_factor"] * H.n if d is None else d
    if d < 1 or epsilon <= 0:
        raise ValueError("需要 d ≥ 1 且 epsilon > 0")
    x0 = _unit(x0)
    if not np.any(x0):
        return StabilizabilityResult(YES_CERTIFIED, np.zeros((d + 1, H.n)), 0.0, d, epsilon)

    system = TrajectorySystem(H, d, x0)
    start = system.feasible_point()
    if start is None:
        return StabilizabilityResult(UNKNOWN, None, None, d, epsilon, {"reason": "no_trajectory"})

    n, mu = H.n, ORACLE_CONFIG["path_weight"]
    weights = np.full(system.dim, mu)
    weights[-n:] += 1.0
    P = system.polyhedron

    constraints = [{"type": "eq", "fun": lambda z: P.E @ z - P.f, "jac": lambda z: P.E}]
    if len(P.A):
        constraints.append({"type": "ineq", "fun": lambda z: P.b - P.A @ z, "jac": lambda z: -P.A})
    result = minimize(
        lambda z: float(np.sum(weights * z * z)),
        start,
        jac=lambda z: 2.0 * weights * z,
        constraints=constraints,
        method="SLSQP",
        options={"maxiter": 500, "ftol": 1e-14},
    )
    z = result.x if result.success else start
    if not result.success:
        logger.debug(f"SLSQP 未收敛（{result.message}），退回可行初始轨迹")

    states = system.states(z)
    norms = np.linalg.norm(states, axis=1)
    envelope = ORACLE_CONFIG["envelope"] * epsilon ** (np.arange(d + 1) / d)
    certified = norms[-1] <= epsilon and bool(np.all(norms <= envelope))
    return StabilizabilityResult(
        YES_CERTIFIED if certified else UNKNOWN,
        states,
        float(norms[-1]),
        d,
        epsilon,
        {"optimizer": str(result.message), "iterations": int(result.nit)},
    )


@dataclass
class PolarCheck:
    """极锥两个包含方向上的抽样违反数"""

    checked: int
    computed_not_defined: int
    defined_not_computed: int

    @property
    def holds(self) -> bool:
        return self.computed_not_defined == 0 and self.defined_not_computed == 0


def polar_sampled(C: PolyCone, k: Optional[int] = None, seed: int = 0) -> PolarCheck:
    """按定义 {y: y·g ≤ 0 ∀ 生成元 g} 抽样核对 C.polar() 的输出

    随机单位向量检验两个方向；极锥截面样本额外检验计算结果 ⊆ 定义。
    """
    k = SAMPLING_CONFIG["monte_carlo"] if k is None else k
    polar = C.polar(NEGATIVE)
    gens = C.generators
    tol = C.config.tau_geom
    points = np.vstack([random_unit_vectors(C.dim, k, seed), cross_section_samples(polar, count=64, seed=seed)])

    by_definition = np.all(points @ gens.T <= tol, axis=1) if len(gens) else np.ones(len(points), dtype=bool)
    computed = np.array([polar.contains(y, tol) for y in points])
    # 距边界 10·tol 以内的样本不计入违反
    margin = np.max(points @ gens.T, axis=1) if len(gens) else np.full(len(points), -np.inf)
    clear = np.abs(margin) > 10 * tol
    return PolarCheck(
        checked=len(points),
        computed_not_defined=int(np.sum(computed & ~by_definition & clear)),
        defined_not_computed=int(np.sum(by_definition & ~computed & clear)),
    )


@dataclass
class GridConjugate:
    """径向网格上的共轭下界；error_bound = inf 表示结果未经认证"""

    value: float
    error_bound: float
    radius: float
    argmax: Optional[np.ndarray] = None


def _domain_cone(f: ConeFunction) -> Optional[PolyCone]:
    """带锥的变体的有效定义域；ℝⁿ 或无法直接读出时返回 None"""
    if isinstance(f, QuadOnCone):
        return f.cone
    if isinstance(f, RestrictedTo):
        inner = _domain_cone(f.inner)
        return f.cone if inner is None else f.cone.intersect(inner)
    return None


def _directions(n: int, mesh: float, seed: int, domain: Optional[PolyCone] = None) -> Tuple[np.ndarray, np.ndarray]:
    """单位方向网格及其所在子空间的正交基（行）

    定义域为真子锥时只在其单位截面上取方向，低维定义域也能被覆盖。
    """
    if domain is not None and not domain.is_full():
        d = domain.span_dim
        count = int(min(2e5, np.ceil((1.0 / mesh) ** max(d - 1, 1))))
        return cross_section_samples(domain, count=count, seed=seed, mesh=mesh), domain.span().lines
    basis = np.eye(n)
    if n == 1:
        return np.array([[1.0], [-1.0]]), basis
    if n == 2:
        theta = np.arange(0.0, 2 * np.pi, mesh)
        return np.column_stack([np.cos(theta), np.sin(theta)]), basis
    count = int(min(2e5, np.ceil((1.0 / mesh) ** (n - 1))))
    return np.vstack([np.eye(n), -np.eye(n), random_unit_vectors(n, count, seed)]), basis


def conjugate_grid(f: ConeFunction, y, mesh: float = 1e-2, seed: int = 0) -> GridConjugate:
    """sup_x {y·x − f(x)} 在径向网格 x = r·u 上的下界

    方向取自 dom f 的单位截面（定义域未知时取整个球面），
    半径上界 R = ‖y‖/α，α 为 f 在方向网格上的最小正值。
    网格最优的前 grid_refine 个方向再用 Nelder-Mead 在 dom f 的张成子空间内局部加密，
    沿每条射线的一维问题 max_r {r·(u·y) − r²f(u)} 在 [0, R] 上精确求解。
    所有方向上 f 都为 +∞ 时返回 error_bound = inf。
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != f.n:
        raise DimensionMismatchError(f"点的维数 {y.size} 与函数维数 {f.n} 不一致")
    domain = _domain_cone(f)
    if np.linalg.norm(y) == 0 or (domain is not None and domain.is_trivial()):
        return GridConjugate(0.0, 0.0, 0.0, np.zeros(f.n))

    dirs, basis = _directions(f.n, mesh, seed, domain)
    f_dirs = np.array(run_indexed(f.evaluate, list(dirs), label="共轭网格方向"))
    finite = np.isfinite(f_dirs)
    slope = dirs @ y

    flat = finite & (f_dirs <= 1e-12) & (slope > 1e-12)
    if np.any(flat):
        return GridConjugate(np.inf, 0.0, np.inf, dirs[np.argmax(flat)])
    if not np.any(finite):
        logger.warning(f"共轭网格的 {len(dirs)} 个方向上 f 均为 +∞，下界 0 未经认证")
        return GridConjugate(0.0, np.inf, np.inf, np.zeros(f.n))

    alpha = float(np.min(f_dirs[finite & (f_dirs > 1e-12)], initial=np.inf))
    beta = float(np.max(f_dirs[finite]))
    R = np.linalg.norm(y) / alpha if np.isfinite(alpha) else 0.0
    m = max(2, int(np.ceil(1.0 / mesh)))
    radii = np.linspace(0.0, R, m + 1)

    values = np.where(finite[:, None], slope[:, None] * radii[None, :] - f_dirs[:, None] * radii[None, :] ** 2, -np.inf)
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    best, u_best, r_best = float(values[i, j]), dirs[i], radii[j]

    def along_ray(u: np.ndarray) -> Tuple[float, float]:
        a = f.evaluate(u)
        if not np.isfinite(a):
            return -np.inf, 0.0
        s = float(u @ y)
        if s <= 0:
            return 0.0, 0.0
        r = R if a <= 0 else min(s / (2.0 * a), R)
        return r * s - r * r * a, r

    def loss(z: np.ndarray) -> float:
        norm = np.linalg.norm(z)
        return np.inf if norm == 0 else -along_ray(z @ basis / norm)[0]

    k = len(basis)
    starts = np.argsort(-values.max(axis=1), kind="stable")[: ORACLE_CONFIG["grid_refine"]]
    for start in starts:
        if not finite[start]:
            continue
        result = minimize(
            loss,
            basis @ dirs[start],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * k},
        )
        if np.isfinite(result.fun) and -result.fun > best:
            u = result.x @ basis / np.linalg.norm(result.x)
            value, r = along_ray(u)
            if value > best:
                best, u_best, r_best = value, u, r

    error = (np.linalg.norm(y) + 2.0 * beta * R) * R * mesh
    return GridConjugate(max(best, 0.0), float(error), float(R), r_best * u_best)


def cross_check_feasible_set(
    H: ConvexProcess,
    count: int = 200,
    seed: int = 0,
    d: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> VerificationReport:
    """比较 F(H) 成员判定与深度 d（默认 4n）轨迹 LP 的结论"""
    d = ORACLE_CONFIG["horizon_factor"] * H.n if d is None else d
    feasible = H.feasible_set()
    if not feasible.converged:
        return VerificationReport("cross_check_feasible_set", Verdict.INCONCLUSIVE, details={"reason": "feasible_set_not_converged"})
    F = feasible.cone
    points = np.vstack([cross_section_samples(F, count // 2, seed), random_unit_vectors(H.n, count - count // 2, seed)])

    def run(x):
        return F.contains(x, F.config.tau_geom), feasible_depth(H, x, d)

    results = run_indexed(run, list(points), max_workers, "可行集交叉验证")
    disagreements = [(points[i], a, b) for i, (a, b) in enumerate(results) if a != b]
    details = {"horizon": d, "disagreements": len(disagreements)}
    if disagreements:
        x, member, depth = disagreements[0]
        logger.warning(f"可行集与轨迹 LP 不一致: x = {np.round(x, 6).tolist()}，F(H) 成员 {member}，深度 {d} 可行 {depth}")
        return VerificationReport(
            "cross_check_feasible_set",
            Verdict.FAILS,
            witness={"x": x.tolist(), "member": bool(member), "depth_feasible": bool(depth)},
            checked_points=len(points),
            details=details,
        )
    return VerificationReport("cross_check_feasible_set", Verdict.HOLDS, checked_points=len(points), details=details)
