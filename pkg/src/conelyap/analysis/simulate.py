"""轨迹模拟：x_{k+1} ∈ H(x_k)，按选择策略取后继"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from conelyap.errors import DimensionMismatchError
from conelyap.geometry.cone import PolyCone
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.analysis.functions import ConeFunction, QuadOnCone, minimize_over
from conelyap.analysis.lyapunov import slice_polyhedron
from conelyap.analysis.process import ConvexProcess

POLICIES = ("min_V", "vertex", "random")


@dataclass
class Trajectory:
    """模拟结果

    Attributes:
        states: (k+1, n) 状态序列
        values: 各状态的 V 值
        policy: 选择策略
        stopped: 提前终止原因（像为空等），完整运行为 None
    """

    states: np.ndarray
    values: np.ndarray
    policy: str
    stopped: Optional[str] = None
    details: Dict = field(default_factory=dict)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def converges(self, tol: float = 1e-3) -> bool:
        """末状态范数不超过 tol·‖x_0‖"""
        norms = self.norms
        return self.stopped is None and norms[-1] <= tol * max(norms[0], 1e-300)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.states, columns=[f"x{i + 1}" for i in range(self.states.shape[1])])
        frame.insert(0, "k", np.arange(len(self.states)))
        frame["norm"] = self.norms
        frame["V"] = self.values
        return frame


def _random_point(S: Polyhedron, rng: np.random.Generator) -> np.ndarray:
    vertices, rays, lines = S.vertices_and_rays()
    y = rng.dirichlet(np.ones(len(vertices))) @ vertices
    if len(rays):
        y = y + rng.exponential(size=len(rays)) @ rays
    if len(lines):
        y = y + rng.standard_normal(len(lines)) @ lines
    return y


def simulate(
    H: ConvexProcess,
    x0,
    steps: int,
    policy: str = "min_V",
    V: Optional[ConeFunction] = None,
    seed: int = 0,
) -> Trajectory:
    """沿 H 生成轨迹

    x_k ∈ F(H)（可行集已收敛）时在 F(H) ∩ H(x_k) 中选择，否则在 H(x_k) 中选择。

    Args:
        H: 凸过程
        x0: 初始状态
        steps: 步数
        policy: min_V（切片上最小化 V）/ vertex（切片的第一个顶点）/ random（切片内随机点）
        V: min_V 使用的函数，默认 ½‖·‖²
        seed: random 策略的种子
    """
    if policy not in POLICIES:
        raise ValueError(f"未知的选择策略: {policy}（可选 {', '.join(POLICIES)}）")
    x = np.asarray(x0, dtype=float).ravel()
    if x.size != H.n:
        raise DimensionMismatchError(f"初始状态维数 {x.size} 与过程维数 {H.n} 不一致")
    V = V or QuadOnCone(0.5 * np.eye(H.n), PolyCone.full(H.n, H.config), validate=False)
    rng = np.random.default_rng(seed)

    feasible = H.feasible_set()
    region = feasible.cone if feasible.converged else None

    states: List[np.ndarray] = [x]
    stopped = None
    for k in range(steps):
        in_region = region is not None and region.contains(x, region.config.tau_geom)
        S = slice_polyhedron(H, x, region if in_region else None)
        if S.is_empty():
            stopped = "empty_image"
            logger.info(f"第 {k} 步 H(x) 为空，模拟终止")
            break
        if policy == "min_V":
            _, y = minimize_over(V, S)
        elif policy == "vertex":
            y = S.vertices_and_rays()[0][0]
        else:
            y = _random_point(S, rng)
        x = np.asarray(y, dtype=float)
        states.append(x)

    states_arr = np.array(states)
    values = np.array([V.evaluate(s) for s in states_arr])
    logger.debug(f"模拟 {len(states_arr) - 1} 步，末状态范数 {np.linalg.norm(states_arr[-1]):.3e}")
    return Trajectory(states_arr, values, policy, stopped, {"seed": seed, "steps": steps})
