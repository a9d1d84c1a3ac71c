"""锥的单位截面采样

由于 V 与 H 的二次齐次性，"∀x ∈ C" 的条件只需在单位截面 {x ∈ C: ‖x‖ = 1} 上检查。
采样点总包含极射线与 ± 线性空间方向；张成维数 ≤ 2 时用角度网格，
更高维用 Halton 低差异序列生成的锥组合。
"""

from typing import Optional

import numpy as np
from scipy.stats import qmc

from conelyap.config.settings import SAMPLING_CONFIG
from conelyap.geometry.cone import PolyCone
from conelyap.geometry.dd import normalize_rows, unique_rows


def _angular_arc(cone: PolyCone, count: int, mesh: float) -> np.ndarray:
    """张成维数为 2 的锥：在平面内按角度均匀取点"""
    U = cone.span().lines  # 2 × n 正交基
    if len(cone.lines) == 2:
        start, arc = 0.0, 2 * np.pi
    elif len(cone.lines) == 1:
        # 半平面：从 +l 经射线方向转到 −l
        l_loc = U @ cone.lines[0]
        r_loc = U @ cone.rays[0]
        start = np.arctan2(l_loc[1], l_loc[0])
        cross = l_loc[0] * r_loc[1] - l_loc[1] * r_loc[0]
        arc = np.pi if cross >= 0 else -np.pi
    else:
        a = U @ cone.rays[0]
        b = U @ cone.rays[1]
        start = np.arctan2(a[1], a[0])
        arc = np.arctan2(a[0] * b[1] - a[1] * b[0], a @ b)
    k = max(count, int(np.ceil(abs(arc) / mesh)) + 1)
    closed = abs(arc) < 2 * np.pi - 1e-12
    thetas = start + np.linspace(0.0, arc, k, endpoint=closed)
    local = np.column_stack([np.cos(thetas), np.sin(thetas)])
    return local @ U


def cross_section_samples(
    cone: PolyCone,
    count: Optional[int] = None,
    seed: Optional[int] = None,
    mesh: Optional[float] = None,
) -> np.ndarray:
    """单位截面样本（确定性：同一 seed 给出相同结果）

    Args:
        cone: 被采样的锥
        count: 样本数（极射线与线性空间方向另加）
        seed: Halton 序列扰乱种子
        mesh: 二维截面的角度步长（弧度）

    Returns:
        (k, n) 数组，每行是锥内单位向量；锥为 {0} 时为空
    """
    count = SAMPLING_CONFIG["count"] if count is None else count
    seed = SAMPLING_CONFIG["seed"] if seed is None else seed
    mesh = SAMPLING_CONFIG["mesh"] if mesh is None else mesh
    n = cone.dim
    if cone.is_trivial():
        return np.zeros((0, n))

    exact = np.vstack([cone.rays, cone.lines, -cone.lines])
    d = cone.span_dim
    if d == 1:
        samples = exact
    elif d == 2:
        samples = np.vstack([exact, _angular_arc(cone, count, mesh)])
    else:
        gens = cone.generators
        sampler = qmc.Halton(d=len(gens), scramble=True, seed=seed)
        u = np.clip(sampler.random(count), 1e-12, 1.0 - 1e-12)
        weights = -np.log(u)
        samples = np.vstack([exact, weights @ gens])
    return unique_rows(normalize_rows(samples), tol=1e-12)


def random_unit_vectors(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """球面上均匀的随机单位向量"""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
