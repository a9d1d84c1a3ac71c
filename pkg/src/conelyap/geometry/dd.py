"""双描述法与 Fourier-Motzkin 消元

hrep_to_vrep: {x: Ax ≤ 0, Ex = 0} → (极射线, 线性空间基)
vrep_to_hrep: 通过对极锥做同一转换得到不可约 H 表示
fourier_motzkin: 在 H 表示上消去坐标（坐标投影）
"""

from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import RepresentationError
from conelyap.numerics.qp import null_space


def normalize_rows(M: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """行单位化并去掉零行"""
    if M.size == 0:
        return M.reshape(0, M.shape[1] if M.ndim == 2 else 0)
    norms = np.linalg.norm(M, axis=1)
    keep = norms > tol
    return M[keep] / norms[keep, None]


def unique_rows(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """去掉（单位化后）重复的行，保持首次出现的顺序"""
    if len(M) <= 1:
        return M
    decimals = int(max(0, -np.log10(tol)))
    key = np.round(M, decimals) + 0.0
    _, first = np.unique(key, axis=0, return_index=True)
    return M[np.sort(first)]


def _independent_rows(M: np.ndarray, k: int, tol: float) -> List[int]:
    chosen: List[int] = []
    for i in range(M.shape[0]):
        trial = M[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=tol) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == k:
                break
    return chosen


def _pointed_extreme_rays(M: np.ndarray, cfg: NumericsConfig) -> np.ndarray:
    """列满秩 M 定义的尖锥 {z: Mz ≤ 0} 的极射线（增量式双描述法）"""
    m, k = M.shape
    tol = cfg.tau_geom
    order = _independent_rows(M, k, tol)
    if len(order) < k:
        raise RepresentationError("约束矩阵非列满秩，锥不是尖的")

    rays = normalize_rows((-np.linalg.inv(M[order])).T)
    processed = list(order)
    remaining = [i for i in range(m) if i not in order]

    for step, i in enumerate(remaining):
        a = M[i]
        s = rays @ a
        pos = np.where(s > tol)[0]
        neg = np.where(s < -tol)[0]
        zero = np.where(np.abs(s) <= tol)[0]
        if pos.size == 0:
            processed.append(i)
            continue

        tight = np.abs(rays @ M[processed].T) <= tol
        new_rays = [rays[j] for j in np.concatenate([neg, zero])]
        for p in pos:
            for q in neg:
                common = tight[p] & tight[q]
                if common.sum() < k - 2:
                    continue
                if k > 2 and np.linalg.matrix_rank(M[processed][common], tol=tol) != k - 2:
                    continue
                r = s[p] * rays[q] - s[q] * rays[p]
                new_rays.append(r / np.linalg.norm(r))

        rays = unique_rows(np.array(new_rays).reshape(len(new_rays), k))
        processed.append(i)
        if len(rays) > cfg.dd_max_rays:
            raise RepresentationError(
                f"双描述法射线数 {len(rays)} 超过上限 {cfg.dd_max_rays}（第 {step + 1} 行）"
            )
    return rays


def hrep_to_vrep(
    A: np.ndarray, E: np.ndarray, dim: int, config: NumericsConfig = None
) -> Tuple[np.ndarray, np.ndarray]:
    """H 表示转 V 表示

    Args:
        A: 不等式法向量（a·x ≤ 0），形状 (m, dim)
        E: 等式法向量（a·x = 0），形状 (p, dim)
        dim: 环境维数
        config: 数值配置

    Returns:
        (rays, lines)：单位化的极射线与正交的线性空间基
    """
    cfg = config or NUMERICS_CONFIG
    A = normalize_rows(np.asarray(A, dtype=float).reshape(-1, dim))
    E = normalize_rows(np.asarray(E, dtype=float).reshape(-1, dim))

    lines = null_space(np.vstack([A, E]), dim).T
    # 与线性空间正交、满足等式的补子空间上锥是尖的
    B = null_space(np.vstack([E, lines]), dim)
    k = B.shape[1]
    if k == 0:
        return np.zeros((0, dim)), lines

    M = A @ B
    keep = np.linalg.norm(M, axis=1) > cfg.tau_geom
    rays_local = _pointed_extreme_rays(normalize_rows(M[keep]), cfg)
    rays = normalize_rows(rays_local @ B.T) if len(rays_local) else np.zeros((0, dim))
    logger.debug(f"双描述法: dim={dim}, 约束 {len(A)}+{len(E)} 行 → {len(rays)} 条射线, {len(lines)} 维线性空间")
    return rays, lines


def vrep_to_hrep(
    rays: np.ndarray, lines: np.ndarray, dim: int, config: NumericsConfig = None
) -> Tuple[np.ndarray, np.ndarray]:
    """V 表示转不可约 H 表示（对极锥 {y: Ry ≤ 0, Ly = 0} 做 H→V）"""
    facets, eqs = hrep_to_vrep(rays, lines, dim, config)
    return facets, eqs


def fourier_motzkin(
    A: np.ndarray,
    E: np.ndarray,
    eliminate: Sequence[int],
    config: NumericsConfig = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """消去指定坐标，返回剩余坐标上的 (A', E')

    先用等式做高斯消元，剩余变量逐个做 Fourier-Motzkin，
    每步选正负行数乘积最小的变量。
    """
    cfg = config or NUMERICS_CONFIG
    tol = cfg.tau_geom
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    dim = A.shape[1] if A.ndim == 2 and A.shape[1] else E.shape[1]
    cols = list(range(dim))
    todo = [c for c in eliminate]

    # 等式消元
    for c in list(todo):
        j = cols.index(c)
        if E.shape[0] == 0:
            break
        pivot = int(np.argmax(np.abs(E[:, j])))
        if abs(E[pivot, j]) <= tol:
            continue
        row = E[pivot] / E[pivot, j]
        A = A - np.outer(A[:, j], row) if A.shape[0] else A
        E = np.delete(E - np.outer(E[:, j], row), pivot, axis=0)
        A = np.delete(A, j, axis=1)
        E = np.delete(E, j, axis=1)
        cols.pop(j)
        todo.remove(c)

    A = unique_rows(normalize_rows(A)) if A.shape[0] else A
    while todo:
        counts = []
        for c in todo:
            j = cols.index(c)
            counts.append(int(np.sum(A[:, j] > tol)) * int(np.sum(A[:, j] < -tol)))
        c = todo[int(np.argmin(counts))]
        j = cols.index(c)
        pos = A[A[:, j] > tol]
        neg = A[A[:, j] < -tol]
        rest = A[np.abs(A[:, j]) <= tol]
        combos = [p[j] * q - q[j] * p for p in pos for q in neg]
        A = np.vstack([rest] + ([np.array(combos)] if combos else []))
        A = np.delete(A, j, axis=1)
        E = np.delete(E, j, axis=1)
        cols.pop(j)
        todo.remove(c)
        A = unique_rows(normalize_rows(A)) if A.shape[0] else A
        if len(A) > cfg.dd_max_rays:
            raise RepresentationError(f"Fourier-Motzkin 行数 {len(A)} 超过上限 {cfg.dd_max_rays}")

    E = normalize_rows(E) if E.shape[0] else E
    return A.reshape(-1, len(cols)), E.reshape(-1, len(cols))
