"""仿射多面体 {x: Ax ≤ b, Ex = f}

承载切片 H(x) 与轨迹可行性系统。空性由 LP 判定并缓存；
Minkowski 和与相等判定经齐次化锥 {(y,t): Ay ≤ bt, Ey = ft, t ≥ 0} 精确完成。
"""

from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import DimensionMismatchError
from conelyap.geometry.cone import PolyCone, _frozen, _rows
from conelyap.numerics.lp import OPTIMAL, LinearProgram, solve_lp


class Polyhedron:
    """仿射不等式集合

    Args:
        dim: 环境维数
        A, b: 不等式 a·x ≤ b
        E, f: 等式 a·x = f
        config: 数值配置
    """

    def __init__(self, dim: int, A=None, b=None, E=None, f=None, config: Optional[NumericsConfig] = None):
        self.dim = int(dim)
        self.config = config or NUMERICS_CONFIG
        self.A = _frozen(_rows(A, dim, "A"))
        self.E = _frozen(_rows(E, dim, "E"))
        self.b = _frozen(np.zeros(len(self.A)) if b is None else np.asarray(b, dtype=float).ravel())
        self.f = _frozen(np.zeros(len(self.E)) if f is None else np.asarray(f, dtype=float).ravel())
        if len(self.b) != len(self.A) or len(self.f) != len(self.E):
            raise DimensionMismatchError("右端项长度与约束行数不一致")

    @classmethod
    def from_cone(cls, cone: PolyCone) -> "Polyhedron":
        ineq, eq = cone._membership_rows()
        return cls(cone.dim, ineq, None, eq, None, cone.config)

    @classmethod
    def from_homogenization(cls, K: PolyCone) -> "Polyhedron":
        """由齐次化锥（最后一个坐标为 t）取 t = 1 的截面"""
        n = K.dim - 1
        A, b = [], []
        for row in K.inequalities:
            a, at = row[:n], row[n]
            if np.linalg.norm(a) <= K.config.tau_geom:
                continue  # t ≥ 0
            A.append(a)
            b.append(-at)
        E = K.equalities[:, :n]
        f = -K.equalities[:, n]
        return cls(n, np.array(A).reshape(-1, n), np.array(b), E, f, K.config)

    @classmethod
    def point(cls, x, config=None) -> "Polyhedron":
        x = np.asarray(x, dtype=float).ravel()
        return cls(x.size, None, None, np.eye(x.size), x, config)

    def is_conic(self) -> bool:
        return not np.any(self.b) and not np.any(self.f)

    def to_cone(self) -> PolyCone:
        """右端项全为 0 时等价的锥"""
        if not self.is_conic():
            raise ValueError("非齐次多面体不能直接转为锥")
        return PolyCone(self.dim, inequalities=self.A, equalities=self.E, config=self.config)

    @cached_property
    def _feasible(self) -> Optional[np.ndarray]:
        result = solve_lp(LinearProgram.over(self, np.zeros(self.dim)), self.config)
        return result.x if result.status == OPTIMAL else None

    def is_empty(self) -> bool:
        return self._feasible is None

    def feasible_point(self) -> Optional[np.ndarray]:
        return self._feasible

    def contains(self, x, tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise DimensionMismatchError(f"点的维数 {x.size} 与多面体维数 {self.dim} 不一致")
        if self.is_empty():
            return False
        tol = (self.config.tau_mem if tol is None else tol) * max(1.0, np.linalg.norm(x))
        scale_a = np.maximum(np.linalg.norm(self.A, axis=1), 1.0) if len(self.A) else np.zeros(0)
        scale_e = np.maximum(np.linalg.norm(self.E, axis=1), 1.0) if len(self.E) else np.zeros(0)
        return bool(
            np.all(self.A @ x - self.b <= tol * scale_a)
            and np.all(np.abs(self.E @ x - self.f) <= tol * scale_e)
        )

    def homogenize(self) -> PolyCone:
        """齐次化锥 {(y,t): Ay ≤ bt, Ey = ft, t ≥ 0}"""
        n = self.dim
        t_row = np.zeros((1, n + 1))
        t_row[0, n] = -1.0
        ineq = np.vstack([np.hstack([self.A, -self.b[:, None]]), t_row])
        eq = np.hstack([self.E, -self.f[:, None]])
        return PolyCone(n + 1, inequalities=ineq, equalities=eq, config=self.config)

    @cached_property
    def _vrep(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        K = self.homogenize()
        n, tol = self.dim, self.config.tau_geom
        vertices = [r[:n] / r[n] for r in K.rays if r[n] > tol]
        rays = [r[:n] / np.linalg.norm(r[:n]) for r in K.rays if r[n] <= tol]
        lines = K.lines[:, :n]
        return (
            np.array(vertices).reshape(-1, n),
            np.array(rays).reshape(-1, n),
            lines,
        )

    def vertices_and_rays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(顶点, 回收射线, 线性空间基)；空集返回三个空数组

        有线性空间时“顶点”是与线性空间正交截面上的顶点。
        """
        if self.is_empty():
            z = np.zeros((0, self.dim))
            return z, z, z
        return self._vrep

    def recession_cone(self) -> PolyCone:
        return PolyCone(self.dim, inequalities=self.A, equalities=self.E, config=self.config)

    def minkowski_sum(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise DimensionMismatchError("多面体维数不一致")
        if self.is_empty() or other.is_empty():
            return Polyhedron(self.dim, np.zeros((1, self.dim)), [-1.0], config=self.config)
        v1, r1, l1 = self.vertices_and_rays()
        v2, r2, l2 = other.vertices_and_rays()
        n = self.dim
        points = np.array([p + q for p in v1 for q in v2]).reshape(-1, n)
        gens = np.vstack(
            [
                np.hstack([points, np.ones((len(points), 1))]),
                np.hstack([np.vstack([r1, r2]), np.zeros((len(r1) + len(r2), 1))]),
            ]
        )
        lines = np.hstack([np.vstack([l1, l2]), np.zeros((len(l1) + len(l2), 1))])
        K = PolyCone(n + 1, generators=gens, lineality=lines, config=self.config)
        return Polyhedron.from_homogenization(K)

    def equals(self, other: "Polyhedron", tol: Optional[float] = None) -> bool:
        """点集相等（经齐次化锥比较）"""
        if other.dim != self.dim:
            return False
        if self.is_empty() or other.is_empty():
            return self.is_empty() and other.is_empty()
        return self.homogenize().equals(other.homogenize(), tol)

    def __repr__(self) -> str:
        return f"Polyhedron(dim={self.dim}, ineq={len(self.A)}, eq={len(self.E)})"
