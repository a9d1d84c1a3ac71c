"""多面体凸锥

PolyCone 同时承载 V 表示（极射线 + 线性空间基）与 H 表示（a·x ≤ 0 与 a·x = 0），
两者按需通过双描述法惰性转换并缓存。构造后不可变，可在线程间共享。
"""

from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import DimensionMismatchError, ParseError, SolverError
from conelyap.geometry.dd import fourier_motzkin, hrep_to_vrep, normalize_rows, unique_rows, vrep_to_hrep
from conelyap.numerics.qp import null_space, project_onto

NEGATIVE = "negative"
POSITIVE = "positive"


def _rows(data, dim: int, name: str = "") -> np.ndarray:
    if data is None:
        return np.zeros((0, dim))
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(f"{name} 行长度 {arr.shape[-1]} 与维数 {dim} 不一致")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class PolyCone:
    """多面体凸锥 {Σ λ_i r_i + Σ μ_j l_j : λ ≥ 0} = {x: Ax ≤ 0, Ex = 0}

    Args:
        dim: 环境维数
        generators: 射线生成元（V 表示）
        lineality: 线性空间生成元（可选，按 ± 对生成）
        inequalities: 半空间法向量 a（a·x ≤ 0）
        equalities: 超平面法向量 a（a·x = 0）
        config: 数值配置
    """

    def __init__(
        self,
        dim: int,
        generators=None,
        lineality=None,
        inequalities=None,
        equalities=None,
        config: Optional[NumericsConfig] = None,
    ):
        if dim < 0:
            raise DimensionMismatchError("维数不能为负")
        self.dim = int(dim)
        self.config = config or NUMERICS_CONFIG
        has_v = generators is not None or lineality is not None
        has_h = inequalities is not None or equalities is not None
        if not has_v and not has_h:
            has_h = True  # 空 H 表示即全空间
        self._raw_v = None
        self._raw_h = None
        if has_v:
            self._raw_v = (
                _frozen(_rows(generators, dim, "generators")),
                _frozen(_rows(lineality, dim, "lineality")),
            )
        if has_h:
            self._raw_h = (
                _frozen(_rows(inequalities, dim, "inequalities")),
                _frozen(_rows(equalities, dim, "equalities")),
            )

    # ------------------------------------------------------------------
    # 构造
    # ------------------------------------------------------------------
    @classmethod
    def from_generators(cls, generators, lineality=None, dim: Optional[int] = None, config=None):
        """由生成元构造；空列表表示 {0}"""
        if dim is None:
            dim = np.atleast_2d(np.asarray(generators, dtype=float)).shape[1]
        return cls(dim, generators=generators if generators is not None else [], lineality=lineality, config=config)

    @classmethod
    def from_inequalities(cls, inequalities, equalities=None, dim: Optional[int] = None, config=None):
        """由 H 表示构造；空表示全空间"""
        if dim is None:
            rows = inequalities if np.size(inequalities) else equalities
            dim = np.atleast_2d(np.asarray(rows, dtype=float)).shape[1]
        return cls(dim, inequalities=inequalities if inequalities is not None else [], equalities=equalities, config=config)

    @classmethod
    def _canonical(cls, dim, rays, lines, inequalities, equalities, config=None):
        """两种表示均已知（且不可约）时直接构造"""
        cone = cls(dim, generators=rays, lineality=lines, config=config)
        cone.__dict__["_vrep"] = (_frozen(_rows(rays, dim)), _frozen(_rows(lines, dim)))
        cone.__dict__["_hrep"] = (_frozen(_rows(inequalities, dim)), _frozen(_rows(equalities, dim)))
        return cone

    @classmethod
    def zero(cls, dim: int, config=None):
        return cls._canonical(dim, [], [], [], np.eye(dim), config)

    @classmethod
    def full(cls, dim: int, config=None):
        return cls._canonical(dim, [], np.eye(dim), [], [], config)

    @classmethod
    def subspace(cls, basis, dim: Optional[int] = None, config=None):
        """由张成向量构造子空间"""
        if dim is None:
            dim = np.atleast_2d(np.asarray(basis, dtype=float)).shape[1]
        B = _rows(basis, dim)
        lines = null_space(null_space(B, dim).T, dim).T if len(B) else np.zeros((0, dim))
        eqs = null_space(lines, dim).T
        return cls._canonical(dim, [], lines, [], eqs, config)

    @classmethod
    def nonnegative_orthant(cls, dim: int, config=None):
        return cls._canonical(dim, np.eye(dim), [], -np.eye(dim), [], config)

    @classmethod
    def from_dict(cls, data: Dict, path: str = "", field: str = "cone", config=None):
        """解析锥 JSON：{"dim", "generators", "inequalities", "equalities"}（可选 "lineality"）

        同时给出生成元与不等式时以 H 表示为准，生成元须满足之。
        """
        if not isinstance(data, dict) or "dim" not in data:
            raise ParseError("缺少 dim 字段", path, field)
        try:
            dim = int(data["dim"])
            cone = cls(
                dim,
                generators=data.get("generators"),
                lineality=data.get("lineality"),
                inequalities=data.get("inequalities"),
                equalities=data.get("equalities"),
                config=config,
            )
        except (DimensionMismatchError, TypeError, ValueError) as e:
            raise ParseError(str(e), path, field) from e
        if cone._raw_v is not None and cone._raw_h is not None:
            declared = cls(dim, generators=cone._raw_v[0], lineality=cone._raw_v[1], config=config)
            h_cone = cls(dim, inequalities=cone._raw_h[0], equalities=cone._raw_h[1], config=config)
            for k, g in enumerate(declared.generators):
                if not h_cone.contains(g, tol=cone.config.tau_geom):
                    raise ParseError(f"生成元 {k} 不满足给定的不等式", path, f"{field}.generators[{k}]")
            return h_cone
        return cone

    # ------------------------------------------------------------------
    # 表示
    # ------------------------------------------------------------------
    @property
    def rep_state(self) -> Dict[str, bool]:
        """当前已物化的表示"""
        return {
            "v": self._raw_v is not None or "_vrep" in self.__dict__,
            "h": self._raw_h is not None or "_hrep" in self.__dict__,
        }

    @cached_property
    def _vrep(self):
        if self._raw_h is not None and self._raw_v is None:
            rays, lines = hrep_to_vrep(self._raw_h[0], self._raw_h[1], self.dim, self.config)
        else:
            ineq, eq = self._hrep
            rays, lines = hrep_to_vrep(ineq, eq, self.dim, self.config)
        return _frozen(rays), _frozen(lines)

    @cached_property
    def _hrep(self):
        if self._raw_v is not None:
            gens = np.vstack([self._raw_v[0], self._raw_v[1], -self._raw_v[1]])
            ineq, eq = vrep_to_hrep(gens, np.zeros((0, self.dim)), self.dim, self.config)
        else:
            rays, lines = self._vrep
            ineq, eq = vrep_to_hrep(rays, lines, self.dim, self.config)
        return _frozen(ineq), _frozen(eq)

    def dd_convert(self) -> "PolyCone":
        """物化两种表示（不可约），返回自身"""
        self._vrep
        self._hrep
        return self

    @property
    def rays(self) -> np.ndarray:
        """尖部分的极射线（单位化）"""
        return self._vrep[0]

    @property
    def lines(self) -> np.ndarray:
        """线性空间的正交基"""
        return self._vrep[1]

    @property
    def generators(self) -> np.ndarray:
        """全部射线生成元：极射线与 ± 线性空间基"""
        return np.vstack([self.rays, self.lines, -self.lines])

    @property
    def inequalities(self) -> np.ndarray:
        return self._hrep[0]

    @property
    def equalities(self) -> np.ndarray:
        return self._hrep[1]

    def _membership_rows(self):
        if "_hrep" in self.__dict__ or self._raw_h is None:
            return self._hrep
        return self._raw_h

    # ------------------------------------------------------------------
    # 谓词
    # ------------------------------------------------------------------
    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise DimensionMismatchError(f"点的维数 {x.size} 与锥的维数 {self.dim} 不一致")
        return x

    def contains(self, x, tol: Optional[float] = None) -> bool:
        """成员判定（相对容差 τ_mem）"""
        x = self._check(x)
        tol = (self.config.tau_mem if tol is None else tol) * max(1.0, np.linalg.norm(x))
        ineq, eq = self._membership_rows()
        ineq, eq = normalize_rows(np.asarray(ineq)), normalize_rows(np.asarray(eq))
        return bool(np.all(ineq @ x <= tol) and np.all(np.abs(eq @ x) <= tol))

    def contains_cone(self, other: "PolyCone", tol: Optional[float] = None) -> bool:
        """other ⊆ self"""
        self._same_dim(other)
        tol = self.config.tau_geom if tol is None else tol
        return all(self.contains(g, tol) for g in other.generators)

    def equals(self, other: "PolyCone", tol: Optional[float] = None) -> bool:
        """生成元互相包含"""
        return self.contains_cone(other, tol) and other.contains_cone(self, tol)

    def is_trivial(self) -> bool:
        return len(self.rays) == 0 and len(self.lines) == 0

    def is_subspace(self) -> bool:
        return len(self.rays) == 0

    def is_full(self) -> bool:
        return len(self.lines) == self.dim

    @property
    def span_dim(self) -> int:
        gens = self.generators
        return int(np.linalg.matrix_rank(gens, tol=self.config.tau_geom)) if len(gens) else 0

    def rel_interior_contains(self, x, tol: Optional[float] = None) -> bool:
        """相对内点判定：在锥内，且对所有非隐式等式的不等式严格成立"""
        x = self._check(x)
        tol = self.config.tau_geom if tol is None else tol
        if not self.contains(x, tol):
            return False
        gens = self.generators
        scale = max(1.0, np.linalg.norm(x))
        for a in self.inequalities:
            implicit = len(gens) == 0 or np.max(np.abs(gens @ a)) <= tol
            if not implicit and a @ x > -tol * scale:
                return False
        return True

    def interior_point(self) -> np.ndarray:
        """一个相对内点（生成元之和）"""
        if len(self.rays) == 0:
            return np.zeros(self.dim)
        return self.rays.sum(axis=0) / len(self.rays)

    # ------------------------------------------------------------------
    # 运算
    # ------------------------------------------------------------------
    def _same_dim(self, other: "PolyCone"):
        if other.dim != self.dim:
            raise DimensionMismatchError(f"锥维数不一致: {self.dim} vs {other.dim}")

    def polar(self, sign: str = NEGATIVE) -> "PolyCone":
        """极锥：负极锥 {y: ⟨y, x⟩ ≤ 0 ∀x}，正极锥为其相反数"""
        if sign not in (NEGATIVE, POSITIVE):
            raise ValueError(f"未知的极锥符号: {sign}")
        s = 1.0 if sign == NEGATIVE else -1.0
        return PolyCone._canonical(
            self.dim,
            s * self.inequalities,
            self.equalities,
            s * self.rays,
            self.lines,
            self.config,
        )

    def negate(self) -> "PolyCone":
        if "_vrep" in self.__dict__ and "_hrep" in self.__dict__:
            return PolyCone._canonical(self.dim, -self.rays, self.lines, -self.inequalities, self.equalities, self.config)
        if self._raw_v is not None:
            return PolyCone(self.dim, generators=-self._raw_v[0], lineality=self._raw_v[1], config=self.config)
        return PolyCone(self.dim, inequalities=-self._raw_h[0], equalities=self._raw_h[1], config=self.config)

    def sum(self, other: "PolyCone") -> "PolyCone":
        """Minkowski 和：生成元拼接"""
        self._same_dim(other)
        return PolyCone(
            self.dim,
            generators=np.vstack([self.rays, other.rays]),
            lineality=np.vstack([self.lines, other.lines]),
            config=self.config,
        )

    def intersect(self, other: "PolyCone") -> "PolyCone":
        """交集：H 表示拼接"""
        self._same_dim(other)
        a_ineq, a_eq = self._membership_rows()
        b_ineq, b_eq = other._membership_rows()
        return PolyCone(
            self.dim,
            inequalities=np.vstack([a_ineq, b_ineq]),
            equalities=np.vstack([a_eq, b_eq]),
            config=self.config,
        )

    def lineality(self) -> "PolyCone":
        """lin(C)：含于锥的最大子空间"""
        return PolyCone.subspace(self.lines, self.dim, self.config) if len(self.lines) else PolyCone.zero(self.dim, self.config)

    def span(self) -> "PolyCone":
        """Lin(C) = C − C：包含锥的最小子空间"""
        gens = self.generators
        return PolyCone.subspace(gens, self.dim, self.config) if len(gens) else PolyCone.zero(self.dim, self.config)

    def orthogonal_complement(self) -> "PolyCone":
        """子空间的正交补（对一般锥即 span 的正交补）"""
        return self.span().polar(NEGATIVE)

    def project_point(self, p) -> np.ndarray:
        """欧氏投影 Π_C(p)（凸 QP）"""
        p = self._check(p)
        ineq, eq = self._membership_rows()
        result = project_onto(ineq, np.zeros(len(ineq)), eq, np.zeros(len(eq)), p, self.config)
        if result.x is None:
            raise SolverError("锥上投影失败", iterations=result.iterations)
        return result.x

    def project(self, coords: Sequence[int]) -> "PolyCone":
        """坐标投影（保留 coords 中的坐标，按给定顺序）

        V 表示已物化时投影生成元，否则在 H 表示上做 Fourier-Motzkin；
        两者都有时取行数较少者。
        """
        coords = list(coords)
        if any(c < 0 or c >= self.dim for c in coords):
            raise DimensionMismatchError(f"投影坐标越界: {coords}")
        state = self.rep_state
        use_generators = state["v"]
        if state["v"] and state["h"]:
            v_rows = len(self.generators) if "_vrep" in self.__dict__ else sum(map(len, self._raw_v))
            h_rows = sum(map(len, self._membership_rows()))
            use_generators = v_rows <= h_rows
        if use_generators:
            if "_vrep" in self.__dict__:
                rays, lines = self._vrep
            else:
                rays, lines = self._raw_v
            return PolyCone(len(coords), generators=rays[:, coords], lineality=lines[:, coords], config=self.config)

        ineq, eq = self._membership_rows()
        drop = [c for c in range(self.dim) if c not in coords]
        A, E = fourier_motzkin(np.asarray(ineq), np.asarray(eq), drop, self.config)
        kept = [c for c in range(self.dim) if c in coords]
        order = [kept.index(c) for c in coords]
        return PolyCone(len(coords), inequalities=A[:, order], equalities=E[:, order], config=self.config)

    def embed(self, dim: int, coords: Sequence[int]) -> "PolyCone":
        """将锥嵌入更高维空间（其余坐标自由）"""
        coords = list(coords)
        ineq, eq = self._membership_rows()
        A = np.zeros((len(ineq), dim))
        E = np.zeros((len(eq), dim))
        A[:, coords] = ineq
        E[:, coords] = eq
        return PolyCone(dim, inequalities=A, equalities=E, config=self.config)

    def linear_image(self, M: np.ndarray) -> "PolyCone":
        """线性像 {Mx: x ∈ C}"""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return PolyCone(M.shape[0], generators=self.rays @ M.T, lineality=self.lines @ M.T, config=self.config)

    # ------------------------------------------------------------------
    # 输出
    # ------------------------------------------------------------------
    def to_dict(self) -> Dict:
        """两种表示都输出"""
        return {
            "dim": self.dim,
            "generators": self.rays.tolist(),
            "lineality": self.lines.tolist(),
            "inequalities": self.inequalities.tolist(),
            "equalities": self.equalities.tolist(),
        }

    def __repr__(self) -> str:
        if "_vrep" in self.__dict__:
            return f"PolyCone(dim={self.dim}, rays={len(self.rays)}, lines={len(self.lines)})"
        return f"PolyCone(dim={self.dim}, rep={self.rep_state})"


def cone_sum(cones: Iterable[PolyCone]) -> PolyCone:
    cones = list(cones)
    result = cones[0]
    for c in cones[1:]:
        result = result.sum(c)
    return result


def cone_intersection(cones: Iterable[PolyCone]) -> PolyCone:
    cones = list(cones)
    result = cones[0]
    for c in cones[1:]:
        result = result.intersect(c)
    return result


def canonical_rows(M: np.ndarray) -> np.ndarray:
    """单位化去重，用于报告输出"""
    return unique_rows(normalize_rows(np.asarray(M, dtype=float)))
