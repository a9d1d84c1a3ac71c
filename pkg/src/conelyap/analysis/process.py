"""凸过程

ConvexProcess 以 ℝ²ⁿ 中的图锥表示 H（坐标顺序 (x, y)，y ∈ H(x)）。
提供像、逆、幂、对偶过程、最小/最大线性过程、可行/可达集，以及结构性条件检查。
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from conelyap.config.settings import NUMERICS_CONFIG, NumericsConfig
from conelyap.errors import ConsistencyError, DimensionMismatchError, ParseError
from conelyap.geometry.cone import NEGATIVE, POSITIVE, PolyCone
from conelyap.geometry.polyhedron import Polyhedron


def _orthogonal_image(cone: PolyCone, T: np.ndarray) -> PolyCone:
    """正交变换 T 下的像（两种表示同时变换）"""
    return PolyCone._canonical(
        cone.dim,
        cone.rays @ T.T,
        cone.lines @ T.T,
        cone.inequalities @ T.T,
        cone.equalities @ T.T,
        cone.config,
    )


@dataclass
class FeasibleSetResult:
    """可行集迭代结果

    Attributes:
        cone: 不动点 D_k（未收敛时为外逼近 D_max_iter）
        converged: 是否达到 D_k = D_{k+1}
        iterations: D_1 = dom H 之后的严格收缩次数
        fixed_point_index: 满足 D_k = D_{k+1} 的 k（未收敛为 None）
        last_iterates: 未收敛时最后两个迭代
    """

    cone: PolyCone
    converged: bool
    iterations: int
    fixed_point_index: Optional[int] = None
    last_iterates: Tuple[PolyCone, ...] = field(default_factory=tuple)


class ConvexProcess:
    """凸过程 H: ℝⁿ ⇉ ℝⁿ

    Args:
        graph: ℝ²ⁿ 中的图锥
        name: 名称（报告用）
    """

    def __init__(self, graph: PolyCone, name: str = ""):
        if graph.dim % 2:
            raise DimensionMismatchError(f"图锥维数 {graph.dim} 不是偶数")
        self.graph = graph
        self.n = graph.dim // 2
        self.name = name
        self.max_iter: Optional[int] = None
        self._dual_cache: Dict[str, "ConvexProcess"] = {}
        self._feasible_cache: Dict[int, FeasibleSetResult] = {}

    @property
    def config(self) -> NumericsConfig:
        return self.graph.config

    # ------------------------------------------------------------------
    # 构造
    # ------------------------------------------------------------------
    @classmethod
    def from_matrix(cls, A, input_cone: Optional[PolyCone] = None, state_constraint: Optional[PolyCone] = None, name: str = "", config=None):
        """H(x) = Ax + K_input（x ∈ K_state），否则为空"""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatchError(f"矩阵 A 形状 {A.shape} 不是方阵")
        cfg = config or NUMERICS_CONFIG
        ineq: List[np.ndarray] = []
        eq: List[np.ndarray] = []
        if state_constraint is not None:
            s_ineq, s_eq = state_constraint._membership_rows()
            ineq += [np.concatenate([a, np.zeros(n)]) for a in s_ineq]
            eq += [np.concatenate([a, np.zeros(n)]) for a in s_eq]
        if input_cone is None:
            eq += [np.concatenate([-A[i], np.eye(n)[i]]) for i in range(n)]
        else:
            k_ineq, k_eq = input_cone._membership_rows()
            ineq += [np.concatenate([-a @ A, a]) for a in k_ineq]
            eq += [np.concatenate([-a @ A, a]) for a in k_eq]
        graph = PolyCone(
            2 * n,
            inequalities=np.array(ineq).reshape(-1, 2 * n),
            equalities=np.array(eq).reshape(-1, 2 * n),
            config=cfg,
        )
        return cls(graph, name)

    @classmethod
    def from_dict(cls, data: Dict, path: str = "", config=None) -> "ConvexProcess":
        """解析过程 JSON：图形式 {"n", "graph"} 或便捷形式 {"A", "input_cone", "state_constraint"}"""
        if not isinstance(data, dict):
            raise ParseError("过程描述必须是 JSON 对象", path)
        name = str(data.get("name", ""))
        if "graph" in data:
            if "n" not in data:
                raise ParseError("缺少 n 字段", path, "n")
            n = int(data["n"])
            graph = PolyCone.from_dict(data["graph"], path, "graph", config)
            if graph.dim != 2 * n:
                raise ParseError(f"图锥维数 {graph.dim} 应为 2n = {2 * n}", path, "graph.dim")
            return cls(graph, name)
        if "A" in data:
            try:
                A = np.atleast_2d(np.asarray(data["A"], dtype=float))
            except (TypeError, ValueError) as e:
                raise ParseError(str(e), path, "A") from e
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ParseError(f"A 不是方阵: {A.shape}", path, "A")
            if "n" in data and int(data["n"]) != A.shape[0]:
                raise ParseError("n 与 A 的维数不一致", path, "n")
            k_in = PolyCone.from_dict(data["input_cone"], path, "input_cone", config) if "input_cone" in data else None
            k_state = (
                PolyCone.from_dict(data["state_constraint"], path, "state_constraint", config)
                if "state_constraint" in data
                else None
            )
            for label, cone in (("input_cone", k_in), ("state_constraint", k_state)):
                if cone is not None and cone.dim != A.shape[0]:
                    raise ParseError(f"维数 {cone.dim} 与 A 不一致", path, f"{label}.dim")
            return cls.from_matrix(A, k_in, k_state, name, config)
        raise ParseError("需要 graph 或 A 字段", path)

    def to_dict(self) -> Dict:
        return {"n": self.n, "name": self.name, "graph": self.graph.to_dict()}

    # ------------------------------------------------------------------
    # 像与定义域
    # ------------------------------------------------------------------
    def _graph_rows(self):
        ineq, eq = self.graph._membership_rows()
        return np.asarray(ineq), np.asarray(eq)

    def image_of_point(self, x) -> Polyhedron:
        """H(x) = {y: (x, y) ∈ graph}，x ∉ dom H 时为空"""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise DimensionMismatchError(f"点的维数 {x.size} 与过程维数 {self.n} 不一致")
        ineq, eq = self._graph_rows()
        n = self.n
        return Polyhedron(n, ineq[:, n:], -ineq[:, :n] @ x, eq[:, n:], -eq[:, :n] @ x, self.config)

    def h_zero(self) -> PolyCone:
        """锥 H(0)"""
        ineq, eq = self._graph_rows()
        return PolyCone(self.n, inequalities=ineq[:, self.n :], equalities=eq[:, self.n :], config=self.config)

    def image_of_cone(self, S: PolyCone) -> PolyCone:
        """H(S) = {y: ∃x ∈ S, y ∈ H(x)}"""
        if S.dim != self.n:
            raise DimensionMismatchError(f"锥维数 {S.dim} 与过程维数 {self.n} 不一致")
        joint = self.graph.intersect(S.embed(2 * self.n, range(self.n)))
        return joint.project(range(self.n, 2 * self.n)).dd_convert()

    @cached_property
    def dom(self) -> PolyCone:
        return self.graph.project(range(self.n)).dd_convert()

    @cached_property
    def im(self) -> PolyCone:
        return self.graph.project(range(self.n, 2 * self.n)).dd_convert()

    def is_strict(self) -> bool:
        return self.dom.is_full()

    # ------------------------------------------------------------------
    # 逆、复合、幂
    # ------------------------------------------------------------------
    def _swap(self) -> np.ndarray:
        n = self.n
        T = np.zeros((2 * n, 2 * n))
        T[:n, n:] = np.eye(n)
        T[n:, :n] = np.eye(n)
        return T

    def inverse(self) -> "ConvexProcess":
        """H⁻¹：图坐标交换"""
        T = self._swap()
        if "_vrep" in self.graph.__dict__ and "_hrep" in self.graph.__dict__:
            graph = _orthogonal_image(self.graph, T)
        else:
            ineq, eq = self._graph_rows()
            graph = PolyCone(2 * self.n, inequalities=ineq @ T.T, equalities=eq @ T.T, config=self.config)
        return ConvexProcess(graph, f"{self.name}^-1" if self.name else "")

    def compose(self, other: "ConvexProcess") -> "ConvexProcess":
        """复合 other ∘ self：先走 self 再走 other"""
        if other.n != self.n:
            raise DimensionMismatchError("过程维数不一致")
        n = self.n
        a_ineq, a_eq = self._graph_rows()
        b_ineq, b_eq = other._graph_rows()

        def first(M):
            return np.hstack([M, np.zeros((len(M), n))])

        def second(M):
            return np.hstack([np.zeros((len(M), n)), M])

        joint = PolyCone(
            3 * n,
            inequalities=np.vstack([first(a_ineq), second(b_ineq)]),
            equalities=np.vstack([first(a_eq), second(b_eq)]),
            config=self.config,
        )
        coords = list(range(n)) + list(range(2 * n, 3 * n))
        return ConvexProcess(joint.project(coords).dd_convert())

    def power(self, q: int) -> "ConvexProcess":
        """H^q（q ≥ 1），每步复合后做双描述最小化"""
        if q < 1:
            raise ValueError("幂次必须 ≥ 1")
        result = self
        for _ in range(q - 1):
            result = result.compose(self)
        return result

    # ------------------------------------------------------------------
    # 对偶与线性过程
    # ------------------------------------------------------------------
    def dual(self, sign: str = POSITIVE) -> "ConvexProcess":
        """对偶过程

        graph(H⁻) = {(q, p): (−p, q) ∈ graph°}，graph(H⁺) = {(q, p): (p, −q) ∈ graph°}。
        """
        if sign in self._dual_cache:
            return self._dual_cache[sign]
        n = self.n
        polar = self.graph.polar(NEGATIVE)
        T = np.zeros((2 * n, 2 * n))
        if sign == NEGATIVE:
            # (u, v) ↦ (q, p) = (v, −u)
            T[:n, n:] = np.eye(n)
            T[n:, :n] = -np.eye(n)
        elif sign == POSITIVE:
            # (u, v) ↦ (q, p) = (−v, u)
            T[:n, n:] = -np.eye(n)
            T[n:, :n] = np.eye(n)
        else:
            raise ValueError(f"未知的对偶符号: {sign}")
        suffix = "-" if sign == NEGATIVE else "+"
        graph = _orthogonal_image(polar, T)
        cls = LinearProcess if self.graph.is_subspace() else ConvexProcess
        result = cls(graph, f"{self.name}^{suffix}" if self.name else "")
        result.max_iter = self.max_iter
        self._dual_cache[sign] = result
        return result

    def minimal_linear(self) -> "LinearProcess":
        """L₋：graph = lin(graph H)"""
        return LinearProcess(self.graph.lineality(), f"L-({self.name})" if self.name else "")

    def maximal_linear(self) -> "LinearProcess":
        """L₊：graph = Lin(graph H)"""
        return LinearProcess(self.graph.span(), f"L+({self.name})" if self.name else "")

    # ------------------------------------------------------------------
    # 可行集与条件检查
    # ------------------------------------------------------------------
    def feasible_set(self, max_iter: Optional[int] = None) -> FeasibleSetResult:
        """D_1 = dom H，D_{k+1} = H⁻¹(D_k)，迭代至不动点或 max_iter（默认 self.max_iter，再默认 4n）

        每步断言 D_{k+1} ⊆ D_k；定义域条件成立时 n 步内必收敛，否则视为内部错误。
        """
        max_iter = max_iter or self.max_iter or 4 * self.n
        if max_iter in self._feasible_cache:
            return self._feasible_cache[max_iter]

        inverse = self.inverse()
        current = previous = self.dom
        strict = 0
        result = None
        for k in range(1, max_iter + 1):
            nxt = inverse.image_of_cone(current)
            if not current.contains_cone(nxt):
                raise ConsistencyError(f"定义域链不单调: D_{k + 1} ⊄ D_{k}")
            if nxt.contains_cone(current):
                result = FeasibleSetResult(current, True, strict, k)
                break
            strict += 1
            logger.debug(f"可行集迭代 k={k}: 射线 {len(nxt.rays)}, 线性空间 {len(nxt.lines)} 维")
            previous, current = current, nxt

        if result is None:
            logger.warning(f"可行集迭代 {max_iter} 步未收敛，返回外逼近")
            result = FeasibleSetResult(current, False, strict, None, (previous, current))

        if self.check_domain_condition() and (not result.converged or result.fixed_point_index > self.n):
            raise ConsistencyError(
                f"定义域条件成立但可行集迭代未在 {self.n} 步内收敛（不动点下标 {result.fixed_point_index}）"
            )
        self._feasible_cache[max_iter] = result
        return result

    @cached_property
    def _domain_condition(self) -> bool:
        r_minus = self.minimal_linear().reachable()
        return self.dom.sum(r_minus).is_full()

    def check_domain_condition(self) -> bool:
        """dom H + R₋ = ℝⁿ"""
        return self._domain_condition

    def check_transversality(self) -> Dict[str, Optional[bool]]:
        """F(H)⁻ ∩ F(H^±) = {0}；相关可行集未收敛时对应项为 None"""
        own = self.feasible_set()
        result: Dict[str, Optional[bool]] = {}
        for key, sign in (("pos", POSITIVE), ("neg", NEGATIVE)):
            other = self.dual(sign).feasible_set()
            if not (own.converged and other.converged):
                result[key] = None
                continue
            result[key] = own.cone.polar(NEGATIVE).intersect(other.cone).is_trivial()
        return result

    def check_necessary_condition(self) -> Optional[bool]:
        """F(H) ∩ H(0) = {0}"""
        feasible = self.feasible_set()
        if not feasible.converged:
            return None
        return feasible.cone.intersect(self.h_zero()).is_trivial()

    def check_rint_condition(self) -> Optional[bool]:
        """F(H) ⊆ rint dom H（原点除外）"""
        feasible = self.feasible_set()
        if not feasible.converged:
            return None
        F = feasible.cone
        if F.is_trivial():
            return True
        points = list(F.generators)
        center = F.interior_point()
        if np.linalg.norm(center) > 0:
            points.append(center)
        return all(self.dom.rel_interior_contains(p) for p in points)

    def check_h_zero_identity(self) -> bool:
        """H(0) = (dom H⁺)⁺"""
        return self.h_zero().equals(self.dual(POSITIVE).dom.polar(POSITIVE))

    def graph_equals(self, other: "ConvexProcess") -> bool:
        return self.n == other.n and self.graph.equals(other.graph)

    def __repr__(self) -> str:
        return f"ConvexProcess(n={self.n}, name={self.name!r})"


class LinearProcess(ConvexProcess):
    """图为子空间的凸过程"""

    def __init__(self, graph: PolyCone, name: str = ""):
        super().__init__(graph, name)
        if not graph.is_subspace():
            raise ValueError("线性过程的图必须是子空间")

    def orthogonal(self) -> "LinearProcess":
        """L^⊥ = L⁻ = L⁺"""
        return self.dual(NEGATIVE)

    def reachable(self) -> PolyCone:
        """R(L) = Lⁿ(0)"""
        current = PolyCone.zero(self.n, self.config)
        for _ in range(self.n):
            current = self.image_of_cone(current)
        return current

    def feasible(self) -> PolyCone:
        """F(L) = L⁻ⁿ(ℝⁿ)"""
        inverse = self.inverse()
        current = PolyCone.full(self.n, self.config)
        for _ in range(self.n):
            current = inverse.image_of_cone(current)
        return current


def reachable_linear(L: LinearProcess) -> PolyCone:
    return L.reachable()


def feasible_linear(L: LinearProcess) -> PolyCone:
    return L.feasible()
