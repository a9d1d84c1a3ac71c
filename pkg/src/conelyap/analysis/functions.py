"""类 𝒱 函数：闭、凸、半正定、二次正齐次的扩展实值函数

四种变体：
- QuadOnCone(Q, C)：xᵀQx + δ(x|C)（Q 吸收一切 ½ 因子）
- ScaledDistSq(α, C)：α·dist(x, C)²
- RestrictedTo(f, C)：f + δ(·|C)
- ConjugateOf(f)：sup_z {x·z − f(z)}

每个变体给出提升二次模型 f(x) = min_w [x;w]ᵀM[x;w]，(x, w) ∈ K，
共轭求值与切片上的最小化都经由该模型化为凸 QP。
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from conelyap.config.settings import LYAPUNOV_CONFIG, NUMERICS_CONFIG, SAMPLING_CONFIG, NumericsConfig
from conelyap.errors import DimensionMismatchError, FunctionError, ParseError, SolverError
from conelyap.geometry.cone import NEGATIVE, PolyCone
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.geometry.sampling import cross_section_samples
from conelyap.numerics.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp
from conelyap.numerics.qp import QuadraticProgram, solve_qp
from conelyap.analysis.verdict import VerificationReport, Verdict
from conelyap.analysis.workers import run_indexed


@dataclass(frozen=True)
class LiftedModel:
    """f(x) = min_w zᵀMz，z = (x, w) ∈ cone ⊆ ℝ^{n+m}"""

    M: np.ndarray
    cone: PolyCone
    n: int

    @property
    def dim(self) -> int:
        return self.M.shape[0]


class ConeFunction(ABC):
    """类 𝒱 成员的公共接口"""

    variant: str = ""

    def __init__(self, n: int, config: Optional[NumericsConfig] = None):
        self.n = int(n)
        self.config = config or NUMERICS_CONFIG

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise DimensionMismatchError(f"点的维数 {x.size} 与函数维数 {self.n} 不一致")
        return x

    @abstractmethod
    def evaluate(self, x) -> float:
        """函数值（可为 +∞）"""

    @abstractmethod
    def lifted(self) -> LiftedModel:
        """提升二次模型；不可用时抛 FunctionError"""

    @abstractmethod
    def scaled(self, c: float) -> "ConeFunction":
        """c·f（c > 0）"""

    @abstractmethod
    def to_dict(self) -> Dict:
        pass

    def __call__(self, x) -> float:
        return self.evaluate(x)


class QuadOnCone(ConeFunction):
    """xᵀQx + δ(x|C)

    Args:
        Q: 对称矩阵（在 C 上半正定）
        cone: 有效定义域 C
        validate: 是否在生成元与截面样本上检查 xᵀQx ≥ 0
    """

    variant = "quad_on_cone"

    def __init__(self, Q, cone: PolyCone, validate: bool = True):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        super().__init__(Q.shape[0], cone.config)
        if Q.shape != (self.n, self.n) or cone.dim != self.n:
            raise DimensionMismatchError(f"Q 形状 {Q.shape} 与锥维数 {cone.dim} 不一致")
        scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)))
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * scale:
            raise FunctionError("Q 不对称")
        self.Q = 0.5 * (Q + Q.T)
        self.Q.setflags(write=False)
        self.cone = cone
        if validate:
            points = np.vstack([cone.generators, cross_section_samples(cone, count=64)])
            values = np.einsum("ij,jk,ik->i", points, self.Q, points) if len(points) else np.zeros(0)
            if len(values) and values.min() < -self.config.tau_geom * scale:
                raise FunctionError(f"Q 在锥上不半正定（最小值 {values.min():.3e}）")

    def evaluate(self, x) -> float:
        x = self._check(x)
        if not self.cone.contains(x, self.config.tau_geom):
            return np.inf
        return float(x @ self.Q @ x)

    def lifted(self) -> LiftedModel:
        return LiftedModel(np.array(self.Q), self.cone, self.n)

    def scaled(self, c: float) -> "QuadOnCone":
        return QuadOnCone(c * self.Q, self.cone, validate=False)

    def scalar_multiple(self) -> Optional[float]:
        """Q = αI 时返回 α"""
        alpha = float(self.Q[0, 0]) if self.n else 0.0
        if np.allclose(self.Q, alpha * np.eye(self.n), atol=1e-12):
            return alpha
        return None

    def to_dict(self) -> Dict:
        return {"variant": self.variant, "Q": self.Q.tolist(), "cone": self.cone.to_dict()}

    def __repr__(self) -> str:
        return f"QuadOnCone(n={self.n})"


class ScaledDistSq(ConeFunction):
    """α·dist(x, C)²，经锥上投影求值"""

    variant = "scaled_dist_sq"

    def __init__(self, alpha: float, cone: PolyCone):
        super().__init__(cone.dim, cone.config)
        if not alpha > 0:
            raise FunctionError(f"α 必须为正: {alpha}")
        self.alpha = float(alpha)
        self.cone = cone

    def evaluate(self, x) -> float:
        x = self._check(x)
        if self.cone.contains(x, self.config.tau_geom):
            return 0.0
        try:
            p = self.cone.project_point(x)
        except SolverError as e:
            raise FunctionError(f"投影失败: {e}") from e
        return float(self.alpha * np.sum((x - p) ** 2))

    def lifted(self) -> LiftedModel:
        n = self.n
        I = np.eye(n)
        M = self.alpha * np.block([[I, -I], [-I, I]])
        return LiftedModel(M, self.cone.embed(2 * n, range(n, 2 * n)), n)

    def scaled(self, c: float) -> "ScaledDistSq":
        return ScaledDistSq(c * self.alpha, self.cone)

    def to_dict(self) -> Dict:
        return {"variant": self.variant, "alpha": self.alpha, "cone": self.cone.to_dict()}

    def __repr__(self) -> str:
        return f"ScaledDistSq(alpha={self.alpha:g}, n={self.n})"


class RestrictedTo(ConeFunction):
    """f + δ(·|C)"""

    variant = "restricted_to"

    def __init__(self, inner: ConeFunction, cone: PolyCone):
        if cone.dim != inner.n:
            raise DimensionMismatchError(f"锥维数 {cone.dim} 与函数维数 {inner.n} 不一致")
        super().__init__(inner.n, inner.config)
        self.inner = inner
        self.cone = cone

    def evaluate(self, x) -> float:
        x = self._check(x)
        if not self.cone.contains(x, self.config.tau_geom):
            return np.inf
        return self.inner.evaluate(x)

    def lifted(self) -> LiftedModel:
        model = self.inner.lifted()
        cone = model.cone.intersect(self.cone.embed(model.dim, range(self.n)))
        return LiftedModel(model.M, cone, self.n)

    def scaled(self, c: float) -> "RestrictedTo":
        return RestrictedTo(self.inner.scaled(c), self.cone)

    def to_dict(self) -> Dict:
        return {"variant": self.variant, "inner": self.inner.to_dict(), "cone": self.cone.to_dict()}

    def __repr__(self) -> str:
        return f"RestrictedTo({self.inner!r})"


class ConjugateOf(ConeFunction):
    """f*(y) = sup_z {y·z − f(z)}：先在回收锥上用 LP 判无界，再解凸 QP"""

    variant = "conjugate_of"

    def __init__(self, inner: ConeFunction):
        super().__init__(inner.n, inner.config)
        self.inner = inner

    @cached_property
    def _inner_data(self):
        model = self.inner.lifted()
        K_ineq, K_eq = (np.asarray(r) for r in model.cone._membership_rows())
        w, V = np.linalg.eigh(model.M)
        curved = V[:, w > 1e-10 * max(1.0, float(np.max(np.abs(w), initial=0.0)))].T
        return model, K_ineq, K_eq, curved

    def evaluate(self, y) -> float:
        y = self._check(y)
        model, K_ineq, K_eq, curved = self._inner_data
        N = model.dim
        lin = np.concatenate([y, np.zeros(N - self.n)])

        # 回收方向：d ∈ K，Md = 0，y·d > 0 ⟹ 上确界为 +∞
        box = np.vstack([np.eye(N), -np.eye(N)])
        recession = LinearProgram.build(
            lin,
            np.vstack([K_ineq, box]),
            np.concatenate([np.zeros(len(K_ineq)), np.ones(2 * N)]),
            np.vstack([K_eq, curved]),
            np.zeros(len(K_eq) + len(curved)),
            sense="max",
        )
        try:
            rec = solve_lp(recession, self.config)
        except SolverError as e:
            raise FunctionError(f"共轭回收锥 LP 失败: {e}") from e
        if rec.status == OPTIMAL and rec.value > self.config.tau_geom * max(1.0, np.linalg.norm(y)):
            return np.inf

        qp = QuadraticProgram.build(2.0 * model.M, -lin, K_ineq, np.zeros(len(K_ineq)), K_eq, np.zeros(len(K_eq)))
        try:
            result = solve_qp(qp, self.config)
        except SolverError as e:
            raise FunctionError(f"共轭 QP 失败: {e}") from e
        if result.status == UNBOUNDED:
            return np.inf
        if result.status != OPTIMAL:
            raise FunctionError(f"共轭 QP 状态异常: {result.status}")
        return max(-result.value, 0.0)

    def lifted(self) -> LiftedModel:
        inner = self.inner
        if isinstance(inner, ConjugateOf):
            return inner.inner.lifted()
        if isinstance(inner, QuadOnCone):
            return _conjugate_quadratic_model(inner)
        raise FunctionError(f"{inner!r} 的共轭没有提升二次模型")

    def scaled(self, c: float) -> "ConjugateOf":
        # c·g* = (g/c)*
        return ConjugateOf(self.inner.scaled(1.0 / c))

    def to_dict(self) -> Dict:
        return {"variant": self.variant, "inner": self.inner.to_dict()}

    def __repr__(self) -> str:
        return f"ConjugateOf({self.inner!r})"


def _conjugate_quadratic_model(f: QuadOnCone) -> LiftedModel:
    """(xᵀQx + δ_C)*(y) = min_{w ∈ C_u°} ¼ (Bᵀy − w)ᵀ Q_u⁻¹ (Bᵀy − w)

    B 为 span(C) 的正交基，Q_u = BᵀQB 须正定，C_u 为 C 在 B 坐标下的表示。
    """
    n = f.n
    C = f.cone
    B = C.span().lines.T  # n × s
    s = B.shape[1]
    if s == 0:
        return LiftedModel(np.zeros((n, n)), PolyCone.full(n, C.config), n)
    Q_u = B.T @ f.Q @ B
    eig = np.linalg.eigvalsh(Q_u)
    if eig.min() <= 1e-10 * max(1.0, eig.max()):
        raise FunctionError("Q 在 span(C) 上不正定，共轭没有二次模型")
    C_u = PolyCone(s, generators=C.rays @ B, lineality=C.lines @ B, config=C.config)
    N = np.hstack([B.T, -np.eye(s)])
    M = 0.25 * N.T @ np.linalg.inv(Q_u) @ N
    M = 0.5 * (M + M.T)
    return LiftedModel(M, C_u.polar(NEGATIVE).embed(n + s, range(n, n + s)), n)


# ----------------------------------------------------------------------
# 运算
# ----------------------------------------------------------------------
def evaluate(f: ConeFunction, x) -> float:
    return f.evaluate(x)


def restrict(f: ConeFunction, C: PolyCone) -> ConeFunction:
    """f|_C = f + δ(·|C)"""
    if C.dim != f.n:
        raise DimensionMismatchError(f"锥维数 {C.dim} 与函数维数 {f.n} 不一致")
    if isinstance(f, QuadOnCone):
        return QuadOnCone(f.Q, f.cone.intersect(C), validate=False)
    if isinstance(f, RestrictedTo):
        return RestrictedTo(f.inner, f.cone.intersect(C))
    return RestrictedTo(f, C)


def conjugate(f: ConeFunction) -> ConeFunction:
    """凸共轭；αI 二次型与距离平方有闭式，其余返回逐点求值的包装"""
    if isinstance(f, ConjugateOf):
        return f.inner
    if isinstance(f, QuadOnCone):
        alpha = f.scalar_multiple()
        if alpha is not None and alpha > 0:
            return ScaledDistSq(1.0 / (4.0 * alpha), f.cone.polar(NEGATIVE))
        if alpha is not None and abs(alpha) <= 1e-15:
            return QuadOnCone(np.zeros((f.n, f.n)), f.cone.polar(NEGATIVE), validate=False)
    if isinstance(f, ScaledDistSq):
        return QuadOnCone(np.eye(f.n) / (4.0 * f.alpha), f.cone.polar(NEGATIVE), validate=False)
    return ConjugateOf(f)


def infimal_convolution(f: ConeFunction, g: ConeFunction) -> ConeFunction:
    """f □ g，仅支持 (α‖·‖², δ_C) 组合，结果为 α·dist(·, C)²"""
    for a, b in ((f, g), (g, f)):
        if (
            isinstance(a, QuadOnCone)
            and isinstance(b, QuadOnCone)
            and a.cone.is_full()
            and (a.scalar_multiple() or 0.0) > 0
            and b.scalar_multiple() == 0.0
        ):
            return ScaledDistSq(a.scalar_multiple(), b.cone)
    raise FunctionError("只支持 α‖·‖² 与锥指示函数的下卷积")


def minimize_over(f: ConeFunction, P: Polyhedron, config: Optional[NumericsConfig] = None) -> Tuple[float, Optional[np.ndarray]]:
    """min_{y ∈ P} f(y)，返回 (值, 最优点)；P 为空或与定义域不交时为 (+∞, None)"""
    cfg = config or f.config
    model = f.lifted()
    N, n = model.dim, f.n
    K_ineq, K_eq = (np.asarray(r) for r in model.cone._membership_rows())

    def pad(M):
        return np.hstack([M, np.zeros((len(M), N - n))])

    qp = QuadraticProgram.build(
        2.0 * model.M,
        np.zeros(N),
        np.vstack([K_ineq, pad(P.A)]),
        np.concatenate([np.zeros(len(K_ineq)), P.b]),
        np.vstack([K_eq, pad(P.E)]),
        np.concatenate([np.zeros(len(K_eq)), P.f]),
    )
    result = solve_qp(qp, cfg)
    if result.status == INFEASIBLE:
        return np.inf, None
    if result.status != OPTIMAL:
        raise SolverError(f"切片上最小化 f 的 QP 状态异常: {result.status}", iterations=result.iterations)
    return max(result.value, 0.0), result.x[:n]


# ----------------------------------------------------------------------
# 正定性
# ----------------------------------------------------------------------
@dataclass
class PosDefBounds:
    """α‖x‖² ≤ f(x) ≤ β‖x‖²（x ∈ C）"""

    alpha: float
    beta: float
    cone: PolyCone
    certified_by: str  # "exact" 或 "sampled"
    samples: int = 0
    mesh: Optional[float] = None
    argmin: Optional[np.ndarray] = None
    argmax: Optional[np.ndarray] = None


@dataclass
class PosDefRefutation:
    """正定性不成立（refuted）或无法判定（inconclusive）的见证"""

    kind: str
    witness: Optional[np.ndarray]
    value: float
    samples: int = 0
    details: Dict = field(default_factory=dict)


def posdef_bounds(
    f: ConeFunction,
    C: PolyCone,
    count: Optional[int] = None,
    seed: Optional[int] = None,
    mesh: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> Union[PosDefBounds, PosDefRefutation]:
    """在单位截面上取 f 的最小/最大值作为 α/β

    极射线与线性空间方向总是精确包含；最小值接近 0 时在最小点附近加密，
    加密达到上限仍在容差内则判为无法判定。
    """
    if C.dim != f.n:
        raise DimensionMismatchError(f"锥维数 {C.dim} 与函数维数 {f.n} 不一致")
    if C.is_trivial():
        return PosDefBounds(1.0, 1.0, C, "exact")

    if isinstance(f, QuadOnCone) and f.cone.contains_cone(C):
        alpha = f.scalar_multiple()
        if alpha is not None and alpha > 0:
            return PosDefBounds(alpha, alpha, C, "exact")

    mesh = SAMPLING_CONFIG["mesh"] if mesh is None else mesh
    points = cross_section_samples(C, count, seed, mesh)
    values = np.array(run_indexed(f.evaluate, list(points), max_workers, "正定性样本"))

    bad = np.where(~np.isfinite(values))[0]
    if bad.size:
        return PosDefRefutation("refuted", points[bad[0]], np.inf, len(points), {"reason": "infinite"})

    scale = max(1.0, float(values.max()))
    tol = LYAPUNOV_CONFIG["posdef_tol"] * scale
    zero = 1e-12 * scale
    i_min = int(np.argmin(values))
    x_min, v_min = points[i_min], float(values[i_min])

    rounds = 0
    gens = C.generators
    step = mesh
    while zero < v_min <= tol and rounds < SAMPLING_CONFIG["refine_cap"]:
        step /= 4.0
        candidates = []
        for g in gens:
            for t in (step, -step):
                x = x_min + t * g
                if np.linalg.norm(x) > 0 and C.contains(x, C.config.tau_geom):
                    candidates.append(x / np.linalg.norm(x))
        for x in candidates:
            v = f.evaluate(x)
            if v < v_min:
                x_min, v_min = x, v
        rounds += 1

    if v_min <= zero:
        return PosDefRefutation("refuted", x_min, v_min, len(points), {"reason": "nonpositive"})
    if v_min <= tol:
        logger.debug(f"正定性加密 {rounds} 轮后最小值 {v_min:.3e} 仍在容差内")
        return PosDefRefutation("inconclusive", x_min, v_min, len(points), {"refine_rounds": rounds})

    i_max = int(np.argmax(values))
    return PosDefBounds(
        alpha=v_min,
        beta=float(values[i_max]),
        cone=C,
        certified_by="sampled",
        samples=len(points),
        mesh=mesh,
        argmin=x_min,
        argmax=points[i_max],
    )


def _posdef_report(name: str, result, refuted_verdict: Verdict) -> VerificationReport:
    if isinstance(result, PosDefBounds):
        return VerificationReport(
            name,
            Verdict.HOLDS,
            checked_points=result.samples,
            details={"alpha": result.alpha, "beta": result.beta, "certified_by": result.certified_by},
        )
    verdict = refuted_verdict if result.kind == "refuted" else Verdict.INCONCLUSIVE
    return VerificationReport(
        name,
        verdict,
        witness={"x": result.witness.tolist() if result.witness is not None else None, "value": result.value},
        checked_points=result.samples,
        details=dict(result.details),
    )


def check_theorem1_transfer(
    f: ConeFunction,
    C: PolyCone,
    D: PolyCone,
    count: Optional[int] = None,
    seed: Optional[int] = None,
) -> VerificationReport:
    """f 在 C 上正定且 C⁻ ∩ D = {0} ⟹ (f|_C)* 在 D 上正定

    假设不成立时结论为 hypothesis_not_met，只有最后一步可能给出 fails。
    """
    stages = []
    try:
        stage1 = _posdef_report("posdef_f_on_C", posdef_bounds(f, C, count, seed), Verdict.HYPOTHESIS_NOT_MET)
    except (SolverError, FunctionError) as e:
        stage1 = VerificationReport("posdef_f_on_C", Verdict.INCONCLUSIVE, details={"error": str(e)})
    stages.append(stage1)

    transversal = C.polar(NEGATIVE).intersect(D).is_trivial()
    stages.append(
        VerificationReport(
            "polar_C_meets_D_trivially",
            Verdict.HOLDS if transversal else Verdict.HYPOTHESIS_NOT_MET,
        )
    )

    if stage1.verdict != Verdict.HOLDS or not transversal:
        verdict = Verdict.INCONCLUSIVE if stage1.verdict == Verdict.INCONCLUSIVE else Verdict.HYPOTHESIS_NOT_MET
        return VerificationReport("theorem1", verdict, sub_reports=stages)

    W = conjugate(restrict(f, C))
    try:
        stage3 = _posdef_report("posdef_conjugate_on_D", posdef_bounds(W, D, count, seed), Verdict.FAILS)
    except (SolverError, FunctionError) as e:
        stage3 = VerificationReport("posdef_conjugate_on_D", Verdict.INCONCLUSIVE, details={"error": str(e)})
    stages.append(stage3)
    return VerificationReport(
        "theorem1",
        stage3.verdict,
        witness=stage3.witness,
        checked_points=stage3.checked_points,
        sub_reports=stages,
        details=dict(stage3.details),
    )


# ----------------------------------------------------------------------
# 解析
# ----------------------------------------------------------------------
def function_from_dict(data: Dict, path: str = "", field: str = "function", n: Optional[int] = None, config=None) -> ConeFunction:
    """解析函数 JSON

    {"variant": "quad_on_cone", "Q", "cone"} | {"variant": "scaled_dist_sq", "alpha", "cone"}
    | {"variant": "restricted_to", "inner", "cone"} | {"variant": "conjugate_of", "inner"}；
    省略 cone 表示全空间。
    """
    if not isinstance(data, dict) or "variant" not in data:
        raise ParseError("缺少 variant 字段", path, field)
    variant = data["variant"]

    def cone_of(dim: int) -> PolyCone:
        if "cone" not in data:
            return PolyCone.full(dim, config)
        cone = PolyCone.from_dict(data["cone"], path, f"{field}.cone", config)
        if cone.dim != dim:
            raise ParseError(f"锥维数 {cone.dim} 与函数维数 {dim} 不一致", path, f"{field}.cone.dim")
        return cone

    try:
        if variant == "quad_on_cone":
            Q = np.atleast_2d(np.asarray(data["Q"], dtype=float))
            return QuadOnCone(Q, cone_of(Q.shape[0]))
        if variant == "scaled_dist_sq":
            if "cone" not in data and n is None:
                raise ParseError("scaled_dist_sq 需要 cone 字段", path, field)
            dim = int(data["cone"]["dim"]) if "cone" in data else n
            return ScaledDistSq(float(data["alpha"]), cone_of(dim))
        if variant == "restricted_to":
            inner = function_from_dict(data["inner"], path, f"{field}.inner", n, config)
            return RestrictedTo(inner, cone_of(inner.n))
        if variant == "conjugate_of":
            return ConjugateOf(function_from_dict(data["inner"], path, f"{field}.inner", n, config))
    except KeyError as e:
        raise ParseError(f"缺少字段 {e}", path, field) from e
    except (FunctionError, DimensionMismatchError, TypeError, ValueError) as e:
        raise ParseError(str(e), path, field) from e
    raise ParseError(f"未知的函数变体: {variant}", path, f"{field}.variant")
