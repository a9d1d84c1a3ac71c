"""Lyapunov 函数验证与对偶构造

四种模式：
- weak / strong：在 F(H) 的单位截面上，对切片 F(H)∩H(x) 检查
  ∃y（weak）/ ∀y（strong）满足 V(y) ≤ γV(x)
- goebel_weak / goebel_strong：在 dom H 上对整个 H(x) 做同样检查

weak 解切片上的凸 QP；strong 枚举切片顶点并检查回收方向。
结论是采样意义下的 holds_sampled，而非证明。
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from conelyap.config.settings import LYAPUNOV_CONFIG, SAMPLING_CONFIG
from conelyap.errors import ConeLyapError, ConsistencyError, DimensionMismatchError, FunctionError, SolverError
from conelyap.geometry.cone import NEGATIVE, POSITIVE, PolyCone
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.geometry.sampling import cross_section_samples
from conelyap.numerics.lp import INFEASIBLE, UNBOUNDED, LinearProgram, solve_lp
from conelyap.analysis.functions import (
    ConeFunction,
    _posdef_report,
    conjugate,
    minimize_over,
    posdef_bounds,
    restrict,
)
from conelyap.analysis.process import ConvexProcess
from conelyap.analysis.verdict import VerificationReport, Verdict
from conelyap.analysis.workers import run_indexed

MODES = ("weak", "strong", "goebel_weak", "goebel_strong")


@dataclass(frozen=True)
class SamplingSpec:
    """截面采样参数，None 取 SAMPLING_CONFIG 默认值"""

    count: Optional[int] = None
    seed: Optional[int] = None
    mesh: Optional[float] = None

    def resolved(self) -> "SamplingSpec":
        return SamplingSpec(
            SAMPLING_CONFIG["count"] if self.count is None else self.count,
            SAMPLING_CONFIG["seed"] if self.seed is None else self.seed,
            SAMPLING_CONFIG["mesh"] if self.mesh is None else self.mesh,
        )


@dataclass
class LyapunovQuery:
    """一次 Lyapunov 验证请求

    Args:
        process: 凸过程 H
        candidate: 候选函数 V
        gamma: 衰减率，严格位于 (0, 1)
        mode: weak / strong / goebel_weak / goebel_strong
        sampling: 截面采样参数
        points: 额外的显式检查点（排在网格样本之前）
        check_posdef: 是否先检查 V 的正定性
        max_workers: 并行线程数
    """

    process: ConvexProcess
    candidate: ConeFunction
    gamma: float
    mode: str = "weak"
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    points: Optional[np.ndarray] = None
    check_posdef: bool = True
    max_workers: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma 必须位于 (0, 1): {self.gamma}")
        if self.mode not in MODES:
            raise ValueError(f"未知的验证模式: {self.mode}（可选 {', '.join(MODES)}）")
        if self.candidate.n != self.process.n:
            raise DimensionMismatchError(f"候选函数维数 {self.candidate.n} 与过程维数 {self.process.n} 不一致")
        if self.points is not None:
            self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
            if self.points.shape[1] != self.process.n:
                raise DimensionMismatchError("显式检查点维数与过程维数不一致")

    @property
    def goebel(self) -> bool:
        return self.mode.startswith("goebel")

    @property
    def strong(self) -> bool:
        return self.mode.endswith("strong")


@dataclass
class _SampleOutcome:
    x: np.ndarray
    v_x: float = 0.0
    ratio: float = 0.0
    y: Optional[np.ndarray] = None
    v_y: float = 0.0
    ray: Optional[np.ndarray] = None
    error: Optional[str] = None

    def passed(self, gamma: float) -> bool:
        return self.error is None and self.ratio <= gamma + LYAPUNOV_CONFIG["ratio_tol"]

    def witness(self) -> Dict:
        data = {"x": self.x.tolist(), "V_x": self.v_x, "ratio": self.ratio}
        if self.y is not None:
            data["y"] = self.y.tolist()
            data["V_y"] = self.v_y
        if self.ray is not None:
            data["ray"] = self.ray.tolist()
        return data


def _ratio(v_y: float, v_x: float) -> float:
    if v_y == np.inf:
        return np.inf
    if v_x == np.inf:
        return 0.0
    if v_x <= 0.0:
        return 0.0 if v_y <= LYAPUNOV_CONFIG["zero_tol"] else np.inf
    return v_y / v_x


def slice_polyhedron(process: ConvexProcess, x: np.ndarray, region: Optional[PolyCone]) -> Polyhedron:
    """S(x) = H(x)，或 F(H) ∩ H(x)"""
    P = process.image_of_point(x)
    if region is None:
        return P
    ineq, eq = (np.asarray(r) for r in region._membership_rows())
    return Polyhedron(
        P.dim,
        np.vstack([P.A, ineq]),
        np.concatenate([P.b, np.zeros(len(ineq))]),
        np.vstack([P.E, eq]),
        np.concatenate([P.f, np.zeros(len(eq))]),
        P.config,
    )


def _check_weak(V: ConeFunction, x: np.ndarray, S: Polyhedron) -> _SampleOutcome:
    v_x = V.evaluate(x)
    value, y = minimize_over(V, S)
    return _SampleOutcome(x, v_x, _ratio(value, v_x), y, value)


def _check_strong(V: ConeFunction, x: np.ndarray, S: Polyhedron) -> _SampleOutcome:
    """凸函数在多面体上的上确界：顶点取最大值，或沿回收方向发散"""
    v_x = V.evaluate(x)
    vertices, rays, lines = S.vertices_and_rays()
    zero = LYAPUNOV_CONFIG["zero_tol"] * max(1.0, v_x if np.isfinite(v_x) else 1.0)
    base = vertices[0] if len(vertices) else None
    for d in np.vstack([rays, lines, -lines]):
        v_d = V.evaluate(d)
        if v_d > zero:
            return _SampleOutcome(x, v_x, np.inf, base, np.inf, ray=d)
    values = [V.evaluate(v) for v in vertices]
    k = int(np.argmax(values))
    return _SampleOutcome(x, v_x, _ratio(values[k], v_x), vertices[k], values[k])


def _sample_points(query: LyapunovQuery, region: PolyCone) -> np.ndarray:
    spec = query.sampling.resolved()
    mesh = cross_section_samples(region, spec.count, spec.seed, spec.mesh)
    if query.points is None:
        return mesh
    extra = []
    for p in query.points:
        norm = np.linalg.norm(p)
        if norm == 0:
            continue
        if not region.contains(p, region.config.tau_geom):
            logger.warning(f"显式检查点 {p.tolist()} 不在检查区域内，已跳过")
            continue
        extra.append(p / norm)
    return np.vstack([np.array(extra).reshape(-1, region.dim), mesh])


def verify(query: LyapunovQuery) -> VerificationReport:
    """检查 V 是否为 H 的（弱/强）Lyapunov 函数

    Returns:
        VerificationReport；fails 时 witness 含 x、y（或回收射线 ray）及比值
    """
    H, V, gamma = query.process, query.candidate, query.gamma
    name = f"verify:{query.mode}"
    sub_reports: List[VerificationReport] = []

    if query.goebel:
        region = H.dom
        slice_region = None
        posdef_cone = PolyCone.full(H.n, H.config)
    else:
        feasible = H.feasible_set()
        if not feasible.converged:
            return VerificationReport(name, Verdict.INCONCLUSIVE, gamma=gamma, details={"reason": "feasible_set_not_converged"})
        region = slice_region = posdef_cone = feasible.cone

    spec = query.sampling.resolved()
    if query.check_posdef:
        try:
            pd = posdef_bounds(V, posdef_cone, spec.count, spec.seed, spec.mesh, query.max_workers)
            pd_report = _posdef_report("posdef", pd, Verdict.HYPOTHESIS_NOT_MET)
        except (SolverError, FunctionError) as e:
            pd_report = VerificationReport("posdef", Verdict.INCONCLUSIVE, details={"error": str(e)})
        sub_reports.append(pd_report)
        if pd_report.verdict != Verdict.HOLDS:
            return VerificationReport(name, pd_report.verdict, pd_report.witness, gamma=gamma, sub_reports=sub_reports)

    points = _sample_points(query, region)
    if len(points) == 0:
        return VerificationReport(name, Verdict.HOLDS, gamma=gamma, gamma_margin=0.0, sub_reports=sub_reports, details={"reason": "trivial_region"})

    check = _check_strong if query.strong else _check_weak

    def run(x: np.ndarray) -> _SampleOutcome:
        S = slice_polyhedron(H, x, slice_region)
        if S.is_empty():
            raise ConsistencyError(f"x = {x.tolist()} 在检查区域内但切片为空")
        try:
            return check(V, x, S)
        except (SolverError, FunctionError) as e:
            return _SampleOutcome(x, error=str(e))

    outcomes = run_indexed(run, list(points), query.max_workers, f"{query.mode} 验证样本")

    failing = next((o for o in outcomes if o.error is None and not o.passed(gamma)), None)
    errors = [o for o in outcomes if o.error is not None]
    ratios = [o.ratio for o in outcomes if o.error is None]
    margin = float(max(ratios)) if ratios else None
    details = {
        "region": "dom H" if query.goebel else "F(H)",
        "ratio_tol": LYAPUNOV_CONFIG["ratio_tol"],
        "samples": spec.count,
        "seed": spec.seed,
        "mesh": spec.mesh,
        "errors": len(errors),
    }

    if failing is not None:
        verdict, witness = Verdict.FAILS, failing.witness()
        logger.info(f"{name} 在 x = {np.round(failing.x, 6).tolist()} 处失败，比值 {failing.ratio:.6g}")
    elif errors:
        verdict, witness = Verdict.INCONCLUSIVE, {"x": errors[0].x.tolist()}
        details["first_error"] = errors[0].error
    else:
        verdict, witness = Verdict.HOLDS, None

    return VerificationReport(
        name,
        verdict,
        witness=witness,
        checked_points=len(outcomes),
        gamma=gamma,
        gamma_margin=margin,
        sub_reports=sub_reports,
        details=details,
    )


def dual_candidate(H: ConvexProcess, V: ConeFunction) -> ConeFunction:
    """W = (V|_{F(H)})*"""
    feasible = H.feasible_set()
    if not feasible.converged:
        raise ConeLyapError("可行集未收敛，无法构造对偶候选函数")
    return conjugate(restrict(V, feasible.cone))


def _stage(name: str, flag: Optional[bool], details: Optional[Dict] = None) -> VerificationReport:
    if flag is None:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.HOLDS if flag else Verdict.HYPOTHESIS_NOT_MET
    return VerificationReport(name, verdict, details=details or {})


def _premise(stage: VerificationReport) -> Verdict:
    """前提阶段的结论映射：不成立即假设未满足"""
    if stage.verdict == Verdict.INCONCLUSIVE:
        return Verdict.INCONCLUSIVE
    return Verdict.HYPOTHESIS_NOT_MET


def _conclusion(stage: VerificationReport) -> Verdict:
    """结论阶段：对偶函数不正定也算结论不成立"""
    if stage.verdict == Verdict.HYPOTHESIS_NOT_MET:
        return Verdict.FAILS
    return stage.verdict


def _pipeline(name: str, stages: List[VerificationReport], verdict: Verdict, gamma: float) -> VerificationReport:
    last = stages[-1]
    return VerificationReport(
        name,
        verdict,
        witness=last.witness if verdict == Verdict.FAILS else None,
        checked_points=sum(s.checked_points for s in stages),
        gamma=gamma,
        gamma_margin=last.gamma_margin,
        sub_reports=stages,
    )


def check_theorem2(
    H: ConvexProcess,
    V: ConeFunction,
    gamma: float,
    sampling: Optional[SamplingSpec] = None,
    max_workers: Optional[int] = None,
) -> VerificationReport:
    """V 是 H 的弱 Lyapunov 函数 ⟹ W = (V|_{F(H)})* 是 H⁺ 的强 Lyapunov 函数

    阶段：横截性 F(H)⁻ ∩ F(H⁺) = {0}，弱验证，构造 W，对 H⁺ 强验证。
    """
    sampling = sampling or SamplingSpec()
    stages: List[VerificationReport] = []

    try:
        transversal = H.check_transversality()["pos"]
    except (SolverError, ConeLyapError) as e:
        logger.warning(f"横截性检查失败: {e}")
        transversal = None
    stages.append(_stage("transversality_pos", transversal))
    if stages[-1].verdict != Verdict.HOLDS:
        return _pipeline("theorem2", stages, _premise(stages[-1]), gamma)

    stages.append(verify(LyapunovQuery(H, V, gamma, "weak", sampling, max_workers=max_workers)))
    if stages[-1].verdict != Verdict.HOLDS:
        return _pipeline("theorem2", stages, _premise(stages[-1]), gamma)

    try:
        W = dual_candidate(H, V)
    except (FunctionError, ConeLyapError) as e:
        stages.append(VerificationReport("dual_candidate", Verdict.INCONCLUSIVE, details={"error": str(e)}))
        return _pipeline("theorem2", stages, Verdict.INCONCLUSIVE, gamma)
    stages.append(VerificationReport("dual_candidate", Verdict.HOLDS, details={"W": repr(W), "variant": W.variant}))

    H_pos = H.dual(POSITIVE)
    stages.append(verify(LyapunovQuery(H_pos, W, gamma, "strong", sampling, max_workers=max_workers)))
    verdict = _conclusion(stages[-1])
    if verdict == Verdict.HOLDS:
        logger.success(f"theorem2: W 是 H⁺ 的强 Lyapunov 函数（γ = {gamma}）")
    return _pipeline("theorem2", stages, verdict, gamma)


def _slice_support(process: ConvexProcess, region: PolyCone, x: np.ndarray, c: np.ndarray, sense: str) -> float:
    """inf/sup_{y ∈ F ∩ H(x)} c·y，空集按 inf = +∞、sup = −∞"""
    S = slice_polyhedron(process, x, region)
    result = solve_lp(LinearProgram.over(S, c, sense), process.config)
    if result.status == INFEASIBLE:
        return np.inf if sense == "min" else -np.inf
    if result.status == UNBOUNDED:
        return -np.inf if sense == "min" else np.inf
    return float(result.value)


def _hypothesis_pairs(F_H: PolyCone, F_G: PolyCone, spec: SamplingSpec) -> List[Tuple[np.ndarray, np.ndarray]]:
    k = max(2, int(np.ceil(np.sqrt(spec.count))))
    xs = cross_section_samples(F_H, k, spec.seed, spec.mesh)
    qs = cross_section_samples(F_G, k, spec.seed + 1, spec.mesh)
    return [(x, q) for x in xs for q in qs]


def check_theorem3_hypothesis(
    H: ConvexProcess,
    G: ConvexProcess,
    sampling: Optional[SamplingSpec] = None,
    max_workers: Optional[int] = None,
) -> VerificationReport:
    """inf_{p ∈ F(G)∩G(q)} p·x ≤ sup_{y ∈ F(H)∩H(x)} y·q 在截面样本对上成立"""
    if G.graph_equals(H.dual(POSITIVE)):
        return VerificationReport("hypothesis_inequality", Verdict.HOLDS, details={"auto": "G = H+"})
    F_H, F_G = H.feasible_set().cone, G.feasible_set().cone
    spec = (sampling or SamplingSpec()).resolved()
    pairs = _hypothesis_pairs(F_H, F_G, spec)

    def run(pair):
        x, q = pair
        try:
            lhs = _slice_support(G, F_G, q, x, "min")
            rhs = _slice_support(H, F_H, x, q, "max")
        except SolverError as e:
            return x, q, None, None, str(e)
        return x, q, lhs, rhs, None

    results = run_indexed(run, pairs, max_workers, "假设不等式样本")
    tol = H.config.tau_geom
    for x, q, lhs, rhs, error in results:
        if error is not None:
            return VerificationReport(
                "hypothesis_inequality",
                Verdict.INCONCLUSIVE,
                witness={"x": x.tolist(), "q": q.tolist()},
                checked_points=len(results),
                details={"error": error},
            )
        if lhs == np.inf or rhs == np.inf or lhs == -np.inf:
            continue
        if rhs == -np.inf or lhs > rhs + tol * max(1.0, abs(lhs), abs(rhs)):
            return VerificationReport(
                "hypothesis_inequality",
                Verdict.HYPOTHESIS_NOT_MET,
                witness={"x": x.tolist(), "q": q.tolist(), "inf": lhs, "sup": rhs},
                checked_points=len(results),
            )
    return VerificationReport("hypothesis_inequality", Verdict.HOLDS, checked_points=len(results))


def check_theorem3(
    H: ConvexProcess,
    G: ConvexProcess,
    V: ConeFunction,
    gamma: float,
    sampling: Optional[SamplingSpec] = None,
    max_workers: Optional[int] = None,
) -> VerificationReport:
    """V 是 H 的强 Lyapunov 函数 ⟹ W = (V|_{F(H)})* 是 G 的弱 Lyapunov 函数

    阶段：横截性 F(H)⁻ ∩ F(G) = {0}，假设不等式，对 H 强验证，对 G 弱验证 W。
    """
    if G.n != H.n:
        raise DimensionMismatchError("两个过程维数不一致")
    sampling = sampling or SamplingSpec()
    stages: List[VerificationReport] = []

    F_H, F_G = H.feasible_set(), G.feasible_set()
    if not (F_H.converged and F_G.converged):
        stages.append(_stage("transversality", None, {"reason": "feasible_set_not_converged"}))
    else:
        stages.append(_stage("transversality", F_H.cone.polar(NEGATIVE).intersect(F_G.cone).is_trivial()))
    if stages[-1].verdict != Verdict.HOLDS:
        return _pipeline("theorem3", stages, _premise(stages[-1]), gamma)

    stages.append(check_theorem3_hypothesis(H, G, sampling, max_workers))
    if stages[-1].verdict != Verdict.HOLDS:
        return _pipeline("theorem3", stages, _premise(stages[-1]), gamma)

    stages.append(verify(LyapunovQuery(H, V, gamma, "strong", sampling, max_workers=max_workers)))
    if stages[-1].verdict != Verdict.HOLDS:
        return _pipeline("theorem3", stages, _premise(stages[-1]), gamma)

    try:
        W = dual_candidate(H, V)
    except (FunctionError, ConeLyapError) as e:
        stages.append(VerificationReport("dual_candidate", Verdict.INCONCLUSIVE, details={"error": str(e)}))
        return _pipeline("theorem3", stages, Verdict.INCONCLUSIVE, gamma)

    stages.append(verify(LyapunovQuery(G, W, gamma, "weak", sampling, max_workers=max_workers)))
    verdict = _conclusion(stages[-1])
    if verdict == Verdict.HOLDS:
        logger.success(f"theorem3: W 是 G 的弱 Lyapunov 函数（γ = {gamma}）")
    return _pipeline("theorem3", stages, verdict, gamma)


def check_rint_condition(H: ConvexProcess) -> Optional[bool]:
    """F(H) ⊆ rint dom H；可行集未收敛时为 None"""
    return H.check_rint_condition()


@dataclass
class GammaSearchResult:
    """最小采样衰减率的二分结果：gamma 为已验证成立的上端点"""

    gamma: Optional[float]
    bracket: Tuple[float, float]
    evaluations: int
    report: VerificationReport


def gamma_search(query: LyapunovQuery, tol: Optional[float] = None) -> GammaSearchResult:
    """二分搜索使 verify 成立的最小 γ（精度 tol，默认 1e-3）

    γ 接近 1 仍不成立时 gamma 为 None。
    """
    tol = LYAPUNOV_CONFIG["gamma_tol"] if tol is None else tol
    hi = 1.0 - tol / 2.0
    report = verify(replace(query, gamma=hi))
    evaluations = 1
    if report.verdict != Verdict.HOLDS:
        return GammaSearchResult(None, (hi, 1.0), evaluations, report)

    fast = replace(query, check_posdef=False)
    lo, best = 0.0, report
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        current = verify(replace(fast, gamma=mid))
        evaluations += 1
        if current.verdict == Verdict.HOLDS:
            hi, best = mid, current
        elif current.verdict == Verdict.FAILS:
            lo = mid
        else:
            logger.warning(f"γ = {mid:.6g} 处验证无法判定，二分提前结束")
            break
    logger.info(f"gamma_search: γ ∈ ({lo:.6g}, {hi:.6g}]，共验证 {evaluations} 次")
    return GammaSearchResult(hi, (lo, hi), evaluations, best)
