"""带种子的随机实例生成器（性质测试与随机化回归用）"""

from typing import Optional, Tuple

import numpy as np

from conelyap.config.settings import NUMERICS_CONFIG
from conelyap.geometry.cone import NEGATIVE, PolyCone
from conelyap.analysis.functions import QuadOnCone
from conelyap.analysis.process import ConvexProcess


def random_cone(
    rng: np.random.Generator,
    n: int,
    n_generators: Optional[int] = None,
    with_lineality: bool = False,
    integer: bool = True,
) -> PolyCone:
    """随机生成元锥；integer=True 时生成元取小整数，避免几乎退化的输入"""
    k = int(rng.integers(1, n + 3)) if n_generators is None else n_generators
    if integer:
        gens = rng.integers(-3, 4, size=(k, n)).astype(float)
        gens = gens[np.any(gens != 0, axis=1)]
    else:
        gens = rng.standard_normal((k, n))
    lines = None
    if with_lineality and n > 1:
        lines = rng.integers(-2, 3, size=(1, n)).astype(float)
        if not np.any(lines):
            lines = None
    if len(gens) == 0:
        gens = np.eye(n)[:1]
    return PolyCone(n, generators=gens, lineality=lines, config=NUMERICS_CONFIG)


def random_cone_pair(rng: np.random.Generator, n: int, integer: bool = True) -> Tuple[PolyCone, PolyCone]:
    return random_cone(rng, n, integer=integer), random_cone(rng, n, integer=integer)


def random_transfer_pair(rng: np.random.Generator, n: int, transversal: bool = True) -> Tuple[PolyCone, PolyCone]:
    """(C, D)：transversal 时 C⁻ ∩ D = {0}（取 D ⊆ C），否则取 D = C⁻（C ≠ ℝⁿ）"""
    while True:
        C = random_cone(rng, n)
        if C.is_full() or C.is_trivial():
            continue
        if transversal:
            rays = C.rays
            if len(rays) == 0:
                return C, C
            keep = rays[rng.random(len(rays)) < 0.7]
            if len(keep) == 0:
                keep = rays[:1]
            return C, PolyCone(n, generators=keep, lineality=C.lines, config=C.config)
        return C, C.polar(NEGATIVE)


def random_positive_definite(rng: np.random.Generator, n: int, floor: float = 0.1) -> np.ndarray:
    B = rng.standard_normal((n, n))
    return B.T @ B / n + floor * np.eye(n)


def random_quadratic(rng: np.random.Generator, n: int, cone: Optional[PolyCone] = None) -> QuadOnCone:
    cone = cone or PolyCone.full(n, NUMERICS_CONFIG)
    return QuadOnCone(random_positive_definite(rng, n), cone)


def random_contraction(rng: np.random.Generator, n: int, norm: float = 0.5) -> np.ndarray:
    """谱范数为 norm 的随机矩阵"""
    A = rng.standard_normal((n, n))
    return norm * A / np.linalg.norm(A, 2)


def random_linear_process(rng: np.random.Generator, n: int, norm: float = 0.5) -> ConvexProcess:
    """y = Ax"""
    return ConvexProcess.from_matrix(random_contraction(rng, n, norm), name="random_linear")


def random_strict_process(rng: np.random.Generator, n: int, norm: float = 0.5) -> ConvexProcess:
    """H(x) = Ax + K（dom H = ℝⁿ），K 为随机尖锥

    ‖A‖ = norm，故 ½‖·‖² 对任意 γ > norm² 满足弱 Lyapunov 不等式；H(0) = K 使必要条件不成立。
    """
    while True:
        K = random_cone(rng, n, n_generators=int(rng.integers(1, n + 1)))
        if not K.is_subspace():
            break
    return ConvexProcess.from_matrix(random_contraction(rng, n, norm), input_cone=K, name="random_strict")


def random_process(rng: np.random.Generator, n: int) -> ConvexProcess:
    """随机图锥：(g, Ag + k) 形式的生成元，定义域一般不满"""
    A = random_contraction(rng, n, 0.8)
    m = int(rng.integers(1, n + 2))
    xs = rng.integers(-2, 3, size=(m, n)).astype(float)
    ks = rng.integers(-1, 2, size=(m, n)).astype(float)
    gens = np.hstack([xs, xs @ A.T + ks])
    gens = gens[np.any(gens != 0, axis=1)]
    if len(gens) == 0:
        gens = np.hstack([np.eye(n)[:1], (np.eye(n)[:1]) @ A.T])
    return ConvexProcess(PolyCone(2 * n, generators=gens, config=NUMERICS_CONFIG), "random")


def random_process_with_domain_condition(rng: np.random.Generator, n: int) -> ConvexProcess:
    """在随机过程的图中加入线性空间 (0, b) 与 (b, Ab)

    L₋ 的可达集包含 Krylov 空间 span{b, Ab, ...}，一般为 ℝⁿ，于是 dom H + R₋ = ℝⁿ。
    """
    A = random_contraction(rng, n, 0.8)
    b = rng.standard_normal(n)
    m = int(rng.integers(1, n + 2))
    xs = rng.standard_normal((m, n))
    rays = np.hstack([xs, xs @ A.T])
    lines = np.vstack([np.concatenate([np.zeros(n), b]), np.concatenate([b, A @ b])])
    return ConvexProcess(PolyCone(2 * n, generators=rays, lineality=lines, config=NUMERICS_CONFIG), "random_domain_condition")
