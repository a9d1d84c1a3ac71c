# 凸过程 Lyapunov 分析工具配置

import os
from dataclasses import dataclass
from pathlib import Path

# 项目根目录
BASE_DIR = Path(__file__).parent.parent


def _env_float(name: str, default: str) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: str) -> int:
    return int(os.getenv(name, default))


@dataclass(frozen=True)
class NumericsConfig:
    """数值容差与迭代上限（所有模块共用的单一记录）"""

    tau_mem: float = 1e-9  # 成员判定容差
    tau_geom: float = 1e-8  # 几何恒等式容差
    pivot_tol: float = 1e-9  # 单纯形主元容差
    kkt_tol: float = 1e-8  # QP 的 KKT 残差容差
    lp_max_iter: int = 5000  # 单纯形最大迭代次数
    qp_max_iter: int = 2000  # 有效集最大迭代次数
    bland_after: int = 50  # 连续退化主元达到该次数后切换 Bland 规则
    dd_max_rays: int = 20000  # 双描述法射线数上限


NUMERICS_CONFIG = NumericsConfig(
    tau_mem=_env_float("CONELYAP_TAU_MEM", "1e-9"),
    tau_geom=_env_float("CONELYAP_TAU_GEOM", "1e-8"),
    pivot_tol=_env_float("CONELYAP_PIVOT_TOL", "1e-9"),
    kkt_tol=_env_float("CONELYAP_KKT_TOL", "1e-8"),
    lp_max_iter=_env_int("CONELYAP_LP_MAX_ITER", "5000"),
    qp_max_iter=_env_int("CONELYAP_QP_MAX_ITER", "2000"),
    bland_after=_env_int("CONELYAP_BLAND_AFTER", "50"),
    dd_max_rays=_env_int("CONELYAP_DD_MAX_RAYS", "20000"),
)

# 并行配置（逐样本验证的线程数上限）
MAX_WORKERS = _env_int("CONELYAP_THREADS", "4")

# 截面采样配置
SAMPLING_CONFIG = {
    "count": _env_int("CONELYAP_SAMPLES", "1000"),  # 截面样本数
    "seed": _env_int("CONELYAP_SEED", "0"),  # 随机种子
    "mesh": _env_float("CONELYAP_MESH", "1e-2"),  # 角度网格步长（弧度）
    "monte_carlo": _env_int("CONELYAP_MONTE_CARLO", "10000"),  # 高维时的蒙特卡洛点数
    "refine_cap": _env_int("CONELYAP_REFINE_CAP", "8"),  # 网格加密次数上限
}

# Lyapunov 验证配置
LYAPUNOV_CONFIG = {
    "ratio_tol": _env_float("CONELYAP_RATIO_TOL", "1e-9"),  # V(y)/V(x) 与 γ 比较的容差
    "zero_tol": _env_float("CONELYAP_ZERO_TOL", "1e-10"),  # 回收方向上 V(d)=0 的判定
    "gamma_tol": _env_float("CONELYAP_GAMMA_TOL", "1e-3"),  # γ 二分搜索精度
    "posdef_tol": _env_float("CONELYAP_POSDEF_TOL", "1e-7"),  # 正定下界判定
}

# 参考判定（oracle）配置
ORACLE_CONFIG = {
    "horizon_factor": 4,  # 默认视界 d = 4n
    "envelope": _env_float("CONELYAP_ENVELOPE", "10.0"),  # 几何衰减包络常数
    "path_weight": _env_float("CONELYAP_PATH_WEIGHT", "1e-3"),  # 中间状态正则权重
    "grid_refine": 3,  # 共轭网格局部加密的起点数
}

# 报告存档（SQLite）
ARCHIVE_URL = os.getenv("CONELYAP_ARCHIVE_URL", f"sqlite:///{BASE_DIR}/conelyap_archive.db")

# 报告格式
REPORT_SCHEMA = "conelyap/1"
FLOAT_DIGITS = 12  # JSON 中浮点数有效位数
