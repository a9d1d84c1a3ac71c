"""异常定义

所有模块抛出的异常都继承自 ConeLyapError，CLI 据此映射退出码。
"""

from typing import Any, Dict, Optional


class ConeLyapError(Exception):
    """基础异常"""


class DimensionMismatchError(ConeLyapError, ValueError):
    """维度不一致（行向量长度、锥的环境维数、过程维数）"""


class RepresentationError(ConeLyapError):
    """双描述法转换失败（射线数超过上限等）"""


class SolverError(ConeLyapError):
    """LP/QP 求解失败

    Args:
        message: 错误描述
        iterations: 已执行的迭代次数
        diagnostics: 求解器诊断信息
    """

    def __init__(
        self,
        message: str,
        iterations: int = 0,
        diagnostics: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.iterations = iterations
        self.diagnostics = diagnostics or {}


class FunctionError(ConeLyapError):
    """函数求值或共轭在该变体上不可用"""


class ConsistencyError(ConeLyapError):
    """内部一致性被破坏（定义域链不单调、可行集迭代超出收敛界等）"""


class ParseError(ConeLyapError):
    """输入文件解析失败

    Args:
        message: 错误描述
        path: 文件路径
        field: 出错字段路径（如 "graph.inequalities[2]"）
    """

    def __init__(self, message: str, path: str = "", field: str = ""):
        location = ":".join(p for p in (path, field) if p)
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.field = field
