"""过程/函数 JSON 文件读取"""

import json
from pathlib import Path
from typing import Dict, Optional, Union

from loguru import logger

from conelyap.config.settings import NumericsConfig
from conelyap.errors import ParseError
from conelyap.analysis.functions import ConeFunction, function_from_dict
from conelyap.analysis.process import ConvexProcess

PathLike = Union[str, Path]


def load_json(path: PathLike) -> Dict:
    """读取 JSON 对象；语法错误带行列号，文件不存在时抛 OSError"""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"第 {e.lineno} 行第 {e.colno} 列: {e.msg}", str(path)) from e
    if not isinstance(data, dict):
        raise ParseError("顶层必须是 JSON 对象", str(path))
    return data


def load_process(path: PathLike, config: Optional[NumericsConfig] = None) -> ConvexProcess:
    """读取过程文件（图形式或 A 形式）"""
    data = load_json(path)
    process = ConvexProcess.from_dict(data, str(path), config)
    if not process.name:
        process.name = Path(path).stem
    logger.debug(f"读取过程 {process.name}: n = {process.n}")
    return process


def load_function(path: PathLike, n: Optional[int] = None, config: Optional[NumericsConfig] = None) -> ConeFunction:
    """读取函数文件；给定 n 时校验维数"""
    data = load_json(path)
    f = function_from_dict(data, str(path), "function", n, config)
    if n is not None and f.n != n:
        raise ParseError(f"函数维数 {f.n} 与过程维数 {n} 不一致", str(path), "function")
    return f
