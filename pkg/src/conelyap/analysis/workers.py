"""逐样本并行执行

样本间相互独立；结果按样本下标归并，保证与线程调度无关。
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

from loguru import logger

from conelyap.config.settings import MAX_WORKERS

T = TypeVar("T")
R = TypeVar("R")


def run_indexed(
    fn: Callable[[T], R],
    items: Sequence[T],
    max_workers: Optional[int] = None,
    label: str = "样本",
) -> List[R]:
    """并行执行 fn(item)，按输入顺序返回结果

    Args:
        fn: 纯函数（不得修改共享状态）
        items: 输入序列
        max_workers: 线程数上限（默认 CONELYAP_THREADS）
        label: 进度日志中的名称
    """
    workers = max(1, max_workers or MAX_WORKERS)
    total = len(items)
    if workers == 1 or total <= 1:
        return [fn(item) for item in items]

    results: List[Optional[R]] = [None] * total
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): idx for idx, item in enumerate(items)}
        completed = 0
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            completed += 1
            if completed % 500 == 0:
                logger.debug(f"{label}进度: {completed}/{total}")
    return results
