"""凸过程 Lyapunov 分析工具

多面体凸过程 x_{k+1} ∈ H(x_k) 的对偶过程、可行/可达锥、弱/强 Lyapunov 函数验证，
以及通过凸共轭构造对偶 Lyapunov 函数。
"""

__version__ = "0.3.0"

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("cone-lyapunov")
except PackageNotFoundError:
    pass
