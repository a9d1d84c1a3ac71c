"""报告模块"""

from .generator import ReportGenerator, canonicalize
