"""验证结论与报告结构"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class Verdict(str, Enum):
    """验证结论"""

    HOLDS = "holds_sampled"
    FAILS = "fails"
    HYPOTHESIS_NOT_MET = "hypothesis_not_met"
    INCONCLUSIVE = "inconclusive"

    @property
    def exit_code(self) -> int:
        return {
            Verdict.HOLDS: 0,
            Verdict.FAILS: 1,
            Verdict.HYPOTHESIS_NOT_MET: 2,
            Verdict.INCONCLUSIVE: 3,
        }[self]


@dataclass
class VerificationReport:
    """结构化验证报告

    Attributes:
        name: 检查名称（如 "verify:strong"、"theorem2"）
        verdict: 结论
        witness: 违反条件的点/射线（fails 时必有，可独立复核）
        checked_points: 检查过的样本数
        gamma: 查询的衰减率
        gamma_margin: 观测到的最坏比值 V(y)/V(x)
        sub_reports: 子阶段报告
        details: 诊断信息（容差、求解器迭代、假设检查结果等）
    """

    name: str
    verdict: Verdict
    witness: Optional[Dict[str, Any]] = None
    checked_points: int = 0
    gamma: Optional[float] = None
    gamma_margin: Optional[float] = None
    sub_reports: List["VerificationReport"] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS

    def stage(self, name: str) -> Optional["VerificationReport"]:
        """按名称取子阶段报告"""
        for report in self.sub_reports:
            if report.name == name:
                return report
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "verdict": self.verdict.value,
            "witness": self.witness,
            "checked_points": self.checked_points,
            "gamma": self.gamma,
            "gamma_margin": self.gamma_margin,
            "details": self.details,
            "sub_reports": [r.to_dict() for r in self.sub_reports],
        }
