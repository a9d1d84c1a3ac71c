"""报告生成模块：对齐文本（人读）与规范 JSON（机读）"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from conelyap.config.settings import FLOAT_DIGITS, REPORT_SCHEMA
from conelyap.geometry.cone import PolyCone
from conelyap.analysis.verdict import VerificationReport

VERDICT_LABELS = {
    "holds_sampled": "成立（采样）",
    "fails": "不成立",
    "hypothesis_not_met": "假设不满足",
    "inconclusive": "无法判定",
}


def _round(x: float) -> Any:
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if x == 0:
        return 0.0
    value = float(f"{x:.{FLOAT_DIGITS}g}")
    return 0.0 if value == 0 else value


def canonicalize(obj: Any) -> Any:
    """转为可稳定序列化的结构：浮点保留 12 位有效数字，±∞ 写成字符串"""
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonicalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, PolyCone):
        return canonicalize(obj.to_dict())
    if isinstance(obj, VerificationReport):
        return canonicalize(obj.to_dict())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _matrix(rows) -> str:
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return "（无）"
    return "; ".join("(" + ", ".join(f"{v:.6g}" for v in row) + ")" for row in rows)


class ReportGenerator:
    """报告生成器"""

    def __init__(self, schema: str = REPORT_SCHEMA):
        self.schema = schema

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------
    def build_payload(self, command: str, body: Dict, inputs: Optional[Dict] = None) -> Dict:
        payload = {"schema": self.schema, "command": command, "result": body}
        if inputs:
            payload["inputs"] = inputs
        return payload

    def generate_json_report(self, command: str, body: Dict, inputs: Optional[Dict] = None) -> str:
        """规范 JSON：键排序，相同输入与种子得到逐字节相同的输出"""
        payload = canonicalize(self.build_payload(command, body, inputs))
        return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"

    # ------------------------------------------------------------------
    # 文本
    # ------------------------------------------------------------------
    def _stage_frame(self, report: VerificationReport) -> pd.DataFrame:
        rows: List[Dict] = []

        def walk(r: VerificationReport, depth: int):
            rows.append(
                {
                    "阶段": "  " * depth + r.name,
                    "结论": VERDICT_LABELS.get(r.verdict.value, r.verdict.value),
                    "样本数": r.checked_points,
                    "最坏比值": "" if r.gamma_margin is None else f"{r.gamma_margin:.6g}",
                }
            )
            for sub in r.sub_reports:
                walk(sub, depth + 1)

        walk(report, 0)
        return pd.DataFrame(rows)

    def generate_text_report(self, report: VerificationReport) -> str:
        """验证报告文本：阶段表、γ 与见证"""
        lines = [
            f"📋 {report.name}",
            f"结论: {VERDICT_LABELS.get(report.verdict.value, report.verdict.value)}",
        ]
        if report.gamma is not None:
            lines.append(f"γ = {report.gamma:.6g}")
        if report.gamma_margin is not None:
            lines.append(f"最坏比值 V(y)/V(x) = {report.gamma_margin:.12g}")
        lines.append("")
        lines.append(self._stage_frame(report).to_string(index=False))
        if report.witness:
            lines.append("")
            lines.append("见证:")
            for key in sorted(report.witness):
                value = report.witness[key]
                if isinstance(value, list):
                    value = "(" + ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value) + ")"
                lines.append(f"  {key}: {value}")
        return "\n".join(lines)

    def generate_analysis_text(self, panel: Dict) -> str:
        """结构分析文本：各锥的不可约生成元与条件面板"""
        lines = [f"📐 凸过程分析: {panel.get('name') or '(未命名)'}  n = {panel['n']}", ""]
        cone_rows = []
        for key, cone in panel["cones"].items():
            if cone is None:
                cone_rows.append({"锥": key, "极射线": "未收敛", "线性空间": ""})
                continue
            cone_rows.append({"锥": key, "极射线": _matrix(cone["generators"]), "线性空间": _matrix(cone["lineality"])})
        lines.append(pd.DataFrame(cone_rows).to_string(index=False))
        lines.append("")

        def flag(value) -> str:
            if value is None:
                return "无法判定"
            return "是" if value else "否"

        cond_rows = [{"条件": k, "结果": flag(v)} for k, v in panel["conditions"].items()]
        lines.append(pd.DataFrame(cond_rows).to_string(index=False))
        feasible = panel.get("feasible_set", {})
        if feasible:
            lines.append("")
            lines.append(
                f"可行集迭代: 收敛 {flag(feasible.get('converged'))}，"
                f"不动点下标 {feasible.get('fixed_point_index')}，严格收缩 {feasible.get('iterations')} 次"
            )
        return "\n".join(lines)

    def generate_trajectory_text(self, frame: pd.DataFrame, policy: str, stopped: Optional[str] = None) -> str:
        lines = [f"🧭 轨迹模拟（策略 {policy}）", "", frame.to_string(index=False, float_format=lambda v: f"{v:.6g}")]
        if stopped:
            lines.append(f"提前终止: {stopped}")
        return "\n".join(lines)

    def generate_table_text(self, title: str, rows: List[Dict]) -> str:
        """通用表格（oracle 结果等）"""
        if not rows:
            return f"{title}\n（无数据）"
        return f"{title}\n\n" + pd.DataFrame(rows).to_string(index=False)

    def save_report(self, content: str, filename: str):
        """保存报告到文件

        Args:
            content: 报告内容
            filename: 文件名
        """
        path = Path(filename)
        try:
            if path.parent and not path.parent.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
            logger.info(f"报告已保存: {filename}")
        except OSError as e:
            logger.error(f"保存报告失败: {e}")
            raise
