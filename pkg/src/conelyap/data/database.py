"""验证归档的数据库操作"""

import hashlib
import json
from typing import Dict, List, Optional

from sqlalchemy.orm import Session

from conelyap.analysis.verdict import VerificationReport, Verdict
from conelyap.data.models import Counterexample, VerificationRun


def input_digest(inputs: Dict) -> str:
    """输入内容的 SHA-256（键排序后序列化）"""
    payload = json.dumps(inputs, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _failing_stages(report: VerificationReport, prefix: str = "") -> List[tuple]:
    """收集所有带见证的失败阶段（深度优先）"""
    name = f"{prefix}/{report.name}" if prefix else report.name
    found = []
    if report.verdict == Verdict.FAILS and report.witness is not None:
        found.append((name, report.witness))
    for sub in report.sub_reports:
        found.extend(_failing_stages(sub, name))
    return found


class ArchiveRepository:
    """验证运行与反例的仓库"""

    def __init__(self, db: Session):
        self.db = db

    def save_run(
        self,
        command: str,
        report: VerificationReport,
        inputs: Optional[Dict] = None,
        seed: Optional[int] = None,
        report_json: Optional[str] = None,
    ) -> VerificationRun:
        """保存一次运行；报告树中每个失败见证另存一条 Counterexample"""
        inputs = inputs or {}
        run = VerificationRun(
            command=command,
            name=report.name,
            verdict=report.verdict.value,
            gamma=report.gamma,
            gamma_margin=report.gamma_margin,
            checked_points=report.checked_points,
            seed=seed,
            input_digest=input_digest(inputs),
            inputs_json=json.dumps(inputs, sort_keys=True, ensure_ascii=False, default=str),
            report_json=report_json or json.dumps(report.to_dict(), sort_keys=True, default=str),
        )
        for stage, witness in _failing_stages(report):
            run.counterexamples.append(Counterexample(stage=stage, witness_json=json.dumps(witness, sort_keys=True, default=str)))
        self.db.add(run)
        self.db.commit()
        return run

    def get_run(self, run_id: int) -> Optional[VerificationRun]:
        return self.db.query(VerificationRun).filter(VerificationRun.id == run_id).first()

    def get_runs(self, command: Optional[str] = None, verdict: Optional[str] = None) -> List[VerificationRun]:
        """按命令与结论筛选运行记录（新记录在前）"""
        query = self.db.query(VerificationRun)
        if command:
            query = query.filter(VerificationRun.command == command)
        if verdict:
            query = query.filter(VerificationRun.verdict == verdict)
        return query.order_by(VerificationRun.id.desc()).all()

    def get_counterexamples(self, stage: Optional[str] = None) -> List[Counterexample]:
        query = self.db.query(Counterexample)
        if stage:
            query = query.filter(Counterexample.stage == stage)
        return query.order_by(Counterexample.id).all()

    def export_counterexamples(self) -> List[Dict]:
        """导出全部反例为回归用例（输入 + 见证）"""
        cases = []
        for ce in self.get_counterexamples():
            cases.append(
                {
                    "run_id": ce.run_id,
                    "command": ce.run.command,
                    "stage": ce.stage,
                    "inputs": json.loads(ce.run.inputs_json or "{}"),
                    "witness": json.loads(ce.witness_json),
                }
            )
        return cases
