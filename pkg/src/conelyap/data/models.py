"""SQLAlchemy 验证归档模型"""

from datetime import datetime

from loguru import logger
from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

from conelyap.config.settings import ARCHIVE_URL

Base = declarative_base()


def make_engine(url: str = ARCHIVE_URL):
    """按 URL 创建引擎（测试可传入 sqlite:///:memory:）"""
    return create_engine(url, echo=False)


engine = make_engine()
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


class VerificationRun(Base):
    """一次验证/分析命令的运行记录"""

    __tablename__ = "verification_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(20), nullable=False, index=True, comment="命令名（analyze/lyapunov/duality/...）")
    name = Column(String(100), comment="报告名称")
    verdict = Column(String(30), index=True, comment="结论")
    gamma = Column(Float, comment="衰减率 γ")
    gamma_margin = Column(Float, comment="观测到的最坏比值")
    checked_points = Column(Integer, default=0, comment="检查样本数")
    seed = Column(Integer, comment="采样种子")
    input_digest = Column(String(64), index=True, comment="输入文件内容的 SHA-256")
    inputs_json = Column(Text, comment="输入（过程、函数）JSON")
    report_json = Column(Text, comment="完整报告 JSON")
    created_at = Column(DateTime, default=datetime.now, comment="创建时间")

    counterexamples = relationship("Counterexample", back_populates="run", cascade="all, delete-orphan")

    __table_args__ = ({"sqlite_autoincrement": True},)


class Counterexample(Base):
    """失败见证（可直接作为回归用例）"""

    __tablename__ = "counterexamples"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("verification_runs.id"), nullable=False, index=True, comment="所属运行")
    stage = Column(String(50), comment="出现失败的阶段")
    witness_json = Column(Text, nullable=False, comment="见证点/射线 JSON")
    created_at = Column(DateTime, default=datetime.now, comment="创建时间")

    run = relationship("VerificationRun", back_populates="counterexamples")

    __table_args__ = ({"sqlite_autoincrement": True},)


def init_db(bind=None):
    """初始化归档表"""
    bind = bind or engine
    Base.metadata.create_all(bind=bind)
    logger.debug(f"归档数据库初始化完成: {bind.url}")


def get_db():
    """获取数据库会话"""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
