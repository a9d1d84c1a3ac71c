"""测试公共夹具"""

from pathlib import Path

import numpy as np
import pytest
from sqlalchemy.orm import sessionmaker

from conelyap.data.loader import load_function, load_process
from conelyap.data.models import init_db, make_engine

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def ex2():
    return load_process(FIXTURES / "ex2.json")


@pytest.fixture
def ex3():
    return load_process(FIXTURES / "ex3.json")


@pytest.fixture
def strict_diag():
    return load_process(FIXTURES / "strict_diag.json")


@pytest.fixture
def diag_linear():
    return load_process(FIXTURES / "diag_linear.json")


@pytest.fixture
def half_identity():
    """V(x) = ½‖x‖²"""
    return load_function(FIXTURES / "V_half_identity.json", 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def archive_session():
    """内存 SQLite 归档会话"""
    engine = make_engine("sqlite:///:memory:")
    init_db(engine)
    session = sessionmaker(bind=engine)()
    try:
        yield session
    finally:
        session.close()
