"""输入读取、随机实例与验证归档"""

from .database import ArchiveRepository, input_digest
from .loader import load_function, load_json, load_process
from .models import Counterexample, SessionLocal, VerificationRun, get_db, init_db, make_engine
