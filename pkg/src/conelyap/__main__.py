#!/usr/bin/env python3
"""凸过程 Lyapunov 分析工具 - 主入口

使用方法:
1. 结构分析: conelyap analyze fixtures/ex3.json
2. Lyapunov 验证: conelyap lyapunov fixtures/ex3.json fixtures/V_half_identity.json --mode strong --gamma 0.25
3. 对偶定理: conelyap duality fixtures/strict_diag.json fixtures/V_half_identity.json --gamma 0.25 --theorem 2
4. 轨迹模拟: conelyap simulate fixtures/ex3.json --x0 1,0 --steps 12 --policy min_V
5. 独立参照: conelyap oracle stabilizable fixtures/ex2.json --x0 2,1 --depth 30

退出码: 0 成立/完成，1 不成立，2 假设不满足，3 无法判定，64 用法/输入错误，66 文件无法读写，70 内部一致性错误
"""

import argparse
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional

from dotenv import load_dotenv

# 加载环境变量
load_dotenv()

import numpy as np
from loguru import logger

from conelyap import __version__
from conelyap.config.settings import NUMERICS_CONFIG, ORACLE_CONFIG, SAMPLING_CONFIG
from conelyap.errors import ConeLyapError, ConsistencyError, DimensionMismatchError, ParseError
from conelyap.geometry.cone import NEGATIVE, POSITIVE, PolyCone
from conelyap.analysis import oracle
from conelyap.analysis.lyapunov import MODES, LyapunovQuery, SamplingSpec, check_theorem2, check_theorem3, gamma_search, verify
from conelyap.analysis.process import ConvexProcess
from conelyap.analysis.simulate import POLICIES, simulate
from conelyap.analysis.verdict import VerificationReport, Verdict
from conelyap.data.loader import load_function, load_json, load_process
from conelyap.report.generator import ReportGenerator

EXIT_USAGE = 64
EXIT_NOINPUT = 66
EXIT_SOFTWARE = 70


def setup_logging(verbose: bool = False):
    """文件中记录 DEBUG 及以上级别，控制台只输出 INFO 及以上级别"""
    logger.remove()
    logger.add(
        "logs/conelyap.log",
        rotation="500 MB",
        retention="10 days",
        level="DEBUG",
        encoding="utf-8",
    )
    logger.add(
        sys.stderr,
        level="DEBUG" if verbose else "INFO",
        format="<level>{message}</level>",
    )


class UsageError(Exception):
    """命令行参数错误"""


class _Parser(argparse.ArgumentParser):
    """用法错误以退出码 64 结束，避免与结论退出码 2 冲突"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as e:
        raise UsageError(f"无法解析向量: {text!r}") from e


def parse_points(text: Optional[str]) -> Optional[np.ndarray]:
    """"0,1;1,0" 形式的点列"""
    if not text:
        return None
    return np.array([parse_vector(p) for p in text.split(";") if p.strip()])


# ----------------------------------------------------------------------
# 运行上下文
# ----------------------------------------------------------------------
class Context:
    """一次命令调用的配置：数值容差、采样参数、输出"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        overrides = {}
        if args.tol_mem is not None:
            overrides["tau_mem"] = args.tol_mem
        if args.tol_geom is not None:
            overrides["tau_geom"] = args.tol_geom
        self.config = replace(NUMERICS_CONFIG, **overrides)
        self.sampling = SamplingSpec(args.samples, args.seed, args.mesh)
        self.generator = ReportGenerator()
        self.inputs: Dict = {}

    def process(self, path: str, key: str = "process") -> ConvexProcess:
        H = load_process(path, self.config)
        H.max_iter = self.args.max_iter
        self.inputs[key] = load_json(path)
        return H

    def function(self, path: str, n: int, key: str = "function"):
        f = load_function(path, n, self.config)
        self.inputs[key] = load_json(path)
        return f

    def emit(self, command: str, body: Dict, text: str, report: Optional[VerificationReport] = None):
        if self.args.format == "json":
            content = self.generator.generate_json_report(command, body, self.inputs)
        else:
            content = text + "\n"
        if self.args.output:
            self.generator.save_report(content, self.args.output)
        else:
            sys.stdout.write(content)
        if self.args.archive and report is not None:
            archive_report(command, report, self.inputs, self.args.seed, content if self.args.format == "json" else None)


def archive_report(command: str, report: VerificationReport, inputs: Dict, seed: Optional[int], report_json: Optional[str]):
    """保存到验证归档数据库"""
    from conelyap.data.database import ArchiveRepository
    from conelyap.data.models import SessionLocal, init_db

    init_db()
    db = SessionLocal()
    try:
        run = ArchiveRepository(db).save_run(command, report, inputs, seed, report_json)
        logger.info(f"已归档运行 #{run.id}（反例 {len(run.counterexamples)} 条）")
    except Exception as e:
        logger.error(f"归档失败: {e}")
    finally:
        db.close()


# ----------------------------------------------------------------------
# 命令
# ----------------------------------------------------------------------
def _cone_or_none(fn):
    try:
        return fn()
    except ConeLyapError as e:
        logger.warning(f"锥计算失败: {e}")
        return None


def analyze_panel(H: ConvexProcess) -> Dict:
    """结构锥与条件面板"""
    feasible = H.feasible_set()
    duals = {"F(H+)": H.dual(POSITIVE).feasible_set(), "F(H-)": H.dual(NEGATIVE).feasible_set()}
    L_minus, L_plus = H.minimal_linear(), H.maximal_linear()
    cones = {
        "dom H": H.dom,
        "im H": H.im,
        "H(0)": H.h_zero(),
        "graph L-": L_minus.graph,
        "graph L+": L_plus.graph,
        "R-": _cone_or_none(L_minus.reachable),
        "R+": _cone_or_none(L_plus.reachable),
        "F(H)": feasible.cone if feasible.converged else None,
    }
    for key, result in duals.items():
        cones[key] = result.cone if result.converged else None

    transversality = H.check_transversality()
    conditions = {
        "domain_condition": H.check_domain_condition(),
        "transversality.pos": transversality["pos"],
        "transversality.neg": transversality["neg"],
        "necessary": H.check_necessary_condition(),
        "rint": H.check_rint_condition(),
        "h_zero_identity": H.check_h_zero_identity(),
        "strict": H.is_strict(),
    }
    return {
        "name": H.name,
        "n": H.n,
        "cones": {k: (c.dd_convert().to_dict() if c is not None else None) for k, c in cones.items()},
        "conditions": conditions,
        "feasible_set": {
            "converged": feasible.converged,
            "fixed_point_index": feasible.fixed_point_index,
            "iterations": feasible.iterations,
        },
    }


def cmd_analyze(ctx: Context) -> int:
    H = ctx.process(ctx.args.process)
    panel = analyze_panel(H)
    ctx.emit("analyze", panel, ctx.generator.generate_analysis_text(panel))
    logger.success("结构分析完成")
    return 0


def cmd_lyapunov(ctx: Context) -> int:
    args = ctx.args
    H = ctx.process(args.process)
    V = ctx.function(args.function, H.n)
    query = LyapunovQuery(H, V, args.gamma, args.mode, ctx.sampling, parse_points(args.points), max_workers=args.threads)
    if args.gamma_search:
        search = gamma_search(query)
        report = search.report
        body = report.to_dict()
        body["gamma_search"] = {"gamma": search.gamma, "bracket": list(search.bracket), "evaluations": search.evaluations}
        text = ctx.generator.generate_text_report(report)
        text += f"\n\nγ 搜索: {search.gamma}（区间 {search.bracket}，验证 {search.evaluations} 次）"
    else:
        report = verify(query)
        body, text = report.to_dict(), ctx.generator.generate_text_report(report)
    ctx.emit("lyapunov", body, text, report)
    return report.verdict.exit_code


def _resolve_g(ctx: Context, H: ConvexProcess, choice: str) -> ConvexProcess:
    if choice == "dual_pos":
        return H.dual(POSITIVE)
    if choice == "dual_neg":
        return H.dual(NEGATIVE)
    G = ctx.process(choice, "process_g")
    if G.n != H.n:
        raise DimensionMismatchError("G 与 H 维数不一致")
    return G


def cmd_duality(ctx: Context) -> int:
    args = ctx.args
    H = ctx.process(args.process)
    V = ctx.function(args.function, H.n)
    if args.theorem == 2:
        report = check_theorem2(H, V, args.gamma, ctx.sampling, args.threads)
    else:
        G = _resolve_g(ctx, H, args.g or "dual_pos")
        report = check_theorem3(H, G, V, args.gamma, ctx.sampling, args.threads)
    ctx.emit("duality", report.to_dict(), ctx.generator.generate_text_report(report), report)
    return report.verdict.exit_code


def cmd_simulate(ctx: Context) -> int:
    args = ctx.args
    H = ctx.process(args.process)
    x0 = parse_vector(args.x0)
    if x0.size != H.n:
        raise UsageError(f"--x0 维数 {x0.size} 与过程维数 {H.n} 不一致")
    V = ctx.function(args.function, H.n) if args.function else None
    seed = SAMPLING_CONFIG["seed"] if args.seed is None else args.seed
    trajectory = simulate(H, x0, args.steps, args.policy, V, seed)
    frame = trajectory.to_frame()
    body = {
        "policy": trajectory.policy,
        "stopped": trajectory.stopped,
        "states": trajectory.states,
        "norms": trajectory.norms,
        "values": trajectory.values,
    }
    ctx.emit("simulate", body, ctx.generator.generate_trajectory_text(frame, trajectory.policy, trajectory.stopped))
    return 0


def cmd_oracle(ctx: Context) -> int:
    args = ctx.args
    gen = ctx.generator
    kind = args.kind
    if kind in ("depth", "stabilizable", "feasible"):
        H = ctx.process(args.target)
        depth = args.depth or ORACLE_CONFIG["horizon_factor"] * H.n
        if kind == "feasible":
            count = args.samples or 200
            report = oracle.cross_check_feasible_set(H, count, args.seed or 0, depth, args.threads)
            ctx.emit("oracle", report.to_dict(), gen.generate_text_report(report), report)
            return report.verdict.exit_code
        if not args.x0:
            raise UsageError(f"oracle {kind} 需要 --x0")
        x0 = parse_vector(args.x0)
        if kind == "depth":
            depths = oracle.feasible_depths(H, x0, depth)
            rows = [{"d": d + 1, "feasible": ok} for d, ok in enumerate(depths)]
            ctx.emit("oracle", {"kind": kind, "x0": x0, "depths": depths}, gen.generate_table_text("轨迹可行性（按视界）", rows))
            return 0
        result = oracle.stabilizable_sample(H, x0, depth, args.epsilon)
        body = {
            "kind": kind,
            "verdict": result.verdict,
            "final_norm": result.final_norm,
            "horizon": result.horizon,
            "epsilon": result.epsilon,
            "trajectory": result.trajectory,
        }
        rows = []
        if result.trajectory is not None:
            rows = [{"k": k, "norm": float(np.linalg.norm(x))} for k, x in enumerate(result.trajectory)]
        text = gen.generate_table_text(f"可镇定性采样: {result.verdict}", rows)
        ctx.emit("oracle", body, text)
        return 0 if result.certified else Verdict.INCONCLUSIVE.exit_code

    if kind == "polar":
        data = load_json(args.target)
        ctx.inputs["cone"] = data
        C = PolyCone.from_dict(data.get("cone", data), args.target, "cone", ctx.config)
        check = oracle.polar_sampled(C, args.samples, args.seed or 0)
        body = {
            "kind": kind,
            "checked": check.checked,
            "computed_not_defined": check.computed_not_defined,
            "defined_not_computed": check.defined_not_computed,
        }
        ctx.emit("oracle", body, gen.generate_table_text("极锥抽样核对", [body]))
        return 0 if check.holds else Verdict.FAILS.exit_code

    if kind == "conjugate":
        if not args.y:
            raise UsageError("oracle conjugate 需要 --y")
        data = load_json(args.target)
        ctx.inputs["function"] = data
        from conelyap.analysis.functions import function_from_dict

        f = function_from_dict(data, args.target, "function", None, ctx.config)
        y = parse_vector(args.y)
        grid = oracle.conjugate_grid(f, y, args.mesh or SAMPLING_CONFIG["mesh"], args.seed or 0)
        body = {"kind": kind, "y": y, "value": grid.value, "error_bound": grid.error_bound, "radius": grid.radius}
        ctx.emit("oracle", body, gen.generate_table_text("网格共轭下界", [body]))
        return 0
    raise UsageError(f"未知的 oracle 子命令: {kind}")


COMMANDS = {
    "analyze": cmd_analyze,
    "lyapunov": cmd_lyapunov,
    "duality": cmd_duality,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=int, help=f"截面样本数（默认 {SAMPLING_CONFIG['count']}）")
    common.add_argument("--seed", type=int, help=f"采样种子（默认 {SAMPLING_CONFIG['seed']}）")
    common.add_argument("--mesh", type=float, help=f"二维截面角度步长（默认 {SAMPLING_CONFIG['mesh']}）")
    common.add_argument("--format", choices=["text", "json"], default="text", help="输出格式（默认 text）")
    common.add_argument("--max-iter", type=int, help="可行集迭代上限（默认 4n）")
    common.add_argument("--tol-mem", type=float, help="成员判定容差 τ_mem")
    common.add_argument("--tol-geom", type=float, help="几何恒等式容差 τ_geom")
    common.add_argument("--threads", type=int, help="并行线程数（默认 CONELYAP_THREADS）")
    common.add_argument("--archive", action="store_true", help="将运行与反例保存到归档数据库")
    common.add_argument("--output", help="报告输出文件（默认标准输出）")
    common.add_argument("--verbose", action="store_true", help="控制台输出 DEBUG 日志")

    parser = _Parser(prog="conelyap", description="凸过程的 Lyapunov 函数与对偶分析")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common], help="结构锥与条件面板")
    p.add_argument("process", help="过程 JSON 文件")

    p = sub.add_parser("lyapunov", parents=[common], help="Lyapunov 函数验证")
    p.add_argument("process", help="过程 JSON 文件")
    p.add_argument("function", help="函数 JSON 文件")
    p.add_argument("--mode", choices=MODES, default="weak", help="验证模式（默认 weak）")
    p.add_argument("--gamma", type=float, default=0.5, help="衰减率 γ ∈ (0,1)（默认 0.5）")
    p.add_argument("--points", help="额外检查点，如 '0,1;1,0'")
    p.add_argument("--gamma-search", action="store_true", help="二分搜索最小的 γ")

    p = sub.add_parser("duality", parents=[common], help="对偶定理流水线")
    p.add_argument("process", help="过程 JSON 文件")
    p.add_argument("function", help="函数 JSON 文件")
    p.add_argument("--gamma", type=float, default=0.5, help="衰减率 γ ∈ (0,1)（默认 0.5）")
    p.add_argument("--theorem", type=int, choices=[2, 3], default=2, help="定理编号（默认 2）")
    p.add_argument("--g", help="定理 3 的过程 G：JSON 文件，或 dual_pos / dual_neg（默认 dual_pos）")

    p = sub.add_parser("simulate", parents=[common], help="轨迹模拟")
    p.add_argument("process", help="过程 JSON 文件")
    p.add_argument("--x0", required=True, help="初始状态，如 1,0")
    p.add_argument("--steps", type=int, default=20, help="步数（默认 20）")
    p.add_argument("--policy", choices=POLICIES, default="min_V", help="后继选择策略（默认 min_V）")
    p.add_argument("--function", help="min_V 使用的函数 JSON（默认 ½‖·‖²）")

    p = sub.add_parser("oracle", parents=[common], help="独立参照计算")
    p.add_argument("kind", choices=["depth", "stabilizable", "feasible", "polar", "conjugate"], help="参照类型")
    p.add_argument("target", help="过程 / 锥 / 函数 JSON 文件")
    p.add_argument("--x0", help="初始状态")
    p.add_argument("--depth", type=int, help="轨迹视界 d（默认 4n）")
    p.add_argument("--epsilon", type=float, default=1e-3, help="可镇定性阈值 ε（默认 1e-3）")
    p.add_argument("--y", help="共轭求值点，如 3,4")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    args = parser.parse_args(argv)

    os.makedirs("logs", exist_ok=True)
    setup_logging(args.verbose)

    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx)
    except ParseError as e:
        logger.error(f"输入解析失败: {e}")
        return EXIT_USAGE
    except (UsageError, DimensionMismatchError, ValueError) as e:
        logger.error(f"参数错误: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"文件读写失败: {e}")
        return EXIT_NOINPUT
    except ConsistencyError as e:
        logger.error(f"内部一致性错误: {e}")
        return EXIT_SOFTWARE
    except ConeLyapError as e:
        logger.error(f"计算失败: {e}")
        return Verdict.INCONCLUSIVE.exit_code


if __name__ == "__main__":
    sys.exit(main())
