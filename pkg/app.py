"""
凯勒几何数值实验室 - 命令行入口
读取场景文件，执行检查，写出报告、轨迹与汇总表
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

# 导入配置
from config import CLI_CONFIG, LOGGING_CONFIG

from errors import ScenarioError
from data.scenarios import list_scenarios, load_scenario
from data.writers import (
    write_reports_json, write_residuals_csv, write_solution_csv, write_summary, write_table_csv, write_trajectory_csv,
)
from components.reports import LEVEL_NAMES, get_worst_report, reports_to_frame
from components.tasks import TaskResult, run_task

logger = logging.getLogger(__name__)


# =============================================================================
# 场景执行
# =============================================================================

def write_outputs(name: str, result: TaskResult, out_dir: Path, meta: Dict, plot: bool = False) -> None:
    """写出一个场景的报告与数据文件"""
    scenario_dir = out_dir / name
    write_reports_json(result.reports, scenario_dir / "reports.json", meta=meta)
    for label, traj in result.trajectories.items():
        write_trajectory_csv(traj, scenario_dir / f"{label}.csv")
    for solution in result.solutions:
        stem = f"wu_yau_t{solution.t:g}"
        write_solution_csv(solution, scenario_dir / f"{stem}.csv")
        write_residuals_csv(solution, scenario_dir / f"{stem}_newton.csv")
    for label, table in result.tables.items():
        write_table_csv(table, scenario_dir / f"{label}.csv")
    if plot:
        # plotly 只在出图时需要
        from components.charts import create_residual_chart, create_trajectory_chart, save_chart
        for label, traj in result.trajectories.items():
            save_chart(create_trajectory_chart(traj, title=f"{name}: {label}"), scenario_dir / f"{label}.html")
        for solution in result.solutions:
            save_chart(create_residual_chart(solution), scenario_dir / f"wu_yau_t{solution.t:g}_newton.html")


def run_scenario(
    path,
    task: Optional[str] = None,
    seed: Optional[int] = None,
    out_dir=None,
    tolerance_scale: float = 1.0,
    plot: bool = False,
) -> pd.DataFrame:
    """
    执行单个场景

    Args:
        path: 场景文件
        task: 命令行动词；给定时须与场景中的 task 一致
        seed: 覆盖场景中的随机种子
        out_dir: 输出目录，None 时不写文件
        tolerance_scale: 全部容差的缩放系数
        plot: 是否写出 HTML 图表

    Returns:
        该场景的汇总表

    Raises:
        ScenarioError: 场景文件无效或与动词不符
    """
    scenario = load_scenario(path)
    if task is not None and scenario.task != task:
        raise ScenarioError(scenario.path, "task", f"scenario declares '{scenario.task}', command is '{task}'")
    if seed is not None:
        scenario.seed = seed
    logger.info("running %s: %s on %s", scenario.name, scenario.task, scenario.spec.describe())
    result = run_task(scenario, tolerance_scale=tolerance_scale)
    frame = reports_to_frame(result.reports, scenario=scenario.name)

    worst = get_worst_report(result.reports)
    if worst is not None:
        logger.info("%s: %d checks, worst %s (%s)", scenario.name, len(result.reports), LEVEL_NAMES[worst.level], worst.name)

    if out_dir is not None:
        meta = {
            "scenario": scenario.name,
            "path": str(scenario.path),
            "task": scenario.task,
            "manifold": scenario.spec.describe(),
            "seed": scenario.seed,
            "tolerance_scale": tolerance_scale,
        }
        write_outputs(scenario.name, result, Path(out_dir), meta, plot=plot)
    return frame


def run_suite(
    directory,
    seed: Optional[int] = None,
    out_dir=None,
    tolerance_scale: float = 1.0,
    plot: bool = False,
) -> pd.DataFrame:
    """
    执行目录下全部场景（按文件名排序）并汇总

    Raises:
        ScenarioError: 任一场景文件无效
    """
    paths = list_scenarios(directory)
    if not paths:
        logger.warning("no scenarios found in %s", directory)
        return reports_to_frame([])
    frames = [
        run_scenario(path, seed=seed, out_dir=out_dir, tolerance_scale=tolerance_scale, plot=plot)
        for path in paths
    ]
    return pd.concat(frames, ignore_index=True)


def exit_code(frame: pd.DataFrame) -> int:
    """任一检查失败时返回 1"""
    if frame.empty or bool(frame["passed"].all()):
        return CLI_CONFIG["EXIT_PASS"]
    return CLI_CONFIG["EXIT_FAIL"]


# =============================================================================
# 命令行
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kahler-lab",
        description="Numerical checks for Kaehler curvature bounds, Ricci flows and Chern-Weil inequalities.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out", default=CLI_CONFIG["DEFAULT_OUT"], help="output directory")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance")
    common.add_argument("--plot", action="store_true", help="write plotly HTML charts")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    for task in CLI_CONFIG["TASKS"]:
        cmd = sub.add_parser(task, parents=[common], help=f"run a '{task}' scenario")
        cmd.add_argument("scenario", help="scenario JSON file")
    suite = sub.add_parser("suite", parents=[common], help="run every scenario in a directory")
    suite.add_argument("directory", help="directory of scenario JSON files")
    return parser


def setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOGGING_CONFIG["LEVEL"])
    logging.basicConfig(level=level, format=LOGGING_CONFIG["FORMAT"])


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.tolerance_scale > 0:
        parser.error("--tolerance-scale must be positive")
    setup_logging(args.verbose)
    out_dir = Path(args.out)
    try:
        if args.command == "suite":
            frame = run_suite(args.directory, seed=args.seed, out_dir=out_dir,
                              tolerance_scale=args.tolerance_scale, plot=args.plot)
        else:
            frame = run_scenario(args.scenario, task=args.command, seed=args.seed, out_dir=out_dir,
                                 tolerance_scale=args.tolerance_scale, plot=args.plot)
    except ScenarioError as exc:
        logger.error("%s", exc)
        return CLI_CONFIG["EXIT_CONFIG"]

    paths = write_summary(frame, out_dir)
    if args.plot and not frame.empty:
        from components.charts import create_summary_chart, save_chart
        save_chart(create_summary_chart(frame), out_dir / "summary.html")
    print(paths["text"].read_text(encoding="utf-8"), end="")
    code = exit_code(frame)
    if code != CLI_CONFIG["EXIT_PASS"]:
        failed = frame[~frame["passed"]]
        logger.warning("%d of %d checks failed", len(failed), len(frame))
    return code


if __name__ == "__main__":
    sys.exit(main())
