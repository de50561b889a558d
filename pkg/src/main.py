"""
命令行入口

    python src/main.py run --config config/experiments/gaussian_mixture.yaml --out results/mixture
    python src/main.py reference --target funnel --out results/funnel
    python src/main.py calibrate --target conjugate_gaussian --method ps --n 128 --k 20
    python src/main.py list-targets
"""

import argparse
import logging
import os
import sys
import traceback
from typing import List, Optional

import orjson

from config import load_config
from core.rng import StreamPurpose, make_stream
from harness.calibration import calibrate_alpha, pilot_cost
from harness.experiment import run_experiment
from harness.reference import run_reference, save_reference
from harness.report import emit_report
from harness.spec import BASELINE_ALPHA, CalibrationSection, ReferenceSection, load_experiment_spec
from samplers.config import Method
from targets.registry import build_target, list_targets, target_names
from utils.error_handler import ErrorHandler, SamplerError
from utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Persistent sampling / SMC benchmark harness")
    parser.add_argument("--log-level", type=str, default=None, help="日志级别，默认读取 LOG_LEVEL")
    parser.add_argument("--env-file", type=str, default=None, help=".env 文件路径")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="按配置文件执行成本匹配实验")
    run.add_argument("--config", required=True, help="YAML实验配置")
    run.add_argument("--out", default=None, help="输出目录（覆盖配置中的 output.dir）")
    run.add_argument("--workers", type=int, default=None, help="并行线程数，默认读取 MAX_WORKERS")
    run.add_argument("--seed", type=int, default=None, help="根种子（覆盖配置）")
    run.add_argument("--quiet", action="store_true", help="不显示进度条")

    ref = sub.add_parser("reference", help="执行参考运行并写出 reference.json")
    ref.add_argument("--target", required=True, choices=target_names())
    ref.add_argument("--out", required=True, help="输出目录")
    ref.add_argument("--n-ref", type=int, default=ReferenceSection().n_particles)
    ref.add_argument("--alpha-ref", type=float, default=ReferenceSection().alpha)
    ref.add_argument("--replicates", type=int, default=ReferenceSection().replicates)
    ref.add_argument("--k", type=int, default=ReferenceSection().mcmc_steps)
    ref.add_argument("--seed", type=int, default=None)
    ref.add_argument("--workers", type=int, default=None)

    cal = sub.add_parser("calibrate", help="标定 PS / WFSMC 的ESS阈值")
    cal.add_argument("--target", required=True, choices=target_names())
    cal.add_argument("--method", required=True, type=str.upper, choices=[Method.PS.value, Method.WFSMC.value])
    cal.add_argument("--n", type=int, required=True)
    cal.add_argument("--k", type=int, required=True)
    cal.add_argument("--pilot-runs", type=int, default=CalibrationSection().pilot_runs)
    cal.add_argument("--seed", type=int, default=None)

    sub.add_parser("list-targets", help="列出可用目标")
    return parser.parse_args(argv)


def cmd_run(args, config) -> int:
    spec = load_experiment_spec(args.config, overrides={"seed": args.seed, "out": args.out})
    workers = args.workers or config.max_workers
    report = run_experiment(spec, workers=workers, progress=not args.quiet and sys.stderr.isatty())
    emit_report(report, spec.output.dir)
    flagged = report.summary[~report.summary["parity_ok"]]
    if len(flagged):
        logger.warning(f"⚠️ {len(flagged)} 行未通过成本匹配检查")
    return 0


def cmd_reference(args, config) -> int:
    target = build_target(args.target, config=config)
    settings = ReferenceSection(
        n_particles=args.n_ref, alpha=args.alpha_ref, replicates=args.replicates, mcmc_steps=args.k,
    )
    seed = config.root_seed if args.seed is None else args.seed
    reference = run_reference(
        target, make_stream(seed, 0, StreamPurpose.REFERENCE), settings,
        workers=args.workers or config.max_workers,
    )
    save_reference(reference, os.path.join(args.out, "reference.json"))
    return 0


def cmd_calibrate(args, config) -> int:
    target = build_target(args.target, config=config)
    method = Method.parse(args.method)
    seed = config.root_seed if args.seed is None else args.seed
    pilot = make_stream(seed, 0, StreamPurpose.PILOT)
    baseline = pilot_cost(
        target, Method.SMC, args.n, args.k, BASELINE_ALPHA,
        pilot.child(Method.SMC.tag, args.n, args.k), args.pilot_runs,
    )
    result = calibrate_alpha(
        target, method, args.n, args.k, baseline, pilot.child(method.tag, args.n, args.k),
        CalibrationSection(pilot_runs=args.pilot_runs),
    )
    print(orjson.dumps({
        "target": args.target,
        "method": method.value,
        "n_particles": args.n,
        "mcmc_steps": args.k,
        "alpha": result.alpha,
        "baseline_evals": result.baseline_evals,
        "mean_evals": result.mean_evals,
        "parity_error": result.parity_error,
        "parity_ok": result.parity_ok,
        "probes": result.probes,
    }, option=orjson.OPT_INDENT_2).decode("utf-8"))
    return 0


def cmd_list_targets(args, config) -> int:
    for info in list_targets():
        analytic = "analytic" if info.has_analytic else "reference runs"
        print(f"{info.name:<20} dim={info.dim:<4} {analytic:<15} {info.description}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "reference": cmd_reference,
    "calibrate": cmd_calibrate,
    "list-targets": cmd_list_targets,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    config = load_config(args.env_file)
    setup_logging(
        log_level=args.log_level or config.log_level,
        log_file=config.log_file,
        max_bytes=100 * 1024 * 1024,  # 100MB
        backup_count=5,
        use_json_format=False,
        console_output=True,
    )

    try:
        return COMMANDS[args.command](args, config)
    except SamplerError as e:
        ErrorHandler().handle_error(e, f"{args.command} failed", {"command": args.command})
        return 1
    except Exception:
        logger.error(f"❌ {args.command} 异常退出:\n{traceback.format_exc()}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
