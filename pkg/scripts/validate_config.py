"""
实验配置验证脚本
检查环境变量、数据集和YAML实验配置，不执行任何采样
"""

import os
import re
import sys
import logging
from typing import Callable, Dict, List, Optional, Tuple
from dataclasses import dataclass

# 添加项目路径
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)
    # 也添加src目录
    sys.path.insert(0, os.path.join(project_root, 'src'))

# 加载环境变量
from dotenv import load_dotenv
load_dotenv()

from config import Config
from harness.spec import load_experiment_spec
from targets.registry import dataset_available, target_names
from utils.error_handler import ConfigError

logging.basicConfig(level=logging.INFO, format='%(levelname)s: %(message)s')
logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# 校验函数：值合法时返回 None，否则返回错误说明
Check = Callable[[str], Optional[str]]


def existing_file(value: str) -> Optional[str]:
    return None if os.path.isfile(value) else f"文件不存在: {value}"


def writable_parent(value: str) -> Optional[str]:
    parent = os.path.dirname(os.path.abspath(value))
    while not os.path.exists(parent):
        parent = os.path.dirname(parent)
    return None if os.access(parent, os.W_OK) else f"目录不可写: {parent}"


def integer(minimum: int) -> Check:
    def check(value: str) -> Optional[str]:
        try:
            parsed = int(value)
        except ValueError:
            return f"不是整数: {value!r}"
        return None if parsed >= minimum else f"必须 ≥ {minimum}: {parsed}"
    return check


def log_level(value: str) -> Optional[str]:
    return None if value.upper() in LOG_LEVELS else f"未知日志级别 {value!r}，可用: {', '.join(LOG_LEVELS)}"


def sha256_hex(value: str) -> Optional[str]:
    return None if re.fullmatch(r"[0-9a-fA-F]{64}", value.strip()) else "不是64位十六进制 sha256"


@dataclass
class ConfigItem:
    """配置项（都有默认值，未设置不算失败；设置了就必须能被 Config 使用）"""
    key: str
    description: str
    check: Check
    example: str = ""


CONFIG_CHECKLIST: List[ConfigItem] = [
    ConfigItem(
        key="GERMAN_CREDIT_PATH",
        description="德国信贷数值格式数据文件",
        check=existing_file,
        example="assets/german.data-numeric"
    ),
    ConfigItem(
        key="GERMAN_CREDIT_SHA256",
        description="德国信贷数据的期望 sha256",
        check=sha256_hex,
    ),
    ConfigItem(
        key="FUNNEL_DATA_PATH",
        description="漏斗数据文件（不存在时按种子生成）",
        check=writable_parent,
        example="assets/funnel_data.txt"
    ),
    ConfigItem(key="LOG_LEVEL", description="日志级别", check=log_level, example="INFO"),
    ConfigItem(key="LOG_FILE", description="日志文件", check=writable_parent, example="logs/run.log"),
    ConfigItem(key="MAX_WORKERS", description="并行线程数", check=integer(1), example="4"),
    ConfigItem(key="OUTPUT_DIR", description="默认输出目录", check=writable_parent, example="results"),
    ConfigItem(key="ROOT_SEED", description="默认根种子", check=integer(0), example="0"),
]


class ConfigValidator:
    """配置验证器"""

    def __init__(self):
        self.results: Dict[str, Tuple[bool, str]] = {}

    def check_config_item(self, item: ConfigItem) -> Tuple[bool, str]:
        """检查单个配置项"""
        value = os.getenv(item.key)
        if value is None or value == "":
            return True, "ℹ️  使用默认值"
        problem = item.check(value)
        if problem:
            return False, f"❌ {problem}"
        return True, f"✅ 已设置: {value}"

    def validate_env(self) -> bool:
        logger.info("\n" + "=" * 60)
        logger.info("📋 环境变量检查")
        logger.info("=" * 60)
        for item in CONFIG_CHECKLIST:
            self.results[item.key] = self.check_config_item(item)
            _, message = self.results[item.key]
            logger.info(f"  {item.key}: {message}")
        return all(ok for ok, _ in self.results.values())

    def validate_spec(self, path: str) -> bool:
        """校验单个实验配置文件"""
        logger.info("\n" + "=" * 60)
        logger.info(f"🧪 实验配置: {path}")
        logger.info("=" * 60)
        try:
            spec = load_experiment_spec(path)
        except ConfigError as e:
            logger.error(f"❌ {e}")
            return False

        if spec.target.name not in target_names():
            logger.error(f"❌ 未知目标 {spec.target.name!r}，可用: {', '.join(target_names())}")
            return False
        if not dataset_available(spec.target.name, Config()):
            logger.error("❌ 德国信贷数据不存在，运行 python scripts/fetch_german_credit.py 或设置 GERMAN_CREDIT_PATH")
            return False

        logger.info(f"  目标: {spec.target.name}")
        logger.info(f"  方法: {[m.value for m in spec.methods]}")
        logger.info(f"  网格: N={spec.grid.n_particles}, k={spec.grid.mcmc_steps}, L={spec.replicates}")
        logger.info(f"  α: { {m.value: a for m, a in spec.alpha.items() if m in spec.methods} }")
        logger.info(f"  输出: {spec.output.dir}")
        logger.info("✅ 配置有效")
        return True


def main(argv: List[str]) -> int:
    """主函数"""
    if not argv:
        logger.error("用法: python scripts/validate_config.py <config.yaml> [...]")
        return 1

    validator = ConfigValidator()
    env_ok = validator.validate_env()
    ok = all([validator.validate_spec(path) for path in argv]) and env_ok

    if ok:
        logger.info("\n✅ 所有配置验证通过")
        return 0
    logger.error("\n❌ 配置验证失败，请根据提示修复问题")
    return 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
