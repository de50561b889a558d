"""
配置管理模块
统一管理运行时配置（数据集路径、并行度、随机种子、日志）
"""
import os
from typing import List, Optional

from dotenv import load_dotenv

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ASSETS_DIR = os.path.join(PROJECT_ROOT, "assets")

DEFAULT_GERMAN_CREDIT_PATH = os.path.join(ASSETS_DIR, "german.data-numeric")
DEFAULT_FUNNEL_DATA_PATH = os.path.join(ASSETS_DIR, "funnel_data.txt")


class Config:
    """配置管理类"""

    def __init__(self):
        # 数据集路径
        self.german_credit_path: str = os.getenv("GERMAN_CREDIT_PATH", DEFAULT_GERMAN_CREDIT_PATH)
        self.german_credit_sha256: Optional[str] = os.getenv("GERMAN_CREDIT_SHA256") or None
        self.funnel_data_path: str = os.getenv("FUNNEL_DATA_PATH", DEFAULT_FUNNEL_DATA_PATH)

        # 运行配置
        self.max_workers: int = int(os.getenv("MAX_WORKERS", "4"))
        self.output_dir: str = os.getenv("OUTPUT_DIR", "results")
        self.root_seed: int = int(os.getenv("ROOT_SEED", "0"))

        # 日志配置
        self.log_level: str = os.getenv("LOG_LEVEL", "INFO")
        self.log_file: Optional[str] = os.getenv("LOG_FILE") or None

    def is_complete(self) -> bool:
        """
        检查配置是否完整

        返回:
            True 如果所有数据集都可用
        """
        return not self.get_missing_configs()

    def get_missing_configs(self) -> List[str]:
        """
        获取缺失的配置项

        返回:
            缺失的配置项列表（只有德国信贷数据集需要手动下载）
        """
        missing = []

        if not os.path.exists(self.german_credit_path):
            missing.append("GERMAN_CREDIT_PATH")

        return missing

    def summary(self) -> str:
        """返回配置摘要"""
        return f"""
📋 配置摘要:
- 德国信贷数据: {self.german_credit_path} {'✅' if os.path.exists(self.german_credit_path) else '(未找到)'}
- 漏斗数据: {self.funnel_data_path}
- 最大并行数: {self.max_workers}
- 输出目录: {self.output_dir}
- 根种子: {self.root_seed}
- 日志级别: {self.log_level}
"""


def load_config(env_file: Optional[str] = None) -> Config:
    """
    从.env文件和环境变量加载配置

    参数:
        env_file: .env文件路径，为空时按python-dotenv默认规则查找
    """
    load_dotenv(env_file)
    return Config()
