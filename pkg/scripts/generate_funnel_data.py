"""
生成或校验漏斗模型的数据文件 assets/funnel_data.txt（种子固定，RandomState 数值流跨 numpy 版本不变）
"""

import argparse
import logging
import os
import sys

project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(project_root, 'src'))

from config import load_config
from targets.funnel import FUNNEL_DATA_SEED, generate_funnel_data, load_funnel_data, write_funnel_data
from utils.error_handler import DatasetError

logging.basicConfig(level=logging.INFO, format='%(levelname)s: %(message)s')
logger = logging.getLogger(__name__)


def main() -> int:
    config = load_config()
    parser = argparse.ArgumentParser(description="生成或校验漏斗数据文件")
    parser.add_argument("--out", default=config.funnel_data_path)
    parser.add_argument("--force", action="store_true", help="覆盖已有数据文件")
    args = parser.parse_args()

    if args.force and os.path.exists(args.out):
        write_funnel_data(args.out, generate_funnel_data())
        logger.info(f"✅ 已覆盖 {args.out}")
        return 0

    try:
        data = load_funnel_data(args.out)
    except DatasetError as e:
        logger.error(f"❌ {e}（使用 --force 重新生成）")
        return 1
    logger.info(f"✅ 漏斗数据 {args.out}: 种子 {FUNNEL_DATA_SEED}, {len(data)} 个观测")
    return 0


if __name__ == "__main__":
    sys.exit(main())
