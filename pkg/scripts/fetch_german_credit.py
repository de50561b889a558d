"""
下载德国信贷数据（数值格式，1000行×25列）
保存到 GERMAN_CREDIT_PATH（默认 assets/german.data-numeric），并校验 sha256

期望摘要按顺序取自 --sha256、GERMAN_CREDIT_SHA256、已有的 <out>.sha256 文件；
与期望不符的下载不会写入磁盘。三者都没有时首次下载写出 .sha256，之后的重新下载都按它校验
"""

import argparse
import hashlib
import logging
import os
import re
import sys
from typing import List, Optional

import requests
from tenacity import retry, stop_after_attempt, wait_exponential

project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(project_root, 'src'))

from config import load_config
from targets.german_credit import load_german_credit
from utils.error_handler import DatasetError

logging.basicConfig(level=logging.INFO, format='%(levelname)s: %(message)s')
logger = logging.getLogger(__name__)

DATA_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/german.data-numeric"
SHA256_PATTERN = re.compile(r"^[0-9a-f]{64}$")


@retry(stop=stop_after_attempt(3), wait=wait_exponential(multiplier=1, max=10), reraise=True)
def download(url: str) -> bytes:
    response = requests.get(url, timeout=30)
    response.raise_for_status()
    return response.content


def sidecar_path(path: str) -> str:
    return path + ".sha256"


def read_pinned_digest(path: str) -> Optional[str]:
    """读取 <path>.sha256 中记录的摘要，文件不存在时返回 None"""
    sidecar = sidecar_path(path)
    if not os.path.exists(sidecar):
        return None
    with open(sidecar, "r", encoding="utf-8") as f:
        fields = f.read().split()
    if not fields:
        raise DatasetError(f"empty digest file {sidecar}")
    return fields[0]


def expected_digest(cli_digest: Optional[str], env_digest: Optional[str], out: str) -> Optional[str]:
    """
    确定期望的 sha256

    参数:
        cli_digest: --sha256 参数
        env_digest: GERMAN_CREDIT_SHA256
        out: 数据文件路径（用于查找 .sha256）

    返回:
        小写十六进制摘要；没有任何来源时返回 None
    """
    digest = cli_digest or env_digest or read_pinned_digest(out)
    if digest is None:
        return None
    digest = digest.strip().lower()
    if not SHA256_PATTERN.match(digest):
        raise DatasetError(f"malformed sha256 pin: {digest!r}")
    return digest


def verify_digest(content: bytes, expected: Optional[str]) -> str:
    """计算摘要并与期望值比对，不符时抛出 DatasetError"""
    digest = hashlib.sha256(content).hexdigest()
    if expected is not None and digest != expected:
        raise DatasetError(f"sha256 mismatch: expected {expected}, got {digest}")
    return digest


def main(argv: Optional[List[str]] = None) -> int:
    config = load_config()
    parser = argparse.ArgumentParser(description="下载德国信贷数据")
    parser.add_argument("--url", default=DATA_URL)
    parser.add_argument("--out", default=config.german_credit_path)
    parser.add_argument("--sha256", default=None, help="期望的 sha256（覆盖 GERMAN_CREDIT_SHA256 和 .sha256 文件）")
    parser.add_argument("--force", action="store_true", help="已存在时也重新下载")
    args = parser.parse_args(argv)

    if os.path.exists(args.out) and not args.force:
        logger.info(f"ℹ️  已存在: {args.out}（使用 --force 重新下载）")
        return 0

    try:
        expected = expected_digest(args.sha256, config.german_credit_sha256, args.out)
    except DatasetError as e:
        logger.error(f"❌ {e}")
        return 1

    try:
        content = download(args.url)
    except requests.RequestException as e:
        logger.error(f"❌ 下载失败: {e}")
        return 1

    try:
        digest = verify_digest(content, expected)
    except DatasetError as e:
        logger.error(f"❌ 拒绝保存 {args.out}: {e}")
        return 1
    if expected is None:
        logger.warning(f"⚠️ 没有固定的 sha256，记录本次下载的摘要 {digest} 作为之后的校验值")

    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "wb") as f:
        f.write(content)

    # 下载后立即按加载规则校验
    try:
        load_german_credit(args.out)
    except DatasetError as e:
        logger.error(f"❌ 数据校验失败: {e}")
        return 1

    with open(sidecar_path(args.out), "w", encoding="utf-8") as f:
        f.write(f"{digest}  {os.path.basename(args.out)}\n")
    logger.info(f"✅ 已保存 {args.out} (sha256 {digest})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
