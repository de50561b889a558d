"""
日志配置
控制台 + 滚动文件，可选JSON行格式
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

import orjson

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class JsonLineFormatter(logging.Formatter):
    """每条日志输出为一行JSON"""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": self.formatTime(record),
            "logger": record.name,
            "level": record.levelname,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return orjson.dumps(payload).decode("utf-8")


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    max_bytes: int = 100 * 1024 * 1024,  # 100MB
    backup_count: int = 5,
    use_json_format: bool = False,
    console_output: bool = True
) -> None:
    """
    配置根日志器

    参数:
        log_level: 日志级别
        log_file: 日志文件路径，为空时不写文件
        max_bytes: 单个日志文件最大字节数
        backup_count: 保留的滚动文件数
        use_json_format: 是否输出JSON行
        console_output: 是否输出到控制台
    """
    root = logging.getLogger()
    root.setLevel(log_level.upper())

    for handler in list(root.handlers):
        root.removeHandler(handler)

    formatter = JsonLineFormatter() if use_json_format else logging.Formatter(LOG_FORMAT)

    if console_output:
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(formatter)
        root.addHandler(console)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding="utf-8"
        )
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
