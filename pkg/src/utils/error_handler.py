"""
错误分级处理系统
采样器异常体系 + 错误分类、记录与统计
"""

import logging
import traceback
from enum import Enum
from typing import Optional, Dict, List, Any
from datetime import datetime
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


class SamplerError(Exception):
    """所有采样器相关异常的基类"""


class EmptyInputError(SamplerError, ValueError):
    """空输入（例如空向量的log-sum-exp）"""


class DegenerateWeightsError(SamplerError, ValueError):
    """权重全部为 -inf：先验与后验完全不重叠"""


class InvalidWeightsError(SamplerError, ValueError):
    """权重非法：出现NaN/+inf、负数、全零或未归一化"""


class NonFiniteInputError(SamplerError, ValueError):
    """输入中出现NaN或无穷值"""


class DegenerateEnsembleError(SamplerError):
    """粒子集合退化，协方差无法分解"""


class CorruptEvidenceError(SamplerError, ValueError):
    """历史证据估计 log Z_s 中出现非有限值"""


class DatasetError(SamplerError):
    """数据文件形状或内容错误"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class CalibrationError(SamplerError, ValueError):
    """ESS阈值标定的误用"""


class ConfigError(SamplerError, ValueError):
    """实验配置非法"""


class ErrorLevel(Enum):
    """错误级别"""
    FATAL = 1    # 致命错误：整个实验无法继续
    ERROR = 2    # 严重错误：单个重复实验失败
    WARN = 3     # 警告：结果可用但需要关注
    INFO = 4


class ErrorCategory(Enum):
    """错误类别"""
    NUMERIC = "numeric"            # 数值问题（权重退化、协方差奇异）
    DATA = "data"                  # 数据集相关
    CONFIG = "config"              # 配置相关
    IO = "io"                      # 文件读写
    SYSTEM = "system"              # 其他


@dataclass
class ErrorRecord:
    """错误记录"""
    level: ErrorLevel
    category: ErrorCategory
    message: str
    exception: Optional[Exception] = None
    stack_trace: Optional[str] = None
    timestamp: datetime = field(default_factory=datetime.now)
    context: Dict[str, Any] = field(default_factory=dict)


class ErrorClassifier:
    """错误分类器"""

    EXCEPTION_CATEGORIES = {
        DegenerateWeightsError: ErrorCategory.NUMERIC,
        DegenerateEnsembleError: ErrorCategory.NUMERIC,
        CorruptEvidenceError: ErrorCategory.NUMERIC,
        InvalidWeightsError: ErrorCategory.NUMERIC,
        NonFiniteInputError: ErrorCategory.NUMERIC,
        EmptyInputError: ErrorCategory.NUMERIC,
        FloatingPointError: ErrorCategory.NUMERIC,
        DatasetError: ErrorCategory.DATA,
        ConfigError: ErrorCategory.CONFIG,
        CalibrationError: ErrorCategory.CONFIG,
        OSError: ErrorCategory.IO,
    }

    @classmethod
    def classify_error(cls, error: Exception) -> ErrorCategory:
        """按异常类型分类，按继承顺序匹配"""
        for exc_type, category in cls.EXCEPTION_CATEGORIES.items():
            if isinstance(error, exc_type):
                return category
        return ErrorCategory.SYSTEM

    @classmethod
    def determine_level(cls, error: Exception, category: ErrorCategory) -> ErrorLevel:
        """确定错误级别"""
        if isinstance(error, MemoryError):
            return ErrorLevel.FATAL

        # 配置和数据错误会让所有重复实验失败
        if category in (ErrorCategory.CONFIG, ErrorCategory.DATA, ErrorCategory.IO):
            return ErrorLevel.FATAL

        if category == ErrorCategory.NUMERIC:
            return ErrorLevel.ERROR

        return ErrorLevel.WARN


class ErrorHandler:
    """错误处理器 - 统一的错误记录入口"""

    def __init__(self):
        self.classifier = ErrorClassifier()
        self.error_history: List[ErrorRecord] = []
        self.error_counts: Dict[str, int] = {}

    def handle_error(
        self,
        error: Exception,
        message: str,
        context: Dict[str, Any] = None
    ) -> ErrorRecord:
        """
        处理错误：分类、记录日志、计数

        参数:
            error: 异常对象
            message: 错误消息
            context: 上下文信息（方法、N、k、重复编号等）

        返回:
            错误记录
        """
        category = self.classifier.classify_error(error)
        level = self.classifier.determine_level(error, category)

        error_record = ErrorRecord(
            level=level,
            category=category,
            message=message,
            exception=error,
            stack_trace=traceback.format_exc(),
            context=context or {}
        )

        self.error_history.append(error_record)

        error_key = f"{category.value}:{level.name}"
        self.error_counts[error_key] = self.error_counts.get(error_key, 0) + 1

        log_method = {
            ErrorLevel.FATAL: logger.critical,
            ErrorLevel.ERROR: logger.error,
            ErrorLevel.WARN: logger.warning,
            ErrorLevel.INFO: logger.info
        }.get(level, logger.info)

        log_method(
            f"[{level.name}] {category.value}: {message} ({error})\n"
            f"Context: {error_record.context}"
        )

        return error_record

    def get_error_stats(self) -> Dict[str, Any]:
        """获取错误统计"""
        return {
            "total_errors": len(self.error_history),
            "error_counts": dict(self.error_counts),
            "fatal_errors": len([e for e in self.error_history if e.level == ErrorLevel.FATAL])
        }
